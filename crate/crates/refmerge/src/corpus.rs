//! Corpus selection from a repository snapshot: search criteria, metadata
//! filters, then the valid-merge-count cuts.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use log::{info, warn};
use refmerge_core::corpus::{
    apply_metadata_filters, parse_repo_lines, select_corpus, CorpusFilter, FenceStats, RepoMeta,
};
use refmerge_core::graph::Validity;
use serde::{Deserialize, Serialize};

use crate::config::CorpusConfig;
use crate::error::{Error, Result};
use crate::git::History;
use crate::github::{fetch_candidate_repos, HttpTransport, RecordingTransport, ReplayTransport};

pub const REPOS_FILE: &str = "repos.jsonl";
pub const GRAPHQL_FILE: &str = "graphql.jsonl";
pub const COUNTS_FILE: &str = "valid_merges.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub as_of: DateTime<Utc>,
    pub filter: CorpusFilter,
    pub candidates: usize,
    pub after_search: usize,
    pub after_metadata: usize,
    pub fences: Option<FenceStats>,
    pub dropped_above: Vec<String>,
    pub dropped_below: Vec<String>,
    /// Metadata survivors with no known valid-merge count.
    pub missing_counts: Vec<String>,
    pub kept: Vec<RepoMeta>,
}

pub struct CorpusRequest<'a> {
    pub config: &'a CorpusConfig,
    pub fixtures: &'a Path,
    /// Query GitHub and record the exchange into `fixtures`.
    pub fetch: bool,
    /// Directory of clones named `owner__name`, used to count valid merges.
    pub clones: Option<&'a Path>,
}

fn ensure_unique(repos: &[RepoMeta]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for r in repos {
        if r.owner_and_name.is_empty() {
            return Err(Error::Input("repository with an empty name".into()));
        }
        if !seen.insert(&r.owner_and_name) {
            return Err(Error::Input(format!("repository {} listed twice", r.owner_and_name)));
        }
    }
    Ok(())
}

/// Number of valid merges reachable from the default branch.
pub fn count_valid_merges(repo: &Path) -> Result<u64> {
    let history = History::open(repo)?;
    Ok(history.enumerate_merges()?.iter().filter(|s| s.validity == Validity::Valid).count() as u64)
}

fn clone_dir(clones: &Path, name: &str) -> Option<PathBuf> {
    let stem = name.replace('/', "__");
    [clones.join(&stem), clones.join(format!("{stem}.git"))].into_iter().find(|p| p.exists())
}

pub fn run_corpus(req: &CorpusRequest<'_>) -> Result<CorpusReport> {
    let filter = &req.config.filter;
    let as_of = req.config.as_of.unwrap_or_else(Utc::now);
    let graphql = req.fixtures.join(GRAPHQL_FILE);
    let repos_file = req.fixtures.join(REPOS_FILE);

    let (candidates, searched) = if req.fetch {
        std::fs::create_dir_all(req.fixtures).map_err(|e| Error::io(req.fixtures, e))?;
        let transport = RecordingTransport::new(HttpTransport::from_env()?);
        let repos = fetch_candidate_repos(&transport, filter, as_of)?;
        transport.save(&graphql)?;
        crate::pipeline::write_jsonl(&repos_file, &repos)?;
        (repos.len(), repos)
    } else if graphql.is_file() {
        let repos = fetch_candidate_repos(&ReplayTransport::load(&graphql)?, filter, as_of)?;
        (repos.len(), repos)
    } else {
        let text = std::fs::read_to_string(&repos_file).map_err(|e| Error::io(&repos_file, e))?;
        let all = parse_repo_lines(&text)?;
        let n = all.len();
        let mut kept: Vec<RepoMeta> = all.into_iter().filter(|r| filter.matches_search(r, as_of)).collect();
        kept.sort_by(|a, b| a.owner_and_name.cmp(&b.owner_and_name));
        (n, kept)
    };
    ensure_unique(&searched)?;
    let metadata = apply_metadata_filters(&searched, filter);
    info!(
        "{candidates} candidates, {} after search criteria, {} after metadata filters",
        searched.len(),
        metadata.len()
    );

    let counts_path = req.fixtures.join(COUNTS_FILE);
    let mut counts: BTreeMap<String, u64> = if counts_path.is_file() {
        let text = std::fs::read_to_string(&counts_path).map_err(|e| Error::io(&counts_path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", counts_path.display())))?
    } else {
        BTreeMap::new()
    };
    if let Some(clones) = req.clones {
        for r in &metadata {
            if let Some(dir) = clone_dir(clones, &r.owner_and_name) {
                counts.insert(r.owner_and_name.clone(), count_valid_merges(&dir)?);
            }
        }
    }

    let mut with_counts = Vec::new();
    let mut missing_counts = Vec::new();
    for r in &metadata {
        match counts.get(&r.owner_and_name) {
            Some(&n) => with_counts.push((r.clone(), n)),
            None => missing_counts.push(r.owner_and_name.clone()),
        }
    }
    if !missing_counts.is_empty() {
        warn!("{} repositories have no valid-merge count and are left out", missing_counts.len());
    }
    let selection = select_corpus(&with_counts);
    Ok(CorpusReport {
        as_of,
        filter: filter.clone(),
        candidates,
        after_search: searched.len(),
        after_metadata: metadata.len(),
        fences: selection.fences,
        dropped_above: selection.dropped_above,
        dropped_below: selection.dropped_below,
        missing_counts,
        kept: selection.kept,
    })
}
