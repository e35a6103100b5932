//! Repository corpus selection: metadata filters and outlier trimming on the
//! distribution of valid merge counts.
//!
//! Quartiles use linear interpolation between closest ranks: for sorted
//! values `x[0..n]` the `p`-quantile sits at position `h = (n - 1)·p` and is
//! `x[⌊h⌋] + (h - ⌊h⌋)·(x[⌊h⌋ + 1] - x[⌊h⌋])`. This is the default of numpy,
//! R (type 7) and common boxplot tooling.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoMeta {
    pub owner_and_name: String,
    pub stars: u64,
    pub is_fork: bool,
    pub is_archived: bool,
    pub last_push: DateTime<Utc>,
    pub contributors: u64,
    pub default_branch_commits: u64,
    pub primary_language: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusFilter {
    pub min_stars: u64,
    pub min_contributors: u64,
    pub min_commits: u64,
    pub language: String,
    pub max_push_age_days: u64,
    /// Repositories excluded after manual inspection.
    pub deny_list: BTreeSet<String>,
}

impl Default for CorpusFilter {
    fn default() -> Self {
        CorpusFilter {
            min_stars: 5000,
            min_contributors: 10,
            min_commits: 5000,
            language: "Java".into(),
            max_push_age_days: 90,
            deny_list: BTreeSet::new(),
        }
    }
}

impl CorpusFilter {
    /// The search-stage criteria: popularity, activity, not a fork, not
    /// archived.
    pub fn matches_search(&self, repo: &RepoMeta, as_of: DateTime<Utc>) -> bool {
        let recent = i64::try_from(self.max_push_age_days)
            .ok()
            .and_then(Duration::try_days)
            .is_none_or(|max_age| as_of - repo.last_push <= max_age);
        !repo.is_fork && !repo.is_archived && repo.stars >= self.min_stars && recent
    }

    pub fn matches_metadata(&self, repo: &RepoMeta) -> bool {
        repo.contributors >= self.min_contributors
            && repo.default_branch_commits >= self.min_commits
            && repo.primary_language == self.language
            && !self.deny_list.contains(&repo.owner_and_name)
    }
}

/// Keeps repositories passing the contributor, commit, language and deny
/// list criteria, preserving order.
pub fn apply_metadata_filters(repos: &[RepoMeta], filter: &CorpusFilter) -> Vec<RepoMeta> {
    repos.iter().filter(|r| filter.matches_metadata(r)).cloned().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FenceStats {
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub upper_fence: f64,
}

/// `p`-quantile of already sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Domain("quantile of an empty sample".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("quantile level {p} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    Ok(match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    })
}

/// Quartiles and Tukey's upper fence `q3 + 1.5·iqr`.
pub fn tukey_fences(values: &[u64]) -> Result<FenceStats> {
    if values.is_empty() {
        return Err(Error::Domain("tukey fences of an empty sample".into()));
    }
    let mut sorted: Vec<f64> = values.iter().map(|&v| v as f64).collect();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25)?;
    let q3 = quantile_sorted(&sorted, 0.75)?;
    let iqr = q3 - q1;
    Ok(FenceStats { q1, q3, iqr, upper_fence: q3 + 1.5 * iqr })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSelection {
    pub fences: Option<FenceStats>,
    pub kept: Vec<RepoMeta>,
    /// Count above the upper fence.
    pub dropped_above: Vec<String>,
    /// Count below the first quartile.
    pub dropped_below: Vec<String>,
}

/// Drops repositories whose valid merge count lies above the upper fence,
/// then those below the first quartile. Both limits come from the full
/// input distribution.
pub fn select_corpus(repos: &[(RepoMeta, u64)]) -> CorpusSelection {
    let counts: Vec<u64> = repos.iter().map(|(_, n)| *n).collect();
    let Ok(fences) = tukey_fences(&counts) else {
        return CorpusSelection {
            fences: None,
            kept: Vec::new(),
            dropped_above: Vec::new(),
            dropped_below: Vec::new(),
        };
    };
    let mut selection = CorpusSelection {
        fences: Some(fences),
        kept: Vec::new(),
        dropped_above: Vec::new(),
        dropped_below: Vec::new(),
    };
    for (repo, n) in repos {
        let n = *n as f64;
        if n > fences.upper_fence {
            selection.dropped_above.push(repo.owner_and_name.clone());
        } else if n < fences.q1 {
            selection.dropped_below.push(repo.owner_and_name.clone());
        } else {
            selection.kept.push(repo.clone());
        }
    }
    selection
}

/// Reads one `RepoMeta` per line; blank lines are ignored.
pub fn parse_repo_lines(text: &str) -> Result<Vec<RepoMeta>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Domain(format!("repository record on line {}: {e}", i + 1)))
        })
        .collect()
}
