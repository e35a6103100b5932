//! Reading commit graphs and tree diffs out of an on-disk repository.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use git2::{Delta, DiffOptions as GitDiffOptions, FileMode, ObjectType, Oid, Repository};
use log::{debug, warn};
use refmerge_core::effort::{
    ActionCollector, ActionMultiset, DiffOptions, EffortBreakdown, EffortMode, EffortResult, SkipReason, SkippedFile,
};
use refmerge_core::graph::{CommitGraph, CommitRef, MergeScenario, Validity};
use refmerge_core::Sha;

use crate::error::{Error, Result, ResultExt};

pub fn oid_to_sha(oid: Oid) -> Sha {
    let mut bytes = [0u8; 20];
    bytes.copy_from_slice(oid.as_bytes());
    Sha::from_bytes(bytes)
}

pub fn sha_to_oid(sha: &Sha) -> Oid {
    Oid::from_bytes(sha.as_bytes()).expect("20-byte oid")
}

/// Directory name with any `.git` suffix removed.
pub fn project_name(path: &Path) -> String {
    let canonical = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    let mut dir = canonical.as_path();
    if dir.file_name().is_some_and(|n| n == ".git") {
        dir = dir.parent().unwrap_or(dir);
    }
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(".git").map(str::to_string).unwrap_or(name)
}

/// A repository together with its default-branch history.
pub struct History {
    repo: Repository,
    path: PathBuf,
    project: String,
    head: Sha,
    graph: CommitGraph,
}

impl History {
    pub fn open(path: &Path) -> Result<History> {
        let repo = Repository::open(path).context(|| format!("opening {}", path.display()))?;
        let head = default_head(&repo)?;
        let project = project_name(path);
        let graph = load_graph(&repo, &project, head).context(|| format!("reading history of {}", path.display()))?;
        Ok(History { repo, path: path.to_path_buf(), project, head, graph })
    }

    pub fn repo(&self) -> &Repository {
        &self.repo
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn project(&self) -> &str {
        &self.project
    }

    pub fn head(&self) -> Sha {
        self.head
    }

    pub fn graph(&self) -> &CommitGraph {
        &self.graph
    }

    /// Every merge reachable from the default branch head, topologically
    /// ordered.
    pub fn enumerate_merges(&self) -> Result<Vec<MergeScenario>> {
        Ok(self.graph.enumerate_merges(&self.head)?)
    }

    pub fn diff_actions(&self, from: &Sha, to: &Sha, opts: DiffOptions) -> Result<(ActionMultiset, Vec<SkippedFile>)> {
        diff_actions(&self.repo, from, to, opts)
    }

    pub fn effort_breakdown(
        &self,
        scenario: &MergeScenario,
        opts: DiffOptions,
    ) -> Result<(EffortBreakdown, Vec<SkippedFile>)> {
        let base = match (scenario.validity, scenario.base) {
            (Validity::Valid, Some(base)) => base,
            _ => {
                return Err(refmerge_core::Error::ContractViolation(format!(
                    "merge effort of {} which is {}",
                    scenario.merge.sha, scenario.validity
                ))
                .into())
            }
        };
        let (merge, mut skipped) = self.diff_actions(&base, &scenario.merge.sha, opts)?;
        let (b1, s1) = self.diff_actions(&base, &scenario.parent1, opts)?;
        let (b2, s2) = self.diff_actions(&base, &scenario.parent2, opts)?;
        skipped.extend(s1);
        skipped.extend(s2);
        skipped.sort_by(|a, b| a.path.cmp(&b.path));
        skipped.dedup();
        Ok((EffortBreakdown::new(merge, &b1, &b2), skipped))
    }

    pub fn merge_effort(&self, scenario: &MergeScenario, mode: EffortMode, opts: DiffOptions) -> Result<EffortResult> {
        let (breakdown, skipped) = self
            .effort_breakdown(scenario, opts)
            .context(|| format!("{} merge {}", self.project, scenario.merge.sha))?;
        for s in &skipped {
            debug!("{}: skipped {} ({:?}) in merge {}", self.project, s.path, s.reason, scenario.merge.sha.short());
        }
        Ok(EffortResult::from_breakdown(&self.project, scenario.merge.sha, &breakdown, mode))
    }
}

/// The commit HEAD points at, falling back to `origin/HEAD`.
pub fn default_head(repo: &Repository) -> Result<Sha> {
    let direct = repo.head().ok().and_then(|h| h.peel_to_commit().ok());
    let commit = match direct {
        Some(c) => c,
        None => repo.find_reference("refs/remotes/origin/HEAD").and_then(|r| r.peel_to_commit()).map_err(|_| {
            Error::Config("repository has no default branch (HEAD and origin/HEAD unresolvable)".into())
        })?,
    };
    Ok(oid_to_sha(commit.id()))
}

/// Loads every commit reachable from `head`.
pub fn load_graph(repo: &Repository, project: &str, head: Sha) -> Result<CommitGraph> {
    let mut walk = repo.revwalk()?;
    walk.push(sha_to_oid(&head))?;
    let mut commits = Vec::new();
    for oid in walk {
        let commit = repo.find_commit(oid?)?;
        let time = commit.author().when();
        let author_time = DateTime::<Utc>::from_timestamp(time.seconds(), 0)
            .ok_or_else(|| Error::Repository(format!("commit {} has an out-of-range timestamp", commit.id())))?;
        commits.push(CommitRef {
            sha: oid_to_sha(commit.id()),
            parents: commit.parent_ids().map(oid_to_sha).collect(),
            author_time,
            project: project.to_string(),
        });
    }
    CommitGraph::new(commits).map_err(|e| match e {
        refmerge_core::Error::UnknownCommit(sha) => {
            Error::Repository(format!("parent {sha} is missing from the object database (shallow clone?)"))
        }
        other => other.into(),
    })
}

/// Line actions between the trees of two commits. Rename detection is off,
/// submodules are ignored, and binary or oversized files are skipped.
pub fn diff_actions(
    repo: &Repository,
    from: &Sha,
    to: &Sha,
    opts: DiffOptions,
) -> Result<(ActionMultiset, Vec<SkippedFile>)> {
    let lookup = |sha: &Sha| {
        repo.find_commit(sha_to_oid(sha)).map_err(|_| Error::Core(refmerge_core::Error::UnknownCommit(*sha)))
    };
    let old_tree = lookup(from)?.tree()?;
    let new_tree = lookup(to)?.tree()?;
    let mut git_opts = GitDiffOptions::new();
    git_opts.ignore_submodules(true).context_lines(0);
    let diff = repo.diff_tree_to_tree(Some(&old_tree), Some(&new_tree), Some(&mut git_opts))?;

    let odb = repo.odb()?;
    let mut collector = ActionCollector::new(opts);
    for delta in diff.deltas() {
        if matches!(delta.status(), Delta::Unmodified) {
            continue;
        }
        let (old, new) = (delta.old_file(), delta.new_file());
        if old.mode() == FileMode::Commit || new.mode() == FileMode::Commit {
            continue;
        }
        let path_bytes = new.path_bytes().or_else(|| old.path_bytes()).unwrap_or_default();
        let path = String::from_utf8_lossy(path_bytes).into_owned();

        let size = |oid: Oid| -> Result<u64> {
            if oid.is_zero() {
                return Ok(0);
            }
            let (size, kind) = odb.read_header(oid)?;
            if kind != ObjectType::Blob {
                return Err(Error::Repository(format!("{path}: object {oid} is not a blob")));
            }
            Ok(size as u64)
        };
        if size(old.id())?.max(size(new.id())?) > opts.max_file_bytes {
            warn!("skipping {path}: larger than {} bytes", opts.max_file_bytes);
            collector.skip(&path, SkipReason::TooLarge);
            continue;
        }
        let content = |oid: Oid| -> Result<Vec<u8>> {
            if oid.is_zero() {
                return Ok(Vec::new());
            }
            Ok(repo.find_blob(oid)?.content().to_vec())
        };
        collector.file(&path, &content(old.id())?, &content(new.id())?);
    }
    Ok(collector.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn project_names() {
        assert_eq!(project_name(Path::new("/nonexistent/foo.git")), "foo");
        assert_eq!(project_name(Path::new("/nonexistent/bar/.git")), "bar");
        assert_eq!(project_name(Path::new("/nonexistent/baz")), "baz");
    }

    #[test]
    fn oid_round_trip() {
        let sha = Sha::parse("0123456789abcdef0123456789abcdef01234567").unwrap();
        assert_eq!(oid_to_sha(sha_to_oid(&sha)), sha);
        assert_eq!(sha_to_oid(&sha).to_string(), sha.to_hex());
    }
}
