//! Line-level actions, their multiset algebra, and the merge-effort measure.
//!
//! A diff between two snapshots is turned into a multiset of `Add`/`Remove`
//! actions keyed by path and exact line bytes. The effort of a merge is the
//! size of what the merge diff contains beyond the two branch diffs:
//!
//! ```text
//! actions_merge    = diff(base, merge)
//! actions_branches = diff(base, parent1) ⊎ diff(base, parent2)
//! effort           = |actions_merge ∖ actions_branches|
//! ```

use std::collections::btree_map::{self, BTreeMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use similar::{Algorithm, DiffOp};

use crate::error::Error;
use crate::sha::Sha;

/// Files larger than this are skipped unless configured otherwise.
pub const DEFAULT_MAX_FILE_BYTES: u64 = 10 * 1024 * 1024;

/// Same window git uses when sniffing for binary content.
const BINARY_SNIFF_BYTES: usize = 8000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Add,
    Remove,
}

impl ActionKind {
    fn flipped(self) -> Self {
        match self {
            ActionKind::Add => ActionKind::Remove,
            ActionKind::Remove => ActionKind::Add,
        }
    }
}

/// One added or removed line. Line bytes are compared exactly, without any
/// whitespace folding, and never include the trailing newline.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action {
    pub kind: ActionKind,
    pub path: String,
    pub line: Vec<u8>,
}

impl Action {
    pub fn new(kind: ActionKind, path: impl Into<String>, line: impl Into<Vec<u8>>) -> Self {
        Action { kind, path: path.into(), line: line.into() }
    }

    pub fn add(path: impl Into<String>, line: impl Into<Vec<u8>>) -> Self {
        Self::new(ActionKind::Add, path, line)
    }

    pub fn remove(path: impl Into<String>, line: impl Into<Vec<u8>>) -> Self {
        Self::new(ActionKind::Remove, path, line)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.kind {
            ActionKind::Add => '+',
            ActionKind::Remove => '-',
        };
        write!(f, "{sign}{}:{}", self.path, String::from_utf8_lossy(&self.line))
    }
}

/// Multiset of actions. Entries with multiplicity zero are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ActionMultiset {
    counts: BTreeMap<Action, u64>,
    cardinality: u64,
}

impl ActionMultiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, action: Action, n: u64) {
        if n == 0 {
            return;
        }
        *self.counts.entry(action).or_insert(0) += n;
        self.cardinality += n;
    }

    pub fn count(&self, action: &Action) -> u64 {
        self.counts.get(action).copied().unwrap_or(0)
    }

    /// Sum of all multiplicities.
    pub fn cardinality(&self) -> u64 {
        self.cardinality
    }

    /// Number of distinct actions.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Action, u64)> {
        self.counts.iter().map(|(a, &n)| (a, n))
    }

    /// Pointwise addition of multiplicities.
    pub fn sum(&self, other: &ActionMultiset) -> ActionMultiset {
        let (mut out, rhs) =
            if self.counts.len() >= other.counts.len() { (self.clone(), other) } else { (other.clone(), self) };
        for (action, n) in rhs.iter() {
            out.insert(action.clone(), n);
        }
        out
    }

    /// Saturating pointwise subtraction: `max(0, self(k) - other(k))`.
    pub fn minus(&self, other: &ActionMultiset) -> ActionMultiset {
        let mut out = ActionMultiset::new();
        for (action, n) in self.iter() {
            let left = n.saturating_sub(other.count(action));
            out.insert(action.clone(), left);
        }
        out
    }

    pub fn is_submultiset_of(&self, other: &ActionMultiset) -> bool {
        self.iter().all(|(a, n)| n <= other.count(a))
    }

    /// Actions of the given kind, as a multiset over `(path, line)`.
    pub fn of_kind(&self, kind: ActionKind) -> BTreeMap<(&str, &[u8]), u64> {
        self.counts
            .iter()
            .filter(|(a, _)| a.kind == kind)
            .map(|(a, &n)| ((a.path.as_str(), a.line.as_slice()), n))
            .collect()
    }
}

impl FromIterator<Action> for ActionMultiset {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut out = ActionMultiset::new();
        for a in iter {
            out.insert(a, 1);
        }
        out
    }
}

impl<'a> IntoIterator for &'a ActionMultiset {
    type Item = (&'a Action, &'a u64);
    type IntoIter = btree_map::Iter<'a, Action, u64>;

    fn into_iter(self) -> Self::IntoIter {
        self.counts.iter()
    }
}

pub fn multiset_sum(a: &ActionMultiset, b: &ActionMultiset) -> ActionMultiset {
    a.sum(b)
}

pub fn multiset_minus(a: &ActionMultiset, b: &ActionMultiset) -> ActionMultiset {
    a.minus(b)
}

/// Splits on `\n`. A missing final newline does not create an extra line, and
/// the empty input has no lines.
pub fn split_lines(content: &[u8]) -> Vec<&[u8]> {
    if content.is_empty() {
        return Vec::new();
    }
    let body = content.strip_suffix(b"\n").unwrap_or(content);
    body.split(|&b| b == b'\n').collect()
}

pub fn is_binary(content: &[u8]) -> bool {
    content[..content.len().min(BINARY_SNIFF_BYTES)].contains(&0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffOptions {
    /// Drop the path from action identity.
    pub ignore_paths: bool,
    pub max_file_bytes: u64,
}

impl Default for DiffOptions {
    fn default() -> Self {
        DiffOptions { ignore_paths: false, max_file_bytes: DEFAULT_MAX_FILE_BYTES }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    Binary,
    TooLarge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: SkipReason,
}

/// Accumulates actions file by file.
#[derive(Debug, Clone, Default)]
pub struct ActionCollector {
    opts: DiffOptions,
    actions: ActionMultiset,
    skipped: Vec<SkippedFile>,
}

impl ActionCollector {
    pub fn new(opts: DiffOptions) -> Self {
        ActionCollector { opts, ..Default::default() }
    }

    /// Diffs one file. A side that does not exist is passed as empty content.
    pub fn file(&mut self, path: &str, old: &[u8], new: &[u8]) {
        let too_large = |c: &[u8]| c.len() as u64 > self.opts.max_file_bytes;
        let reason = if too_large(old) || too_large(new) {
            Some(SkipReason::TooLarge)
        } else if is_binary(old) || is_binary(new) {
            Some(SkipReason::Binary)
        } else {
            None
        };
        if let Some(reason) = reason {
            self.skipped.push(SkippedFile { path: path.to_string(), reason });
            return;
        }
        let key = if self.opts.ignore_paths { "" } else { path };
        diff_lines_into(key, old, new, &mut self.actions);
    }

    pub fn skip(&mut self, path: &str, reason: SkipReason) {
        self.skipped.push(SkippedFile { path: path.to_string(), reason });
    }

    pub fn finish(self) -> (ActionMultiset, Vec<SkippedFile>) {
        (self.actions, self.skipped)
    }
}

/// Line diff of one file into `out`.
///
/// Myers minimal diff, no rename or whitespace handling. The pair is diffed
/// in a canonical orientation (smaller side first) so that `diff(a, b)` and
/// `diff(b, a)` are exact mirrors even when several minimal scripts exist.
pub fn diff_lines_into(path: &str, old: &[u8], new: &[u8], out: &mut ActionMultiset) {
    if old == new {
        return;
    }
    let old_lines = split_lines(old);
    let new_lines = split_lines(new);
    let (from, to, mirrored) =
        if old_lines <= new_lines { (&old_lines, &new_lines, false) } else { (&new_lines, &old_lines, true) };
    let orient = |k: ActionKind| if mirrored { k.flipped() } else { k };

    for op in similar::capture_diff_slices(Algorithm::Myers, from, to) {
        let (removed, added) = match op {
            DiffOp::Equal { .. } => continue,
            DiffOp::Delete { old_index, old_len, .. } => (old_index..old_index + old_len, 0..0),
            DiffOp::Insert { new_index, new_len, .. } => (0..0, new_index..new_index + new_len),
            DiffOp::Replace { old_index, old_len, new_index, new_len } => {
                (old_index..old_index + old_len, new_index..new_index + new_len)
            }
        };
        for i in removed {
            out.insert(Action::new(orient(ActionKind::Remove), path, from[i]), 1);
        }
        for i in added {
            out.insert(Action::new(orient(ActionKind::Add), path, to[i]), 1);
        }
    }
}

pub fn diff_lines(path: &str, old: &[u8], new: &[u8]) -> ActionMultiset {
    let mut out = ActionMultiset::new();
    diff_lines_into(path, old, new, &mut out);
    out
}

/// An in-memory tree: path to file content.
pub type Snapshot = BTreeMap<String, Vec<u8>>;

/// Diff of two snapshots with no rename detection: a moved file shows up as
/// removals at the old path and additions at the new one.
pub fn diff_snapshots(old: &Snapshot, new: &Snapshot, opts: DiffOptions) -> (ActionMultiset, Vec<SkippedFile>) {
    let mut collector = ActionCollector::new(opts);
    let mut paths: Vec<&String> = old.keys().chain(new.keys()).collect();
    paths.sort();
    paths.dedup();
    for path in paths {
        let a = old.get(path).map(Vec::as_slice).unwrap_or_default();
        let b = new.get(path).map(Vec::as_slice).unwrap_or_default();
        if a != b {
            collector.file(path, a, b);
        }
    }
    collector.finish()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffortMode {
    /// `|merge ∖ branches|`
    #[default]
    MergeMinusBranches,
    /// `|merge ∖ branches| + |branches ∖ merge|`, which also counts branch
    /// work discarded while resolving a conflict.
    Symmetric,
}

impl EffortMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EffortMode::MergeMinusBranches => "merge-minus-branches",
            EffortMode::Symmetric => "symmetric",
        }
    }
}

impl fmt::Display for EffortMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EffortMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "merge-minus-branches" => Ok(EffortMode::MergeMinusBranches),
            "symmetric" => Ok(EffortMode::Symmetric),
            other => Err(Error::Config(format!("unknown effort mode {other:?}"))),
        }
    }
}

/// The intermediate multisets of one effort computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffortBreakdown {
    pub actions_merge: ActionMultiset,
    pub actions_branches: ActionMultiset,
    /// Actions in the merge that neither branch performed.
    pub extra: ActionMultiset,
    /// Branch actions that did not survive into the merge.
    pub discarded: ActionMultiset,
}

impl EffortBreakdown {
    pub fn new(actions_merge: ActionMultiset, branch1: &ActionMultiset, branch2: &ActionMultiset) -> Self {
        let actions_branches = branch1.sum(branch2);
        let extra = actions_merge.minus(&actions_branches);
        let discarded = actions_branches.minus(&actions_merge);
        EffortBreakdown { actions_merge, actions_branches, extra, discarded }
    }

    pub fn effort(&self, mode: EffortMode) -> u64 {
        match mode {
            EffortMode::MergeMinusBranches => self.extra.cardinality(),
            EffortMode::Symmetric => self.extra.cardinality() + self.discarded.cardinality(),
        }
    }
}

/// Per-merge effort record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffortResult {
    pub project: String,
    pub merge_sha: Sha,
    pub effort: u64,
    pub mode: EffortMode,
    pub actions_merge_size: u64,
    pub actions_branches_size: u64,
}

impl EffortResult {
    pub fn from_breakdown(
        project: impl Into<String>,
        merge_sha: Sha,
        breakdown: &EffortBreakdown,
        mode: EffortMode,
    ) -> Self {
        EffortResult {
            project: project.into(),
            merge_sha,
            effort: breakdown.effort(mode),
            mode,
            actions_merge_size: breakdown.actions_merge.cardinality(),
            actions_branches_size: breakdown.actions_branches.cardinality(),
        }
    }
}
