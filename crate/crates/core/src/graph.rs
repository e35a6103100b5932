//! In-memory commit DAG: merge enumeration, merge bases, merge
//! classification and attribution of commits to the two sides of a merge.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sha::Sha;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRef {
    pub sha: Sha,
    /// Parents in the order git recorded them.
    pub parents: Vec<Sha>,
    pub author_time: DateTime<Utc>,
    pub project: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    Valid,
    NoFastForward,
    Octopus,
    NoCommonAncestor,
}

impl Validity {
    pub const ALL: [Validity; 4] =
        [Validity::Valid, Validity::NoFastForward, Validity::Octopus, Validity::NoCommonAncestor];

    pub fn as_str(self) -> &'static str {
        match self {
            Validity::Valid => "valid",
            Validity::NoFastForward => "no-fast-forward",
            Validity::Octopus => "octopus",
            Validity::NoCommonAncestor => "no-common-ancestor",
        }
    }

    pub fn parse(s: &str) -> Option<Validity> {
        Validity::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

impl fmt::Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeScenario {
    pub merge: CommitRef,
    pub parent1: Sha,
    pub parent2: Sha,
    pub base: Option<Sha>,
    pub validity: Validity,
    /// More than one best common ancestor existed; `base` is the
    /// lexicographically smallest of them.
    pub criss_cross: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchAttribution {
    pub scenario: MergeScenario,
    pub b1_commits: BTreeSet<Sha>,
    pub b2_commits: BTreeSet<Sha>,
    /// Commits reachable from both parents but not from the base. They are
    /// attributed to branch 1 only.
    pub shared_commits: usize,
}

/// Dense bit set over node indices.
#[derive(Clone, PartialEq, Eq)]
struct NodeSet(Vec<u64>);

impl NodeSet {
    fn new(n: usize) -> Self {
        NodeSet(vec![0; n.div_ceil(64)])
    }
    fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let fresh = self.0[w] & b == 0;
        self.0[w] |= b;
        fresh
    }
    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1u64 << (i % 64)) != 0
    }
    fn intersect(&self, other: &NodeSet) -> NodeSet {
        NodeSet(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(w, &word)| (0..64).filter(move |b| word & (1u64 << b) != 0).map(move |b| w * 64 + b))
    }
    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }
}

#[derive(Debug, Clone)]
pub struct CommitGraph {
    commits: Vec<CommitRef>,
    parents: Vec<Vec<usize>>,
    index: HashMap<Sha, usize>,
    /// Parents before children; ties broken by ascending sha.
    topo: Vec<usize>,
}

impl CommitGraph {
    /// Builds the graph. Every parent must itself be present.
    pub fn new(commits: impl IntoIterator<Item = CommitRef>) -> Result<Self> {
        let mut commits: Vec<CommitRef> = commits.into_iter().collect();
        commits.sort_by_key(|c| c.sha);
        let mut index = HashMap::with_capacity(commits.len());
        for (i, c) in commits.iter().enumerate() {
            if index.insert(c.sha, i).is_some() {
                return Err(Error::Domain(format!("duplicate commit {}", c.sha)));
            }
        }
        let mut parents = Vec::with_capacity(commits.len());
        for c in &commits {
            let mut ps = Vec::with_capacity(c.parents.len());
            for p in &c.parents {
                if *p == c.sha {
                    return Err(Error::Domain(format!("commit {} lists itself as parent", c.sha)));
                }
                let pi = *index.get(p).ok_or(Error::UnknownCommit(*p))?;
                if ps.contains(&pi) {
                    return Err(Error::Domain(format!("commit {} lists parent {p} twice", c.sha)));
                }
                ps.push(pi);
            }
            parents.push(ps);
        }
        let topo = topological_order(&commits, &parents)?;
        Ok(CommitGraph { commits, parents, index, topo })
    }

    pub fn len(&self) -> usize {
        self.commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    pub fn get(&self, sha: &Sha) -> Option<&CommitRef> {
        self.index.get(sha).map(|&i| &self.commits[i])
    }

    /// Commits in topological order (parents first, ties by sha).
    pub fn commits(&self) -> impl Iterator<Item = &CommitRef> {
        self.topo.iter().map(|&i| &self.commits[i])
    }

    fn idx(&self, sha: &Sha) -> Result<usize> {
        self.index.get(sha).copied().ok_or(Error::UnknownCommit(*sha))
    }

    fn reach(&self, starts: impl IntoIterator<Item = usize>) -> NodeSet {
        let mut seen = NodeSet::new(self.commits.len());
        let mut stack: Vec<usize> = Vec::new();
        for s in starts {
            if seen.insert(s) {
                stack.push(s);
            }
        }
        while let Some(i) = stack.pop() {
            for &p in &self.parents[i] {
                if seen.insert(p) {
                    stack.push(p);
                }
            }
        }
        seen
    }

    fn to_shas(&self, set: &NodeSet) -> BTreeSet<Sha> {
        set.iter().map(|i| self.commits[i].sha).collect()
    }

    /// All ancestors of `sha`, including `sha` itself.
    pub fn ancestors(&self, sha: &Sha) -> Result<BTreeSet<Sha>> {
        let i = self.idx(sha)?;
        Ok(self.to_shas(&self.reach([i])))
    }

    /// True when `ancestor` is reachable from `descendant` (or equal to it).
    pub fn is_ancestor(&self, ancestor: &Sha, descendant: &Sha) -> Result<bool> {
        let a = self.idx(ancestor)?;
        let d = self.idx(descendant)?;
        Ok(self.reach([d]).contains(a))
    }

    fn best_common_ancestors(&self, p1: usize, p2: usize) -> (NodeSet, NodeSet, Vec<usize>) {
        let anc1 = self.reach([p1]);
        let anc2 = self.reach([p2]);
        let common = anc1.intersect(&anc2);
        // Anything that is a proper ancestor of a common ancestor is not best.
        let dominated = self.reach(common.iter().flat_map(|c| self.parents[c].iter().copied()));
        let mut best: Vec<usize> = common.iter().filter(|&c| !dominated.contains(c)).collect();
        best.sort_by_key(|&i| self.commits[i].sha);
        (anc1, anc2, best)
    }

    /// Every best common ancestor of the two commits, sorted by sha.
    pub fn merge_bases(&self, a: &Sha, b: &Sha) -> Result<Vec<Sha>> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        let (_, _, best) = self.best_common_ancestors(ia, ib);
        Ok(best.into_iter().map(|i| self.commits[i].sha).collect())
    }

    /// The best common ancestor with the smallest sha, or `None` for
    /// disjoint histories.
    pub fn merge_base(&self, a: &Sha, b: &Sha) -> Result<Option<Sha>> {
        Ok(self.merge_bases(a, b)?.into_iter().next())
    }

    /// Builds and classifies the scenario for one merge commit.
    pub fn scenario(&self, merge: &Sha) -> Result<MergeScenario> {
        let mi = self.idx(merge)?;
        let commit = &self.commits[mi];
        let ps = &self.parents[mi];
        if ps.len() < 2 {
            return Err(Error::ContractViolation(format!("{merge} is not a merge commit")));
        }
        let (p1, p2) = (ps[0], ps[1]);
        let mut scenario = MergeScenario {
            merge: commit.clone(),
            parent1: self.commits[p1].sha,
            parent2: self.commits[p2].sha,
            base: None,
            validity: Validity::Octopus,
            criss_cross: false,
        };
        if ps.len() > 2 {
            return Ok(scenario);
        }
        let (anc1, anc2, best) = self.best_common_ancestors(p1, p2);
        scenario.base = best.first().map(|&i| self.commits[i].sha);
        scenario.criss_cross = best.len() > 1;
        scenario.validity = if anc1.contains(p2) || anc2.contains(p1) {
            Validity::NoFastForward
        } else if best.is_empty() {
            Validity::NoCommonAncestor
        } else {
            Validity::Valid
        };
        Ok(scenario)
    }

    /// Re-derives the validity of a scenario from the graph.
    pub fn classify_merge(&self, scenario: &MergeScenario) -> Result<Validity> {
        Ok(self.scenario(&scenario.merge.sha)?.validity)
    }

    /// One scenario per commit with two or more parents reachable from
    /// `head`, in topological order with sha tie-breaks.
    pub fn enumerate_merges(&self, head: &Sha) -> Result<Vec<MergeScenario>> {
        let reachable = self.reach([self.idx(head)?]);
        self.topo
            .iter()
            .filter(|&&i| reachable.contains(i) && self.parents[i].len() >= 2)
            .map(|&i| self.scenario(&self.commits[i].sha))
            .collect()
    }

    /// Splits the commits introduced by each side of a valid merge.
    ///
    /// `b1 = ancestors(parent1) ∖ ancestors(base)` and
    /// `b2 = ancestors(parent2) ∖ ancestors(base) ∖ b1`.
    pub fn attribute_branch_commits(&self, scenario: &MergeScenario) -> Result<BranchAttribution> {
        let base = match (scenario.validity, scenario.base) {
            (Validity::Valid, Some(base)) => base,
            _ => {
                return Err(Error::ContractViolation(format!(
                    "branch attribution requires a valid merge, {} is {}",
                    scenario.merge.sha, scenario.validity
                )))
            }
        };
        let anc_base = self.reach([self.idx(&base)?]);
        let side = |p: &Sha| -> Result<NodeSet> {
            let mut s = self.reach([self.idx(p)?]);
            for (w, b) in s.0.iter_mut().zip(&anc_base.0) {
                *w &= !b;
            }
            Ok(s)
        };
        let s1 = side(&scenario.parent1)?;
        let mut s2 = side(&scenario.parent2)?;
        let shared = s1.intersect(&s2);
        let shared_commits = shared.iter().count();
        if !shared.is_empty() {
            for (w, b) in s2.0.iter_mut().zip(&s1.0) {
                *w &= !b;
            }
        }
        let mut b1_commits = self.to_shas(&s1);
        let mut b2_commits = self.to_shas(&s2);
        b1_commits.remove(&scenario.merge.sha);
        b2_commits.remove(&scenario.merge.sha);
        Ok(BranchAttribution { scenario: scenario.clone(), b1_commits, b2_commits, shared_commits })
    }
}

fn topological_order(commits: &[CommitRef], parents: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = commits.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pending: Vec<usize> = vec![0; n];
    for (i, ps) in parents.iter().enumerate() {
        pending[i] = ps.len();
        for &p in ps {
            children[p].push(i);
        }
    }
    // Indices are already sorted by sha, so ordering by index orders by sha.
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(i)) = ready.pop() {
        order.push(i);
        for &c in &children[i] {
            pending[c] -= 1;
            if pending[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() != n {
        return Err(Error::Domain("commit graph contains a cycle".into()));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Deterministic fake sha derived from a label.
    pub(crate) fn sha(label: &str) -> Sha {
        let mut bytes = [0u8; 20];
        for (i, b) in label.bytes().enumerate() {
            bytes[i % 20] ^= b;
            bytes[19 - (i % 20)] = bytes[19 - (i % 20)].wrapping_add(b.wrapping_mul(31));
        }
        Sha::from_bytes(bytes)
    }

    fn graph(edges: &[(&str, &[&str])]) -> CommitGraph {
        CommitGraph::new(edges.iter().map(|(c, ps)| CommitRef {
            sha: sha(c),
            parents: ps.iter().map(|p| sha(p)).collect(),
            author_time: DateTime::<Utc>::UNIX_EPOCH,
            project: "t".into(),
        }))
        .unwrap()
    }

    #[test]
    fn linear_history_has_no_merges() {
        let g = graph(&[("a", &[]), ("b", &["a"]), ("c", &["b"])]);
        assert!(g.enumerate_merges(&sha("c")).unwrap().is_empty());
    }

    #[test]
    fn ancestor_parent_is_its_own_base() {
        let g = graph(&[("a", &[]), ("b", &["a"]), ("c", &["b"])]);
        assert_eq!(g.merge_base(&sha("c"), &sha("b")).unwrap(), Some(sha("b")));
    }

    #[test]
    fn diamond() {
        let g = graph(&[("base", &[]), ("a", &["base"]), ("b", &["base"]), ("m", &["a", "b"])]);
        assert_eq!(g.merge_base(&sha("a"), &sha("b")).unwrap(), Some(sha("base")));
        let s = g.scenario(&sha("m")).unwrap();
        assert_eq!(s.validity, Validity::Valid);
        assert!(!s.criss_cross);
        let attr = g.attribute_branch_commits(&s).unwrap();
        assert_eq!(attr.b1_commits, BTreeSet::from([sha("a")]));
        assert_eq!(attr.b2_commits, BTreeSet::from([sha("b")]));
    }

    #[test]
    fn no_fast_forward_either_direction() {
        let g = graph(&[("a", &[]), ("b", &["a"]), ("m1", &["a", "b"]), ("m2", &["b", "a"])]);
        assert_eq!(g.scenario(&sha("m1")).unwrap().validity, Validity::NoFastForward);
        assert_eq!(g.scenario(&sha("m2")).unwrap().validity, Validity::NoFastForward);
    }

    #[test]
    fn disjoint_roots() {
        let g = graph(&[("r1", &[]), ("r2", &[]), ("m", &["r1", "r2"])]);
        let s = g.scenario(&sha("m")).unwrap();
        assert_eq!(s.validity, Validity::NoCommonAncestor);
        assert_eq!(s.base, None);
        assert!(g.attribute_branch_commits(&s).is_err());
    }

    #[test]
    fn octopus_regardless_of_ancestry() {
        let g = graph(&[("a", &[]), ("b", &["a"]), ("c", &["a"]), ("m", &["a", "b", "c"])]);
        let s = g.scenario(&sha("m")).unwrap();
        assert_eq!(s.validity, Validity::Octopus);
        assert_eq!((s.parent1, s.parent2), (sha("a"), sha("b")));
    }

    #[test]
    fn branch_sizes() {
        let g = graph(&[
            ("base", &[]),
            ("x1", &["base"]),
            ("x2", &["x1"]),
            ("x3", &["x2"]),
            ("y1", &["base"]),
            ("y2", &["y1"]),
            ("m", &["x3", "y2"]),
        ]);
        let s = g.scenario(&sha("m")).unwrap();
        let attr = g.attribute_branch_commits(&s).unwrap();
        assert_eq!((attr.b1_commits.len(), attr.b2_commits.len()), (3, 2));
        assert_eq!(attr.shared_commits, 0);
    }

    #[test]
    fn criss_cross_tie_break_and_dedup() {
        // root -> a, b ; x = merge(a, b), y = merge(b, a); tips off x and y.
        let g = graph(&[
            ("root", &[]),
            ("a", &["root"]),
            ("b", &["root"]),
            ("x", &["a", "b"]),
            ("y", &["b", "a"]),
            ("t1", &["x"]),
            ("t2", &["y"]),
            ("m", &["t1", "t2"]),
        ]);
        let bases = g.merge_bases(&sha("t1"), &sha("t2")).unwrap();
        let mut expect = vec![sha("a"), sha("b")];
        expect.sort();
        assert_eq!(bases, expect);
        let s = g.scenario(&sha("m")).unwrap();
        assert!(s.criss_cross);
        assert_eq!(s.base, Some(expect[0]));
        assert_eq!(s.validity, Validity::Valid);
        let attr = g.attribute_branch_commits(&s).unwrap();
        let other = expect[1];
        assert!(attr.b1_commits.contains(&other));
        assert!(!attr.b2_commits.contains(&other));
        assert!(attr.b1_commits.is_disjoint(&attr.b2_commits));
        assert_eq!(attr.shared_commits, 1);
    }

    #[test]
    fn topological_order_is_parents_first() {
        let g = graph(&[("c", &["b"]), ("b", &["a"]), ("a", &[])]);
        let order: Vec<Sha> = g.commits().map(|c| c.sha).collect();
        assert_eq!(order, vec![sha("a"), sha("b"), sha("c")]);
    }

    #[test]
    fn unknown_and_malformed_inputs() {
        let g = graph(&[("a", &[])]);
        assert!(matches!(g.merge_base(&sha("a"), &sha("zz")), Err(Error::UnknownCommit(_))));
        let bad = CommitGraph::new([CommitRef {
            sha: sha("a"),
            parents: vec![sha("missing")],
            author_time: DateTime::<Utc>::UNIX_EPOCH,
            project: "t".into(),
        }]);
        assert!(bad.is_err());
    }
}
