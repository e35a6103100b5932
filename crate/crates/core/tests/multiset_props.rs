use proptest::prelude::*;
use refmerge_core::effort::{
    diff_lines, multiset_minus, multiset_sum, split_lines, Action, ActionKind, ActionMultiset, EffortBreakdown,
    EffortMode,
};

fn action() -> impl Strategy<Value = Action> {
    (prop::bool::ANY, 0..3u8, 0..4u8).prop_map(|(add, f, l)| {
        let kind = if add { ActionKind::Add } else { ActionKind::Remove };
        Action::new(kind, format!("f{f}"), format!("line{l}"))
    })
}

fn multiset() -> impl Strategy<Value = ActionMultiset> {
    prop::collection::vec((action(), 1..4u64), 0..8).prop_map(|items| {
        let mut m = ActionMultiset::new();
        for (a, n) in items {
            m.insert(a, n);
        }
        m
    })
}

/// Expands a multiset into a flat list, one element per unit of multiplicity.
fn to_bag(m: &ActionMultiset) -> Vec<Action> {
    m.iter().flat_map(|(a, n)| std::iter::repeat_n(a.clone(), n as usize)).collect()
}

/// Removes one matching element of `bag` for every element of `remove`.
fn bag_remove(mut bag: Vec<Action>, remove: &[Action]) -> Vec<Action> {
    for r in remove {
        if let Some(pos) = bag.iter().position(|x| x == r) {
            bag.swap_remove(pos);
        }
    }
    bag.sort();
    bag
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sum_laws(a in multiset(), b in multiset(), c in multiset()) {
        prop_assert_eq!(multiset_sum(&a, &b), multiset_sum(&b, &a));
        prop_assert_eq!(multiset_sum(&multiset_sum(&a, &b), &c), multiset_sum(&a, &multiset_sum(&b, &c)));
        prop_assert_eq!(multiset_sum(&ActionMultiset::new(), &a), a.clone());
        prop_assert_eq!(multiset_sum(&a, &b).cardinality(), a.cardinality() + b.cardinality());
        let mut concat = to_bag(&a);
        concat.extend(to_bag(&b));
        concat.sort();
        prop_assert_eq!(to_bag(&multiset_sum(&a, &b)), concat);
    }

    #[test]
    fn minus_laws(a in multiset(), b in multiset()) {
        let d = multiset_minus(&a, &b);
        for (k, _) in a.iter().chain(b.iter()) {
            prop_assert_eq!(d.count(k), a.count(k).saturating_sub(b.count(k)));
        }
        prop_assert!(d.iter().all(|(_, n)| n > 0));
        prop_assert_eq!(multiset_minus(&multiset_sum(&a, &b), &b), a.clone());
        prop_assert!(multiset_minus(&a, &a).is_empty());
        prop_assert_eq!(to_bag(&d), bag_remove(to_bag(&a), &to_bag(&b)));
    }
}

fn text() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", ""]), 0..10).prop_map(|lines| {
        let mut out = Vec::new();
        for l in lines {
            out.extend_from_slice(l.as_bytes());
            out.push(b'\n');
        }
        out
    })
}

fn lcs_len(a: &[&[u8]], b: &[&[u8]]) -> usize {
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..a.len() {
        for j in 0..b.len() {
            dp[i + 1][j + 1] = if a[i] == b[j] { dp[i][j] + 1 } else { dp[i][j + 1].max(dp[i + 1][j]) };
        }
    }
    dp[a.len()][b.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn diff_is_minimal(old in text(), new in text()) {
        let d = diff_lines("f", &old, &new);
        let (ol, nl) = (split_lines(&old), split_lines(&new));
        let lcs = lcs_len(&ol, &nl);
        let removes: u64 = d.of_kind(ActionKind::Remove).values().sum();
        let adds: u64 = d.of_kind(ActionKind::Add).values().sum();
        prop_assert_eq!(removes as usize, ol.len() - lcs);
        prop_assert_eq!(adds as usize, nl.len() - lcs);
    }

    #[test]
    fn diff_is_mirrored(old in text(), new in text()) {
        let fwd = diff_lines("f", &old, &new);
        let bwd = diff_lines("f", &new, &old);
        prop_assert_eq!(fwd.of_kind(ActionKind::Add), bwd.of_kind(ActionKind::Remove));
        prop_assert_eq!(fwd.of_kind(ActionKind::Remove), bwd.of_kind(ActionKind::Add));
    }

    #[test]
    fn effort_is_zero_when_merge_is_covered(a in multiset(), b in multiset(), pick in prop::collection::vec(prop::bool::ANY, 16)) {
        // any sub-multiset of the branch actions is free
        let branches = multiset_sum(&a, &b);
        let mut merge = ActionMultiset::new();
        for (i, x) in to_bag(&branches).into_iter().enumerate() {
            if pick[i % pick.len()] {
                merge.insert(x, 1);
            }
        }
        let bd = EffortBreakdown::new(merge, &a, &b);
        prop_assert_eq!(bd.effort(EffortMode::MergeMinusBranches), 0);
        prop_assert!(bd.effort(EffortMode::Symmetric) <= branches.cardinality());
    }

    #[test]
    fn effort_bounded_by_merge(m in multiset(), a in multiset(), b in multiset()) {
        let bd = EffortBreakdown::new(m.clone(), &a, &b);
        prop_assert!(bd.effort(EffortMode::MergeMinusBranches) <= m.cardinality());
        prop_assert!(bd.effort(EffortMode::Symmetric) >= bd.effort(EffortMode::MergeMinusBranches));
    }
}
