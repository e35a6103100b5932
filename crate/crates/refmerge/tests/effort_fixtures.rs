use refmerge::config::EffortConfig;
use refmerge::fixture::{build_effort_fixtures, lines, snapshot, FixtureRepo};
use refmerge::git::History;
use refmerge::pipeline::{analyze_repo, RecordsSource};
use refmerge_core::effort::{Action, ActionMultiset, DiffOptions, EffortMode, SkipReason};
use refmerge_core::graph::Validity;
use refmerge_core::Sha;

fn effort_of(history: &History, merge: Sha, mode: EffortMode) -> u64 {
    let scenario = history.graph().scenario(&merge).unwrap();
    history.merge_effort(&scenario, mode, DiffOptions::default()).unwrap().effort
}

#[test]
fn hand_built_merges_have_the_expected_effort() {
    let dir = tempfile::tempdir().unwrap();
    let (_fx, f) = build_effort_fixtures(dir.path()).unwrap();
    let history = History::open(dir.path()).unwrap();
    let cases = [
        ("disjoint", f.disjoint, 0, 0),
        ("same file", f.same_file, 0, 0),
        ("novel resolution", f.novel_resolution, 1, 4),
        ("one side kept", f.one_side, 0, 2),
    ];
    for (name, sha, minus, symmetric) in cases {
        assert_eq!(effort_of(&history, sha, EffortMode::MergeMinusBranches), minus, "{name}");
        assert_eq!(effort_of(&history, sha, EffortMode::Symmetric), symmetric, "{name} symmetric");
    }
}

#[test]
fn novel_resolution_breakdown_names_the_new_line() {
    let dir = tempfile::tempdir().unwrap();
    let (_fx, f) = build_effort_fixtures(dir.path()).unwrap();
    let history = History::open(dir.path()).unwrap();
    let scenario = history.graph().scenario(&f.novel_resolution).unwrap();
    let (breakdown, skipped) = history.effort_breakdown(&scenario, DiffOptions::default()).unwrap();
    assert!(skipped.is_empty());
    let mut extra = ActionMultiset::new();
    extra.insert(Action::add("src/conflict.txt", "B3"), 1);
    assert_eq!(breakdown.extra, extra);
    assert_eq!(breakdown.actions_merge.cardinality(), 2);
    assert_eq!(breakdown.actions_branches.cardinality(), 4);
}

#[test]
fn excluded_merges_are_classified_and_not_measured() {
    let dir = tempfile::tempdir().unwrap();
    let (_fx, f) = build_effort_fixtures(dir.path()).unwrap();
    let history = History::open(dir.path()).unwrap();
    let octopus = history.graph().scenario(&f.octopus).unwrap();
    assert_eq!(octopus.validity, Validity::Octopus);
    let nff = history.graph().scenario(&f.no_fast_forward).unwrap();
    assert_eq!(nff.validity, Validity::NoFastForward);
    let err = history.merge_effort(&nff, EffortMode::MergeMinusBranches, DiffOptions::default());
    assert!(err.is_err());

    let analysis = analyze_repo(dir.path(), RecordsSource::None, &EffortConfig::default(), None).unwrap();
    assert_eq!(analysis.validity.enumerated, 6);
    assert_eq!(analysis.validity.valid, 4);
    assert_eq!(analysis.validity.octopus, 1);
    assert_eq!(analysis.validity.no_fast_forward, 1);
    assert!(analysis.validity.is_conserved());
    assert_eq!(analysis.rows.len(), 4);
    let efforts: Vec<u64> = analysis.rows.iter().map(|r| r.effort).collect();
    assert_eq!(efforts.iter().sum::<u64>(), 1);
}

fn two_commits(before: &[(&str, &[u8])], after: &[(&str, &[u8])]) -> (tempfile::TempDir, Sha, Sha) {
    let dir = tempfile::tempdir().unwrap();
    let mut fx = FixtureRepo::init(dir.path()).unwrap();
    let to_snapshot = |files: &[(&str, &[u8])]| files.iter().map(|(p, c)| (p.to_string(), c.to_vec())).collect();
    let a = fx.commit(&[], &to_snapshot(before), "before").unwrap();
    let b = fx.commit(&[a], &to_snapshot(after), "after").unwrap();
    fx.set_branch("main", b).unwrap();
    (dir, a, b)
}

fn actions(items: &[Action]) -> ActionMultiset {
    let mut m = ActionMultiset::new();
    for a in items {
        m.insert(a.clone(), 1);
    }
    m
}

#[test]
fn diff_of_identical_trees_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let mut fx = FixtureRepo::init(dir.path()).unwrap();
    let tree = snapshot([("f.txt", "a\nb\n")]);
    let a = fx.commit(&[], &tree, "one").unwrap();
    let b = fx.commit(&[a], &tree, "two").unwrap();
    let (m, skipped) = refmerge::git::diff_actions(fx.repo(), &a, &b, DiffOptions::default()).unwrap();
    assert!(m.is_empty() && skipped.is_empty());
}

#[test]
fn one_changed_line_is_a_remove_and_an_add() {
    let before = lines(&["a", "b", "c"]);
    let after = lines(&["a", "X", "c"]);
    let (dir, a, b) = two_commits(&[("f.txt", before.as_bytes())], &[("f.txt", after.as_bytes())]);
    let history = History::open(dir.path()).unwrap();
    let (m, _) = history.diff_actions(&a, &b, DiffOptions::default()).unwrap();
    assert_eq!(m, actions(&[Action::remove("f.txt", "b"), Action::add("f.txt", "X")]));
}

#[test]
fn deleted_file_removes_every_line() {
    let body = lines(&["a", "b", "c"]);
    let (dir, a, b) = two_commits(&[("gone.txt", body.as_bytes()), ("keep", b"k\n")], &[("keep", b"k\n")]);
    let history = History::open(dir.path()).unwrap();
    let (m, _) = history.diff_actions(&a, &b, DiffOptions::default()).unwrap();
    assert_eq!(
        m,
        actions(&[Action::remove("gone.txt", "a"), Action::remove("gone.txt", "b"), Action::remove("gone.txt", "c")])
    );
}

#[test]
fn moved_file_is_removes_plus_adds() {
    let body = lines(&["x", "y"]);
    let (dir, a, b) = two_commits(&[("old.txt", body.as_bytes())], &[("new.txt", body.as_bytes())]);
    let history = History::open(dir.path()).unwrap();
    let (m, _) = history.diff_actions(&a, &b, DiffOptions::default()).unwrap();
    assert_eq!(m.cardinality(), 4);
    let (ignoring, _) =
        history.diff_actions(&a, &b, DiffOptions { ignore_paths: true, ..DiffOptions::default() }).unwrap();
    assert_eq!(ignoring.cardinality(), 4);
    assert_eq!(ignoring.distinct(), 4);
}

#[test]
fn binary_and_oversized_files_are_skipped() {
    let big = "line\n".repeat(100);
    let (dir, a, b) = two_commits(
        &[("img.bin", b"\x00\x01\x02"), ("big.txt", big.as_bytes())],
        &[("img.bin", b"\x00\x01\x03"), ("big.txt", format!("{big}more\n").as_bytes())],
    );
    let history = History::open(dir.path()).unwrap();
    let opts = DiffOptions { ignore_paths: false, max_file_bytes: 200 };
    let (m, skipped) = history.diff_actions(&a, &b, opts).unwrap();
    assert!(m.is_empty());
    let mut reasons: Vec<(String, SkipReason)> = skipped.into_iter().map(|s| (s.path, s.reason)).collect();
    reasons.sort_by(|x, y| x.0.cmp(&y.0));
    assert_eq!(reasons, vec![("big.txt".into(), SkipReason::TooLarge), ("img.bin".into(), SkipReason::Binary)]);

    let (m, skipped) = history.diff_actions(&a, &b, DiffOptions::default()).unwrap();
    assert_eq!(m, actions(&[Action::add("big.txt", "more")]));
    assert_eq!(skipped.len(), 1);
}
