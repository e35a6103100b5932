use refmerge::fixture::{build_classification_fixtures, snapshot, FixtureRepo};
use refmerge::git::History;
use refmerge_core::graph::{MergeScenario, Validity};

fn scenarios(path: &std::path::Path) -> Vec<MergeScenario> {
    History::open(path).unwrap().enumerate_merges().unwrap()
}

#[test]
fn each_merge_gets_its_class() {
    let dir = tempfile::tempdir().unwrap();
    let (_fx, f) = build_classification_fixtures(dir.path()).unwrap();
    let all = scenarios(dir.path());
    let class = |sha| all.iter().find(|s| s.merge.sha == sha).unwrap().validity;
    assert_eq!(class(f.valid), Validity::Valid);
    assert_eq!(class(f.no_fast_forward), Validity::NoFastForward);
    assert_eq!(class(f.octopus), Validity::Octopus);
    assert_eq!(class(f.unrelated), Validity::NoCommonAncestor);
    assert_eq!(class(f.criss_cross), Validity::Valid);
    // the two crossing merges plus the four above plus the criss-cross merge
    assert_eq!(all.len(), 7);
    assert_eq!(all.iter().filter(|s| s.validity == Validity::Valid).count(), 4);
    let unrelated = all.iter().find(|s| s.merge.sha == f.unrelated).unwrap();
    assert_eq!(unrelated.base, None);
}

#[test]
fn criss_cross_uses_the_smallest_best_ancestor() {
    let dir = tempfile::tempdir().unwrap();
    let (_fx, f) = build_classification_fixtures(dir.path()).unwrap();
    let history = History::open(dir.path()).unwrap();
    let graph = history.graph();
    let s = graph.scenario(&f.criss_cross).unwrap();
    assert!(s.criss_cross);
    let [low, high] = f.criss_cross_bases;
    assert_eq!(s.base, Some(low));
    assert_eq!(graph.merge_bases(&s.parent1, &s.parent2).unwrap(), vec![low, high]);

    let attr = graph.attribute_branch_commits(&s).unwrap();
    assert_eq!(attr.shared_commits, 1);
    assert!(attr.b1_commits.contains(&high));
    assert!(!attr.b2_commits.contains(&high));
    assert!(attr.b1_commits.is_disjoint(&attr.b2_commits));
    assert_eq!(attr.b1_commits.len(), 3);
    assert_eq!(attr.b2_commits.len(), 2);
}

#[test]
fn branches_never_share_commits() {
    let dir = tempfile::tempdir().unwrap();
    build_classification_fixtures(dir.path()).unwrap();
    let history = History::open(dir.path()).unwrap();
    for s in history.enumerate_merges().unwrap() {
        if s.validity != Validity::Valid {
            continue;
        }
        let attr = history.graph().attribute_branch_commits(&s).unwrap();
        assert!(attr.b1_commits.is_disjoint(&attr.b2_commits));
        let base = s.base.unwrap();
        assert!(!attr.b1_commits.contains(&base) && !attr.b2_commits.contains(&base));
        assert!(attr.b1_commits.contains(&s.parent1));
        assert!(attr.b2_commits.contains(&s.parent2));
    }
}

#[test]
fn classification_is_identical_across_rebuilds() {
    let render = || {
        let dir = tempfile::tempdir().unwrap();
        let repo = dir.path().join("repo");
        build_classification_fixtures(&repo).unwrap();
        serde_json::to_string(&scenarios(&repo)).unwrap()
    };
    assert_eq!(render(), render());
}

#[test]
fn linear_history_has_no_merges() {
    let dir = tempfile::tempdir().unwrap();
    let mut fx = FixtureRepo::init(dir.path()).unwrap();
    let mut prev = Vec::new();
    for i in 0..5 {
        let body = format!("{i}\n");
        let c = fx.commit(&prev, &snapshot([("f", body.as_str())]), "step").unwrap();
        prev = vec![c];
    }
    fx.set_branch("main", prev[0]).unwrap();
    assert!(scenarios(dir.path()).is_empty());
}

#[test]
fn unborn_head_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    FixtureRepo::init(dir.path()).unwrap();
    let err = History::open(dir.path()).err().unwrap();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn missing_repository_is_a_repository_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = History::open(&dir.path().join("nowhere")).err().unwrap();
    assert_eq!(err.exit_code(), 4, "{err}");
}
