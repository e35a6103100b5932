#![cfg(unix)]

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use refmerge::config::EffortConfig;
use refmerge::detector::Detector;
use refmerge::fixture::build_effort_fixtures;
use refmerge::pipeline::{analyze_repo, Cache, RecordsSource};
use refmerge_core::refactoring::DetectorStatus;
use refmerge_core::Sha;

fn script(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

fn sha(c: char) -> Sha {
    Sha::parse(&c.to_string().repeat(40)).unwrap()
}

const ECHO_RECORD: &str = r#"printf '{"commit":"%s","type":"Extract Method","description":"in %s"}\n' "$2" "$1""#;

fn detector(path: &Path, timeout_secs: u64) -> Detector {
    Detector::from_template(&format!("{} {{repo}} {{commit}}", path.display()), Duration::from_secs(timeout_secs))
        .unwrap()
}

#[test]
fn successful_run_parses_records_and_substitutes_arguments() {
    let dir = tempfile::tempdir().unwrap();
    let stub = script(dir.path(), "ok.sh", ECHO_RECORD);
    let out = detector(&stub, 10).run(Path::new("/some/repo dir"), sha('a')).unwrap();
    assert_eq!(out.log.status, DetectorStatus::Ok);
    assert_eq!(out.parsed.records.len(), 1);
    assert_eq!(out.parsed.records[0].commit, sha('a'));
    assert_eq!(out.parsed.records[0].description, "in /some/repo dir");
}

#[test]
fn failing_run_keeps_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let stub = script(dir.path(), "fail.sh", "echo boom >&2\nexit 3");
    let out = detector(&stub, 10).run(dir.path(), sha('a')).unwrap();
    assert_eq!(out.log.status, DetectorStatus::DetectorError);
    assert!(out.log.stderr.as_deref().unwrap().contains("boom"));
    assert!(out.parsed.records.is_empty());
}

#[test]
fn undecodable_output_is_a_detector_error() {
    let dir = tempfile::tempdir().unwrap();
    let stub = script(dir.path(), "garbage.sh", r"printf '\377\376'");
    let out = detector(&stub, 10).run(dir.path(), sha('a')).unwrap();
    assert_eq!(out.log.status, DetectorStatus::DetectorError);
}

#[test]
fn hung_detector_is_killed_at_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let stub = script(dir.path(), "hang.sh", "exec sleep 30");
    let start = Instant::now();
    let out = detector(&stub, 1).run(dir.path(), sha('a')).unwrap();
    assert_eq!(out.log.status, DetectorStatus::Timeout);
    assert!(out.log.elapsed_ms >= 1000);
    assert!(start.elapsed() < Duration::from_secs(5), "{:?}", start.elapsed());
}

fn alive(pid: &str) -> bool {
    match std::fs::read_to_string(format!("/proc/{pid}/stat")) {
        // a zombie has already exited
        Ok(stat) => !stat.split_whitespace().nth(2).is_some_and(|s| s == "Z"),
        Err(_) => false,
    }
}

#[test]
fn timeout_also_kills_grandchildren() {
    let dir = tempfile::tempdir().unwrap();
    let pidfile = dir.path().join("pid");
    let stub = script(dir.path(), "fork.sh", &format!("sleep 30 &\necho $! > {}\nwait", pidfile.display()));
    let start = Instant::now();
    let out = detector(&stub, 1).run(dir.path(), sha('a')).unwrap();
    assert_eq!(out.log.status, DetectorStatus::Timeout);
    assert!(start.elapsed() < Duration::from_secs(5), "{:?}", start.elapsed());
    let pid = std::fs::read_to_string(&pidfile).unwrap().trim().to_string();
    let deadline = Instant::now() + Duration::from_secs(3);
    while alive(&pid) && Instant::now() < deadline {
        std::thread::sleep(Duration::from_millis(50));
    }
    assert!(!alive(&pid), "grandchild {pid} survived");
}

#[test]
fn missing_executable_is_rejected_up_front() {
    let err = Detector::from_template("/no/such/detector {repo} {commit}", Duration::from_secs(1)).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn parallel_runs_come_back_in_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let stub =
        script(dir.path(), "slow.sh", &format!("case \"$2\" in 1*) sleep 0.4;; 2*) sleep 0.2;; esac\n{ECHO_RECORD}"));
    let commits = [sha('1'), sha('2'), sha('3'), sha('4'), sha('1')];
    let out = detector(&stub, 10).run_many(dir.path(), &commits, 3).unwrap();
    let order: Vec<Sha> = out.iter().map(|o| o.log.commit).collect();
    assert_eq!(order, commits);
    assert!(out.iter().all(|o| o.parsed.records[0].commit == o.log.commit));
}

#[test]
fn detector_results_feed_the_analysis_and_are_cached() {
    let dir = tempfile::tempdir().unwrap();
    let repo = dir.path().join("repo");
    build_effort_fixtures(&repo).unwrap();
    let calls = dir.path().join("calls");
    let stub = script(dir.path(), "count.sh", &format!("echo \"$2\" >> {}\n{ECHO_RECORD}", calls.display()));
    let detector = detector(&stub, 10);
    let cache = Cache::new(dir.path().join("cache"));
    let source = RecordsSource::Detect { detector: &detector, workers: 2 };

    let first = analyze_repo(&repo, source, &EffortConfig::default(), Some(&cache)).unwrap();
    assert_eq!(first.detector.runs, 8);
    assert_eq!(first.detector.ok, 8);
    assert_eq!(first.detector.cached, 0);
    assert_eq!(first.rows.iter().map(|r| r.refactorings).sum::<u64>(), 8);
    assert!(first.rows.iter().all(|r| r.b1 == 1 && r.b2 == 1));
    let logged = std::fs::read_to_string(&calls).unwrap();
    assert_eq!(logged.lines().count(), 8);

    let second = analyze_repo(&repo, source, &EffortConfig::default(), Some(&cache)).unwrap();
    assert_eq!(second.detector.cached, 8);
    assert_eq!(second.rows, first.rows);
    assert_eq!(std::fs::read_to_string(&calls).unwrap(), logged);
}
