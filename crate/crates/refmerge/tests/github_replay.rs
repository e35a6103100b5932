use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::thread::JoinHandle;

use chrono::{DateTime, Utc};
use refmerge::error::Error;
use refmerge::github::{
    fetch_candidate_repos, search_string, HttpTransport, RecordingTransport, ReplayTransport, Transport,
    REPO_SEARCH_QUERY,
};
use refmerge_core::corpus::{apply_metadata_filters, CorpusFilter};
use serde_json::{json, Value};

fn fixture() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/graphql_search.jsonl"))
}

fn as_of() -> DateTime<Utc> {
    "2021-09-20T00:00:00Z".parse().unwrap()
}

#[test]
fn recorded_search_yields_the_non_fork_repositories() {
    let replay = ReplayTransport::load(fixture()).unwrap();
    let filter = CorpusFilter::default();
    let repos = fetch_candidate_repos(&replay, &filter, as_of()).unwrap();
    let names: Vec<&str> = repos.iter().map(|r| r.owner_and_name.as_str()).collect();
    assert_eq!(names, ["apache/dubbo", "google/guava", "square/okhttp"]);
    let okhttp = &repos[2];
    assert_eq!((okhttp.stars, okhttp.contributors, okhttp.default_branch_commits), (41000, 240, 5100));
    // dubbo has fewer than 5000 commits
    let kept: Vec<String> = apply_metadata_filters(&repos, &filter).into_iter().map(|r| r.owner_and_name).collect();
    assert_eq!(kept, ["google/guava", "square/okhttp"]);
}

#[test]
fn search_window_starts_ninety_days_back() {
    let since = as_of() - chrono::Duration::days(90);
    assert_eq!(
        search_string(5000, None, since),
        "is:public fork:false archived:false stars:>=5000 pushed:>=2021-06-22 sort:stars-desc"
    );
}

#[test]
fn unrecorded_request_fails() {
    let replay = ReplayTransport::load(fixture()).unwrap();
    let filter = CorpusFilter { min_stars: 100, ..CorpusFilter::default() };
    assert!(fetch_candidate_repos(&replay, &filter, as_of()).is_err());
}

#[test]
fn recording_then_replaying_gives_the_same_answers() {
    let recorder = RecordingTransport::new(ReplayTransport::load(fixture()).unwrap());
    let filter = CorpusFilter::default();
    let first = fetch_candidate_repos(&recorder, &filter, as_of()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("graphql.jsonl");
    recorder.save(&saved).unwrap();
    assert_eq!(recorder.exchanges().len(), 2);
    let again = fetch_candidate_repos(&ReplayTransport::load(&saved).unwrap(), &filter, as_of()).unwrap();
    assert_eq!(first, again);
}

/// Answers one HTTP request with `response` and hands back the request.
fn serve_once(response: String) -> (String, JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/graphql", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream);
        let mut head = String::new();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            head.push_str(&line);
            if line == "\r\n" {
                break;
            }
        }
        let mut body = vec![0; length];
        reader.read_exact(&mut body).unwrap();
        reader.get_mut().write_all(response.as_bytes()).unwrap();
        head + &String::from_utf8(body).unwrap()
    });
    (url, handle)
}

fn respond(status: &str, headers: &[&str], body: &str) -> String {
    let mut out = format!(
        "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n",
        body.len()
    );
    for h in headers {
        out.push_str(h);
        out.push_str("\r\n");
    }
    out + "\r\n" + body
}

fn call(url: &str) -> Result<Value, Error> {
    HttpTransport::new(url, "tok").unwrap().execute(REPO_SEARCH_QUERY, &json!({"q": "x", "cursor": null}))
}

#[test]
fn successful_response_returns_data_and_sends_the_token() {
    let (url, server) = serve_once(respond("200 OK", &[], r#"{"data":{"search":{"repositoryCount":0}}}"#));
    let data = call(&url).unwrap();
    assert_eq!(data["search"]["repositoryCount"], 0);
    let request = server.join().unwrap();
    assert!(request.to_ascii_lowercase().contains("authorization: bearer tok"), "{request}");
    let body: Value = serde_json::from_str(request.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["variables"]["q"], "x");
}

#[test]
fn rejected_token_is_a_credential_error() {
    let (url, server) = serve_once(respond("401 Unauthorized", &[], "{}"));
    let err = call(&url).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, Error::Credential(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn rate_limit_reports_the_reset_time() {
    let (url, server) = serve_once(respond("403 Forbidden", &["x-ratelimit-reset: 1632100000"], "{}"));
    let err = call(&url).unwrap_err();
    server.join().unwrap();
    match err {
        Error::RateLimited { reset_at } => assert_eq!(reset_at, DateTime::from_timestamp(1_632_100_000, 0)),
        other => panic!("{other}"),
    }

    let before = Utc::now();
    let (url, server) = serve_once(respond("429 Too Many Requests", &["retry-after: 60"], "{}"));
    let err = call(&url).unwrap_err();
    server.join().unwrap();
    match err {
        Error::RateLimited { reset_at: Some(at) } => assert!(at >= before + chrono::Duration::seconds(59)),
        other => panic!("{other}"),
    }
}

#[test]
fn server_errors_and_unreachable_hosts_are_transport_errors() {
    let (url, server) = serve_once(respond("502 Bad Gateway", &[], "{}"));
    let err = call(&url).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, Error::Transport(_)), "{err}");
    assert_eq!(err.exit_code(), 3);

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = call(&format!("http://127.0.0.1:{port}/graphql")).unwrap_err();
    assert!(matches!(err, Error::Transport(_)), "{err}");
}
