//! Candidate repository search over the GitHub GraphQL API.
//!
//! Search results are capped at 1,000 per query, so star ranges whose hit
//! count exceeds the cap are bisected until every range fits. Exchanges can
//! be recorded to disk and replayed, which keeps corpus selection testable
//! offline.

use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use log::{info, warn};
use refmerge_core::corpus::{CorpusFilter, RepoMeta};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub const GITHUB_GRAPHQL_URL: &str = "https://api.github.com/graphql";
pub const TOKEN_ENV: &str = "GH_TOKEN";
/// GitHub returns at most this many hits for a single search.
pub const SEARCH_RESULT_CAP: u64 = 1000;
pub const PAGE_SIZE: u64 = 100;

/// Repository metadata query. Contributors are approximated by the
/// mentionable-user count, the closest figure the GraphQL schema exposes.
pub const REPO_SEARCH_QUERY: &str = r#"query($q: String!, $cursor: String) {
  search(query: $q, type: REPOSITORY, first: 100, after: $cursor) {
    repositoryCount
    pageInfo { hasNextPage endCursor }
    nodes {
      ... on Repository {
        nameWithOwner
        stargazerCount
        isFork
        isArchived
        pushedAt
        primaryLanguage { name }
        mentionableUsers { totalCount }
        defaultBranchRef { target { ... on Commit { history { totalCount } } } }
      }
    }
  }
}"#;

pub trait Transport {
    /// Executes one query and returns its `data` member.
    fn execute(&self, query: &str, variables: &Value) -> Result<Value>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    token: String,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, token: impl Into<String>) -> Result<HttpTransport> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("refmerge/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(HttpTransport { client, endpoint: endpoint.into(), token: token.into() })
    }

    /// Reads the token from `GH_TOKEN`.
    pub fn from_env() -> Result<HttpTransport> {
        let token = std::env::var(TOKEN_ENV)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| Error::Credential(format!("{TOKEN_ENV} is not set")))?;
        HttpTransport::new(GITHUB_GRAPHQL_URL, token)
    }
}

impl Transport for HttpTransport {
    fn execute(&self, query: &str, variables: &Value) -> Result<Value> {
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.token)
            .json(&json!({ "query": query, "variables": variables }))
            .send()
            .map_err(|e| Error::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            401 => return Err(Error::Credential("GitHub rejected the token".into())),
            403 | 429 => return Err(Error::RateLimited { reset_at: rate_limit_reset(response.headers(), Utc::now()) }),
            s if !(200..300).contains(&s) => return Err(Error::Transport(format!("HTTP {s}"))),
            _ => {}
        }
        let body: Value = response.json().map_err(|e| Error::Transport(e.to_string()))?;
        graphql_data(body)
    }
}

fn rate_limit_reset(headers: &reqwest::header::HeaderMap, now: DateTime<Utc>) -> Option<DateTime<Utc>> {
    let header = |name: &str| headers.get(name)?.to_str().ok()?.trim().parse::<i64>().ok();
    if let Some(epoch) = header("x-ratelimit-reset") {
        return DateTime::from_timestamp(epoch, 0);
    }
    header("retry-after").and_then(|secs| now.checked_add_signed(chrono::Duration::try_seconds(secs)?))
}

fn graphql_data(mut body: Value) -> Result<Value> {
    if let Some(errors) = body.get("errors").filter(|e| !e.is_null()) {
        let rate_limited = errors.as_array().is_some_and(|es| es.iter().any(|e| e["type"] == "RATE_LIMITED"));
        if rate_limited {
            return Err(Error::RateLimited { reset_at: None });
        }
        if body.get("data").is_none_or(Value::is_null) {
            return Err(Error::Transport(format!("GraphQL errors: {errors}")));
        }
        warn!("partial GraphQL response: {errors}");
    }
    match body.get_mut("data").map(Value::take) {
        Some(data) if !data.is_null() => Ok(data),
        _ => Err(Error::Transport("response carries no data".into())),
    }
}

/// One recorded request/response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub variables: Value,
    pub data: Value,
}

/// Answers queries from recorded exchanges, matching on the variables.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    exchanges: Vec<Exchange>,
}

impl ReplayTransport {
    pub fn new(exchanges: Vec<Exchange>) -> Self {
        ReplayTransport { exchanges }
    }

    pub fn load(path: &Path) -> Result<ReplayTransport> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let exchanges = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::Input(format!("{} line {}: {e}", path.display(), i + 1)))
            })
            .collect::<Result<_>>()?;
        Ok(ReplayTransport { exchanges })
    }
}

impl Transport for ReplayTransport {
    fn execute(&self, _query: &str, variables: &Value) -> Result<Value> {
        self.exchanges
            .iter()
            .find(|x| &x.variables == variables)
            .map(|x| x.data.clone())
            .ok_or_else(|| Error::Input(format!("no recorded response for {variables}")))
    }
}

/// Wraps a transport and keeps every successful exchange.
pub struct RecordingTransport<T> {
    inner: T,
    log: Mutex<Vec<Exchange>>,
}

impl<T: Transport> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        RecordingTransport { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.lock().expect("recording lock").clone()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for x in self.exchanges() {
            text.push_str(&serde_json::to_string(&x).expect("exchange serializes"));
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

impl<T: Transport> Transport for RecordingTransport<T> {
    fn execute(&self, query: &str, variables: &Value) -> Result<Value> {
        let data = self.inner.execute(query, variables)?;
        self.log.lock().expect("recording lock").push(Exchange { variables: variables.clone(), data: data.clone() });
        Ok(data)
    }
}

/// The search string for a star range; `hi = None` is open-ended.
pub fn search_string(lo: u64, hi: Option<u64>, pushed_since: DateTime<Utc>) -> String {
    let stars = match hi {
        Some(hi) => format!("stars:{lo}..{hi}"),
        None => format!("stars:>={lo}"),
    };
    format!("is:public fork:false archived:false {stars} pushed:>={} sort:stars-desc", pushed_since.format("%Y-%m-%d"))
}

struct Page {
    count: u64,
    next: Option<String>,
    repos: Vec<RepoMeta>,
}

fn fetch_page(transport: &dyn Transport, q: &str, cursor: Option<&str>) -> Result<Page> {
    let data = transport.execute(REPO_SEARCH_QUERY, &json!({ "q": q, "cursor": cursor }))?;
    let search = &data["search"];
    let count = search["repositoryCount"]
        .as_u64()
        .ok_or_else(|| Error::Input("search response lacks repositoryCount".into()))?;
    let next = match search["pageInfo"]["hasNextPage"].as_bool() {
        Some(true) => search["pageInfo"]["endCursor"].as_str().map(str::to_string),
        _ => None,
    };
    let repos = search["nodes"]
        .as_array()
        .map(Vec::as_slice)
        .unwrap_or_default()
        .iter()
        .filter(|n| n.get("nameWithOwner").is_some())
        .map(parse_node)
        .collect::<Result<_>>()?;
    Ok(Page { count, next, repos })
}

fn parse_node(node: &Value) -> Result<RepoMeta> {
    let name = node["nameWithOwner"].as_str().unwrap_or_default().to_string();
    let bad = |field: &str| Error::Input(format!("repository {name:?}: missing or invalid {field}"));
    let last_push =
        node["pushedAt"].as_str().and_then(|s| s.parse::<DateTime<Utc>>().ok()).ok_or_else(|| bad("pushedAt"))?;
    Ok(RepoMeta {
        stars: node["stargazerCount"].as_u64().ok_or_else(|| bad("stargazerCount"))?,
        is_fork: node["isFork"].as_bool().ok_or_else(|| bad("isFork"))?,
        is_archived: node["isArchived"].as_bool().ok_or_else(|| bad("isArchived"))?,
        last_push,
        contributors: node["mentionableUsers"]["totalCount"].as_u64().unwrap_or(0),
        default_branch_commits: node["defaultBranchRef"]["target"]["history"]["totalCount"].as_u64().unwrap_or(0),
        primary_language: node["primaryLanguage"]["name"].as_str().unwrap_or_default().to_string(),
        owner_and_name: name,
    })
}

fn fetch_range(
    transport: &dyn Transport,
    lo: u64,
    hi: Option<u64>,
    since: DateTime<Utc>,
    out: &mut Vec<RepoMeta>,
) -> Result<()> {
    let q = search_string(lo, hi, since);
    let first = fetch_page(transport, &q, None)?;
    if first.count > SEARCH_RESULT_CAP {
        let top = hi.or_else(|| first.repos.iter().map(|r| r.stars).max()).unwrap_or(lo);
        if top > lo {
            let mid = lo + (top - lo) / 2;
            fetch_range(transport, lo, Some(mid), since, out)?;
            return fetch_range(transport, mid + 1, Some(top), since, out);
        }
        warn!("{} repositories share {lo} stars; only the first {SEARCH_RESULT_CAP} are reachable", first.count);
    }
    let mut next = first.next;
    out.extend(first.repos);
    while let Some(cursor) = next {
        let page = fetch_page(transport, &q, Some(&cursor))?;
        out.extend(page.repos);
        next = page.next;
    }
    Ok(())
}

/// Every public, non-fork, non-archived repository meeting the star and
/// push-recency criteria, sorted by name.
pub fn fetch_candidate_repos(
    transport: &dyn Transport,
    filter: &CorpusFilter,
    as_of: DateTime<Utc>,
) -> Result<Vec<RepoMeta>> {
    let since = i64::try_from(filter.max_push_age_days)
        .ok()
        .and_then(chrono::Duration::try_days)
        .and_then(|d| as_of.checked_sub_signed(d))
        .unwrap_or(DateTime::<Utc>::MIN_UTC);
    let mut repos = Vec::new();
    fetch_range(transport, filter.min_stars, None, since, &mut repos)?;
    repos.retain(|r| filter.matches_search(r, as_of));
    repos.sort_by(|a, b| a.owner_and_name.cmp(&b.owner_and_name));
    repos.dedup_by(|a, b| a.owner_and_name == b.owner_and_name);
    info!("search returned {} candidate repositories", repos.len());
    Ok(repos)
}
