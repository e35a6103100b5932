//! Single-file relational store: commits, merge commits, refactorings and
//! the branch attribution linking them.
//!
//! Writes are upserts keyed on natural keys, so persisting the same batch
//! twice leaves the store unchanged. One writer at a time.

use std::path::Path;

use chrono::{DateTime, Utc};
use refmerge_core::effort::EffortMode;
use refmerge_core::graph::{CommitRef, MergeScenario, Validity};
use refmerge_core::refactoring::{RefactoringRecord, RefactoringType};
use refmerge_core::rules::MergeFeatureRow;
use refmerge_core::Sha;
use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SCHEMA: &str = r#"
CREATE TABLE IF NOT EXISTS commits (
    sha     TEXT PRIMARY KEY,
    date    TEXT NOT NULL,
    project TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS merge_commits (
    sha          TEXT PRIMARY KEY REFERENCES commits(sha),
    parent1      TEXT NOT NULL,
    parent2      TEXT NOT NULL,
    base         TEXT,
    validity     TEXT NOT NULL CHECK (validity IN ('valid', 'no-fast-forward', 'octopus', 'no-common-ancestor')),
    criss_cross  INTEGER NOT NULL CHECK (criss_cross IN (0, 1)),
    merge_effort INTEGER CHECK (merge_effort >= 0),
    effort_mode  TEXT,
    CHECK ((validity = 'valid') = (merge_effort IS NOT NULL)),
    CHECK ((merge_effort IS NULL) = (effort_mode IS NULL))
);
CREATE TABLE IF NOT EXISTS refactorings (
    commit_sha  TEXT NOT NULL REFERENCES commits(sha),
    seq         INTEGER NOT NULL,
    type        TEXT NOT NULL,
    description TEXT NOT NULL,
    PRIMARY KEY (commit_sha, seq)
);
CREATE TABLE IF NOT EXISTS merge_branch_refactorings (
    merge_sha  TEXT NOT NULL REFERENCES merge_commits(sha),
    commit_sha TEXT NOT NULL REFERENCES commits(sha),
    branch     INTEGER NOT NULL CHECK (branch IN (1, 2)),
    PRIMARY KEY (merge_sha, commit_sha)
);
"#;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRow {
    pub sha: Sha,
    pub parent1: Sha,
    pub parent2: Sha,
    pub base: Option<Sha>,
    pub validity: Validity,
    pub criss_cross: bool,
    /// Present exactly for valid merges.
    pub merge_effort: Option<u64>,
    pub effort_mode: Option<EffortMode>,
}

impl MergeRow {
    pub fn from_scenario(s: &MergeScenario, effort: Option<(u64, EffortMode)>) -> MergeRow {
        MergeRow {
            sha: s.merge.sha,
            parent1: s.parent1,
            parent2: s.parent2,
            base: s.base,
            validity: s.validity,
            criss_cross: s.criss_cross,
            merge_effort: effort.map(|e| e.0),
            effort_mode: effort.map(|e| e.1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchLink {
    pub merge_sha: Sha,
    pub commit_sha: Sha,
    /// 1 or 2.
    pub branch: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreBatch {
    pub commits: Vec<CommitRef>,
    pub merges: Vec<MergeRow>,
    pub refactorings: Vec<RefactoringRecord>,
    pub branch_links: Vec<BranchLink>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreCounts {
    pub commits: u64,
    pub merge_commits: u64,
    pub refactorings: u64,
    pub merge_branch_refactorings: u64,
}

pub struct Store {
    conn: Connection,
}

fn integrity(what: String) -> impl FnOnce(rusqlite::Error) -> Error {
    move |e| match e {
        rusqlite::Error::SqliteFailure(f, msg) if f.code == rusqlite::ErrorCode::ConstraintViolation => {
            Error::Integrity(format!("{what}: {}", msg.unwrap_or_else(|| f.to_string())))
        }
        other => Error::Io { path: "store".into(), source: std::io::Error::other(format!("{what}: {other}")) },
    }
}

fn db(e: rusqlite::Error) -> Error {
    Error::Io { path: "store".into(), source: std::io::Error::other(e.to_string()) }
}

fn parse_sha(s: &str) -> Result<Sha> {
    Sha::parse(s).map_err(|_| Error::Integrity(format!("stored sha {s:?} is malformed")))
}

impl Store {
    pub fn open(path: &Path) -> Result<Store> {
        let conn = Connection::open(path)
            .map_err(|e| Error::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) })?;
        Store::init(conn)
    }

    pub fn open_in_memory() -> Result<Store> {
        Store::init(Connection::open_in_memory().map_err(db)?)
    }

    fn init(conn: Connection) -> Result<Store> {
        conn.execute_batch("PRAGMA foreign_keys = ON;").map_err(db)?;
        conn.execute_batch(SCHEMA).map_err(db)?;
        Ok(Store { conn })
    }

    /// Upserts a batch in one transaction. A constraint violation rolls the
    /// whole batch back and names the offending row.
    pub fn persist(&mut self, batch: &StoreBatch) -> Result<StoreCounts> {
        let tx = self.conn.transaction().map_err(db)?;
        {
            let mut stmt = tx
                .prepare(
                    "INSERT INTO commits (sha, date, project) VALUES (?1, ?2, ?3)
                     ON CONFLICT(sha) DO UPDATE SET date = excluded.date, project = excluded.project",
                )
                .map_err(db)?;
            for c in &batch.commits {
                stmt.execute(params![c.sha.to_hex(), c.author_time.to_rfc3339(), c.project])
                    .map_err(integrity(format!("commits row {}", c.sha)))?;
            }

            let mut stmt = tx
                .prepare(
                    "INSERT INTO merge_commits (sha, parent1, parent2, base, validity, criss_cross, merge_effort, effort_mode)
                     VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)
                     ON CONFLICT(sha) DO UPDATE SET parent1 = excluded.parent1, parent2 = excluded.parent2,
                        base = excluded.base, validity = excluded.validity, criss_cross = excluded.criss_cross,
                        merge_effort = excluded.merge_effort, effort_mode = excluded.effort_mode",
                )
                .map_err(db)?;
            for m in &batch.merges {
                let effort = m.merge_effort.map(|e| i64::try_from(e).unwrap_or(i64::MAX));
                stmt.execute(params![
                    m.sha.to_hex(),
                    m.parent1.to_hex(),
                    m.parent2.to_hex(),
                    m.base.map(|b| b.to_hex()),
                    m.validity.as_str(),
                    m.criss_cross,
                    effort,
                    m.effort_mode.map(|m| m.as_str()),
                ])
                .map_err(integrity(format!("merge_commits row {}", m.sha)))?;
            }

            let mut stmt = tx
                .prepare(
                    "INSERT INTO refactorings (commit_sha, seq, type, description) VALUES (?1, ?2, ?3, ?4)
                     ON CONFLICT(commit_sha, seq) DO UPDATE SET type = excluded.type, description = excluded.description",
                )
                .map_err(db)?;
            let mut seq: std::collections::HashMap<Sha, i64> = std::collections::HashMap::new();
            for r in &batch.refactorings {
                let n = seq.entry(r.commit).or_insert(0);
                stmt.execute(params![r.commit.to_hex(), *n, r.kind.name(), r.description])
                    .map_err(integrity(format!("refactorings row ({}, {})", r.commit, n)))?;
                *n += 1;
            }

            let mut stmt = tx
                .prepare(
                    "INSERT INTO merge_branch_refactorings (merge_sha, commit_sha, branch) VALUES (?1, ?2, ?3)
                     ON CONFLICT(merge_sha, commit_sha) DO UPDATE SET branch = excluded.branch",
                )
                .map_err(db)?;
            for l in &batch.branch_links {
                stmt.execute(params![l.merge_sha.to_hex(), l.commit_sha.to_hex(), l.branch]).map_err(integrity(
                    format!("merge_branch_refactorings row ({}, {}, branch {})", l.merge_sha, l.commit_sha, l.branch),
                ))?;
            }
        }
        tx.commit().map_err(db)?;
        self.counts()
    }

    pub fn counts(&self) -> Result<StoreCounts> {
        let count = |table: &str| -> Result<u64> {
            self.conn
                .query_row(&format!("SELECT COUNT(*) FROM {table}"), [], |r| r.get::<_, i64>(0))
                .map(|n| n as u64)
                .map_err(db)
        };
        Ok(StoreCounts {
            commits: count("commits")?,
            merge_commits: count("merge_commits")?,
            refactorings: count("refactorings")?,
            merge_branch_refactorings: count("merge_branch_refactorings")?,
        })
    }

    pub fn commit(&self, sha: &Sha) -> Result<Option<(DateTime<Utc>, String)>> {
        let row = self
            .conn
            .query_row("SELECT date, project FROM commits WHERE sha = ?1", [sha.to_hex()], |r| {
                Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?))
            })
            .optional()
            .map_err(db)?;
        row.map(|(date, project)| {
            let date = DateTime::parse_from_rfc3339(&date)
                .map_err(|e| Error::Integrity(format!("commit {sha} has date {date:?}: {e}")))?;
            Ok((date.with_timezone(&Utc), project))
        })
        .transpose()
    }

    /// Merge rows ordered by sha.
    pub fn merges(&self) -> Result<Vec<MergeRow>> {
        let mut stmt = self
            .conn
            .prepare(
                "SELECT sha, parent1, parent2, base, validity, criss_cross, merge_effort, effort_mode
                 FROM merge_commits ORDER BY sha",
            )
            .map_err(db)?;
        let raw = stmt
            .query_map([], |r| {
                Ok((
                    r.get::<_, String>(0)?,
                    r.get::<_, String>(1)?,
                    r.get::<_, String>(2)?,
                    r.get::<_, Option<String>>(3)?,
                    r.get::<_, String>(4)?,
                    r.get::<_, bool>(5)?,
                    r.get::<_, Option<i64>>(6)?,
                    r.get::<_, Option<String>>(7)?,
                ))
            })
            .map_err(db)?
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(db)?;
        raw.into_iter()
            .map(|(sha, p1, p2, base, validity, criss_cross, effort, mode)| {
                Ok(MergeRow {
                    validity: Validity::parse(&validity)
                        .ok_or_else(|| Error::Integrity(format!("merge {sha} has validity {validity:?}")))?,
                    sha: parse_sha(&sha)?,
                    parent1: parse_sha(&p1)?,
                    parent2: parse_sha(&p2)?,
                    base: base.as_deref().map(parse_sha).transpose()?,
                    criss_cross,
                    merge_effort: effort.map(|e| e as u64),
                    effort_mode: mode.as_deref().map(str::parse).transpose()?,
                })
            })
            .collect()
    }

    /// Refactorings ordered by commit and sequence number.
    pub fn refactorings(&self) -> Result<Vec<RefactoringRecord>> {
        let mut stmt = self
            .conn
            .prepare("SELECT commit_sha, type, description FROM refactorings ORDER BY commit_sha, seq")
            .map_err(db)?;
        let raw = stmt
            .query_map([], |r| Ok((r.get::<_, String>(0)?, r.get::<_, String>(1)?, r.get::<_, String>(2)?)))
            .map_err(db)?
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(db)?;
        raw.into_iter()
            .map(|(commit, kind, description)| {
                Ok(RefactoringRecord {
                    commit: parse_sha(&commit)?,
                    kind: RefactoringType::from_name(&kind)
                        .ok_or_else(|| Error::Integrity(format!("refactoring on {commit} has type {kind:?}")))?,
                    description,
                })
            })
            .collect()
    }

    /// One row per valid merge, ordered by project then merge sha. Branch
    /// counts come from the attribution table joined with refactorings.
    pub fn feature_rows(&self) -> Result<Vec<MergeFeatureRow>> {
        let mut stmt = self
            .conn
            .prepare(
                "SELECT m.sha, c.project, m.merge_effort,
                    (SELECT COUNT(*) FROM merge_branch_refactorings l JOIN refactorings r ON r.commit_sha = l.commit_sha
                      WHERE l.merge_sha = m.sha AND l.branch = 1),
                    (SELECT COUNT(*) FROM merge_branch_refactorings l JOIN refactorings r ON r.commit_sha = l.commit_sha
                      WHERE l.merge_sha = m.sha AND l.branch = 2)
                 FROM merge_commits m JOIN commits c ON c.sha = m.sha
                 WHERE m.validity = 'valid'
                 ORDER BY c.project, m.sha",
            )
            .map_err(db)?;
        let raw = stmt
            .query_map([], |r| {
                Ok((
                    r.get::<_, String>(0)?,
                    r.get::<_, String>(1)?,
                    r.get::<_, Option<i64>>(2)?,
                    r.get::<_, i64>(3)?,
                    r.get::<_, i64>(4)?,
                ))
            })
            .map_err(db)?
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(db)?;
        raw.into_iter()
            .map(|(sha, project, effort, b1, b2)| {
                let effort = effort.ok_or_else(|| Error::Integrity(format!("valid merge {sha} has no effort")))?;
                Ok(MergeFeatureRow::new(project, parse_sha(&sha)?, b1 as u64, b2 as u64, effort as u64))
            })
            .collect()
    }
}
