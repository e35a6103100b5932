//! Refactoring detections: the 33-type taxonomy, the line-oriented record
//! format produced by the detector adapter, and per-branch counting.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BranchAttribution;
use crate::sha::Sha;

macro_rules! refactoring_types {
    ($($variant:ident => $name:literal,)*) => {
        /// The refactoring types considered by the analysis. Detectors know
        /// many more; anything else is rejected at ingest.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum RefactoringType {
            $($variant,)*
        }

        impl RefactoringType {
            pub const ALL: &'static [RefactoringType] = &[$(RefactoringType::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(RefactoringType::$variant => $name,)*
                }
            }

            pub fn from_name(name: &str) -> Option<Self> {
                match name {
                    $($name => Some(RefactoringType::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

refactoring_types! {
    ChangeReturnType => "Change Return Type",
    ExtractAttribute => "Extract Attribute",
    ExtractClass => "Extract Class",
    ExtractInterface => "Extract Interface",
    ExtractMethod => "Extract Method",
    ExtractSubclass => "Extract Subclass",
    ExtractSuperclass => "Extract Superclass",
    ExtractVariable => "Extract Variable",
    InlineMethod => "Inline Method",
    InlineVariable => "Inline Variable",
    MergeAttribute => "Merge Attribute",
    MoveAttribute => "Move Attribute",
    MoveClass => "Move Class",
    MoveMethod => "Move Method",
    PullUpAttribute => "Pull Up Attribute",
    PullUpMethod => "Pull Up Method",
    PushDownAttribute => "Push Down Attribute",
    PushDownMethod => "Push Down Method",
    RenameAttribute => "Rename Attribute",
    RenameClass => "Rename Class",
    RenameMethod => "Rename Method",
    RenameParameter => "Rename Parameter",
    RenameVariable => "Rename Variable",
    SplitAttribute => "Split Attribute",
    SplitParameter => "Split Parameter",
    SplitVariable => "Split Variable",
    ChangeParameterType => "Change Parameter Type",
    ChangeVariableType => "Change Variable Type",
    MergeParameter => "Merge Parameter",
    MergeVariable => "Merge Variable",
    ParameterizeVariable => "Parameterize Variable",
    ReplaceAttribute => "Replace Attribute",
    ReplaceVariableWithAttribute => "Replace Variable with Attribute",
}

impl fmt::Display for RefactoringType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RefactoringType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RefactoringType::from_name(s).ok_or_else(|| Error::Domain(format!("unknown refactoring type {s:?}")))
    }
}

impl Serialize for RefactoringType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for RefactoringType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = <std::borrow::Cow<'de, str>>::deserialize(d)?;
        RefactoringType::from_name(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown refactoring type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefactoringRecord {
    pub commit: Sha,
    #[serde(rename = "type")]
    pub kind: RefactoringType,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum RejectReason {
    Malformed { detail: String },
    InvalidSha { value: String },
    OutOfTaxonomy { kind: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedLine {
    /// 1-based.
    pub line: usize,
    #[serde(flatten)]
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedRecords {
    pub records: Vec<RefactoringRecord>,
    pub rejected: Vec<RejectedLine>,
}

impl ParsedRecords {
    pub fn out_of_taxonomy(&self) -> usize {
        self.rejected.iter().filter(|r| matches!(r.reason, RejectReason::OutOfTaxonomy { .. })).count()
    }
}

#[derive(Deserialize)]
struct RawRecord {
    commit: String,
    #[serde(rename = "type")]
    kind: String,
    description: String,
}

/// Parses one detection object per line (`commit`, `type`, `description`).
///
/// Every line ends up either as a record or as a rejection; the whole input
/// fails only when it is not UTF-8.
pub fn parse_refactoring_records(input: &[u8]) -> Result<ParsedRecords> {
    let text = std::str::from_utf8(input).map_err(|e| Error::InvalidUtf8 { offset: e.valid_up_to() })?;
    let mut out = ParsedRecords::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let reject = |reason| RejectedLine { line: line_no, reason };
        let raw: RawRecord = match serde_json::from_str(line) {
            Ok(raw) => raw,
            Err(e) => {
                out.rejected.push(reject(RejectReason::Malformed { detail: e.to_string() }));
                continue;
            }
        };
        let commit = match Sha::parse(&raw.commit) {
            Ok(sha) => sha,
            Err(_) => {
                out.rejected.push(reject(RejectReason::InvalidSha { value: raw.commit }));
                continue;
            }
        };
        let Some(kind) = RefactoringType::from_name(&raw.kind) else {
            out.rejected.push(reject(RejectReason::OutOfTaxonomy { kind: raw.kind }));
            continue;
        };
        out.records.push(RefactoringRecord { commit, kind, description: raw.description });
    }
    Ok(out)
}

/// Writes records in the same line format `parse_refactoring_records` reads.
pub fn write_refactoring_records<W: std::io::Write>(mut w: W, records: &[RefactoringRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorStatus {
    Ok,
    Timeout,
    DetectorError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorRunLog {
    pub commit: Sha,
    pub status: DetectorStatus,
    pub elapsed_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCounts {
    pub b1: u64,
    pub b2: u64,
    pub total: u64,
}

pub fn count_branch_refactorings<'a>(
    attribution: &BranchAttribution,
    records: impl IntoIterator<Item = &'a RefactoringRecord>,
) -> BranchCounts {
    count_in_sets(&attribution.b1_commits, &attribution.b2_commits, records)
}

pub fn count_in_sets<'a>(
    b1: &BTreeSet<Sha>,
    b2: &BTreeSet<Sha>,
    records: impl IntoIterator<Item = &'a RefactoringRecord>,
) -> BranchCounts {
    let mut counts = BranchCounts::default();
    for r in records {
        if b1.contains(&r.commit) {
            counts.b1 += 1;
        } else if b2.contains(&r.commit) {
            counts.b2 += 1;
        }
    }
    counts.total = counts.b1 + counts.b2;
    counts
}
