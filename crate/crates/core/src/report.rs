//! Figure groups: fixed grids of rules (antecedent template × effort label)
//! looked up in a mined rule table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::{
    format_conditions, Binning, Condition, RuleTable, Scheme, ATTR_B1, ATTR_B2, ATTR_EFFORT, ATTR_REFACTORINGS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FigureGroupId {
    #[serde(rename = "RQ1-binary")]
    Rq1Binary,
    #[serde(rename = "RQ1-parallel")]
    Rq1Parallel,
    #[serde(rename = "RQ2-magnitude")]
    Rq2Magnitude,
    #[serde(rename = "RQ2-parallel")]
    Rq2Parallel,
    #[serde(rename = "RQ3-magnitude")]
    Rq3Magnitude,
    #[serde(rename = "RQ3-parallel")]
    Rq3Parallel,
}

impl FigureGroupId {
    pub const ALL: [FigureGroupId; 6] = [
        FigureGroupId::Rq1Binary,
        FigureGroupId::Rq1Parallel,
        FigureGroupId::Rq2Magnitude,
        FigureGroupId::Rq2Parallel,
        FigureGroupId::Rq3Magnitude,
        FigureGroupId::Rq3Parallel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FigureGroupId::Rq1Binary => "RQ1-binary",
            FigureGroupId::Rq1Parallel => "RQ1-parallel",
            FigureGroupId::Rq2Magnitude => "RQ2-magnitude",
            FigureGroupId::Rq2Parallel => "RQ2-parallel",
            FigureGroupId::Rq3Magnitude => "RQ3-magnitude",
            FigureGroupId::Rq3Parallel => "RQ3-parallel",
        }
    }

    /// `RQ1`, `RQ2` or `RQ3`.
    pub fn question(self) -> &'static str {
        &self.as_str()[..3]
    }

    pub fn scheme(self) -> Scheme {
        match self {
            FigureGroupId::Rq1Binary | FigureGroupId::Rq1Parallel => Scheme::BINARY,
            FigureGroupId::Rq2Magnitude | FigureGroupId::Rq2Parallel => Scheme::MAGNITUDE,
            FigureGroupId::Rq3Magnitude | FigureGroupId::Rq3Parallel => Scheme::INTENSITY,
        }
    }

    pub fn spec(self) -> FigureGroupSpec {
        let scheme = self.scheme();
        let refac_labels = scheme.refactorings.labels();
        let antecedents: Vec<Vec<Condition>> = match self {
            FigureGroupId::Rq1Binary | FigureGroupId::Rq2Magnitude | FigureGroupId::Rq3Magnitude => {
                refac_labels.iter().map(|l| vec![Condition::new(ATTR_REFACTORINGS, *l)]).collect()
            }
            // Both branches in the same non-zero range.
            FigureGroupId::Rq1Parallel | FigureGroupId::Rq2Parallel | FigureGroupId::Rq3Parallel => refac_labels
                .iter()
                .filter(|l| **l != Binning::Binary.label(0) && **l != Binning::Magnitude.label(0))
                .map(|l| vec![Condition::new(ATTR_B1, *l), Condition::new(ATTR_B2, *l)])
                .collect(),
        };
        let consequents = scheme.effort.labels().iter().map(|l| vec![Condition::new(ATTR_EFFORT, *l)]).collect();
        FigureGroupSpec { id: self, scheme, antecedents, consequents }
    }
}

impl fmt::Display for FigureGroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FigureGroupId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureGroupId::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown figure group {s:?}")))
    }
}

/// Selects groups by `all`, a question (`RQ1`) or a full group id.
pub fn select_groups(selector: &str) -> Result<Vec<FigureGroupId>> {
    if selector.eq_ignore_ascii_case("all") {
        return Ok(FigureGroupId::ALL.to_vec());
    }
    let by_question: Vec<_> =
        FigureGroupId::ALL.into_iter().filter(|g| g.question().eq_ignore_ascii_case(selector)).collect();
    if !by_question.is_empty() {
        return Ok(by_question);
    }
    Ok(vec![selector.parse()?])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FigureGroupSpec {
    pub id: FigureGroupId,
    pub scheme: Scheme,
    /// One x-axis position per antecedent.
    pub antecedents: Vec<Vec<Condition>>,
    /// One bar per consequent.
    pub consequents: Vec<Vec<Condition>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    /// No rule cleared the support (or confidence) threshold for this cell.
    BelowThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureCell {
    pub group: FigureGroupId,
    pub antecedent: String,
    pub consequent: String,
    pub status: CellStatus,
    pub t: u64,
    pub t_x: Option<u64>,
    pub t_y: Option<u64>,
    pub t_xy: Option<u64>,
    pub support: Option<f64>,
    pub confidence: Option<f64>,
    pub lift: Option<f64>,
}

/// Looks up every cell of every group in `table`. Each group must have been
/// mined under its own scheme.
pub fn emit_figure_groups(table: &RuleTable, specs: &[FigureGroupSpec]) -> Result<Vec<FigureCell>> {
    let mut out = Vec::new();
    for spec in specs {
        if table.scheme != Some(spec.scheme) {
            return Err(Error::Config(format!(
                "figure group {} needs rules mined with scheme {}, table has {}",
                spec.id,
                spec.scheme.name(),
                table.scheme.map(|s| s.name()).unwrap_or_else(|| "none".into())
            )));
        }
        for cond in spec.antecedents.iter().chain(&spec.consequents).flatten() {
            if !table.has_condition(cond) {
                return Err(Error::Config(format!(
                    "figure group {} refers to {cond}, which the rule table does not declare",
                    spec.id
                )));
            }
        }
        for x in &spec.antecedents {
            for y in &spec.consequents {
                let rule = table.find(x, y);
                out.push(FigureCell {
                    group: spec.id,
                    antecedent: format_conditions(x),
                    consequent: format_conditions(y),
                    status: if rule.is_some() { CellStatus::Ok } else { CellStatus::BelowThreshold },
                    t: table.rows,
                    t_x: rule.map(|r| r.t_x),
                    t_y: rule.map(|r| r.t_y),
                    t_xy: rule.map(|r| r.t_xy),
                    support: rule.map(|r| r.support()),
                    confidence: rule.map(|r| r.confidence()),
                    lift: rule.map(|r| r.lift()),
                });
            }
        }
    }
    Ok(out)
}
