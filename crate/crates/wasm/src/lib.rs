//! Browser entry points. Each export takes plain text and returns JSON; the
//! work happens in ordinary functions so it can be tested natively.

use refmerge_core::corpus::{select_corpus, RepoMeta};
use refmerge_core::effort::{diff_lines, Action, ActionKind, ActionMultiset, EffortBreakdown, EffortMode};
use refmerge_core::rules::{
    mine_rules as mine, Attribute, Binning, Dataset, MergeFeatureRow, RuleTable, Scheme, ATTR_B1, ATTR_B2, ATTR_EFFORT,
};
use refmerge_core::Sha;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleView {
    pub antecedent: String,
    pub consequent: String,
    pub support: f64,
    pub confidence: f64,
    pub lift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinedView {
    pub rows: u64,
    pub attributes: Vec<Attribute>,
    pub rules: Vec<RuleView>,
}

fn cells(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn scheme_named(name: &str) -> Result<Option<Scheme>, String> {
    let (refactorings, effort) = match name {
        "labels" => return Ok(None),
        "binary" => (Binning::Binary, Binning::Binary),
        "magnitude" => (Binning::Magnitude, Binning::Binary),
        "intensity" => (Binning::Magnitude, Binning::Magnitude),
        other => return Err(format!("unknown scheme {other:?}")),
    };
    Ok(Some(Scheme { refactorings, effort }))
}

/// Categorical table: header of attribute names, then one row of labels
/// per line. Labels are collected per column in order of appearance.
fn label_dataset(text: &str) -> Result<Dataset, String> {
    let mut lines = data_lines(text);
    let (_, header) = lines.next().ok_or("the table is empty")?;
    let names = cells(header);
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    let mut rows = Vec::new();
    for (n, line) in lines {
        let row = cells(line);
        if row.len() != names.len() {
            return Err(format!("line {n}: {} cells, expected {}", row.len(), names.len()));
        }
        for (col, cell) in row.iter().enumerate() {
            if !labels[col].iter().any(|l| l == cell) {
                labels[col].push(cell.to_string());
            }
        }
        rows.push(row);
    }
    let attributes =
        names.iter().zip(labels).map(|(name, labels)| Attribute { name: name.to_string(), labels }).collect();
    let mut ds = Dataset::new(attributes).map_err(|e| e.to_string())?;
    for row in rows {
        ds.push_row(&row).map_err(|e| e.to_string())?;
    }
    Ok(ds)
}

/// Count table with columns b1, b2 and effort, discretized by `scheme`.
fn count_dataset(text: &str, scheme: Scheme) -> Result<Dataset, String> {
    let mut lines = data_lines(text);
    let (_, header) = lines.next().ok_or("the table is empty")?;
    let names = cells(header);
    let column = |want: &str| names.iter().position(|n| *n == want).ok_or_else(|| format!("missing column {want:?}"));
    let (c1, c2, ce) = (column(ATTR_B1)?, column(ATTR_B2)?, column(ATTR_EFFORT)?);
    let mut rows = Vec::new();
    for (i, (n, line)) in lines.enumerate() {
        let row = cells(line);
        let num = |c: usize| -> Result<u64, String> {
            let cell = row.get(c).ok_or_else(|| format!("line {n}: too few cells"))?;
            cell.parse().map_err(|_| format!("line {n}: {cell:?} is not a count"))
        };
        let mut id = [0u8; 20];
        id[..8].copy_from_slice(&(i as u64).to_be_bytes());
        rows.push(MergeFeatureRow::new("table", Sha::from_bytes(id), num(c1)?, num(c2)?, num(ce)?));
    }
    Dataset::from_feature_rows(&rows, scheme).map_err(|e| e.to_string())
}

pub fn mine_table(text: &str, scheme: &str, min_support: f64, min_confidence: f64) -> Result<MinedView, String> {
    let ds = match scheme_named(scheme)? {
        None => label_dataset(text)?,
        Some(s) => count_dataset(text, s)?,
    };
    if ds.is_empty() {
        return Err("the table has no rows".into());
    }
    let table: RuleTable = mine(&ds, min_support, min_confidence).map_err(|e| e.to_string())?;
    Ok(MinedView {
        rows: table.rows,
        attributes: table.attributes.clone(),
        rules: table
            .rules
            .iter()
            .map(|r| RuleView {
                antecedent: refmerge_core::rules::format_conditions(&r.antecedent),
                consequent: refmerge_core::rules::format_conditions(&r.consequent),
                support: r.support(),
                confidence: r.confidence(),
                lift: r.lift(),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EffortView {
    pub effort: u64,
    pub merge_actions: Vec<String>,
    pub branch_actions: Vec<String>,
    /// Merge actions neither branch performed.
    pub extra: Vec<String>,
    /// Branch actions missing from the merge.
    pub discarded: Vec<String>,
}

fn render(m: &ActionMultiset) -> Vec<String> {
    let one = |a: &Action| {
        let sign = match a.kind {
            ActionKind::Add => '+',
            ActionKind::Remove => '-',
        };
        format!("{sign}{}", String::from_utf8_lossy(&a.line))
    };
    m.iter().flat_map(|(a, n)| std::iter::repeat_n(one(a), n as usize)).collect()
}

/// Effort of merging one file: `base` edited into `left` and `right`, then
/// resolved as `merged`.
pub fn file_effort(base: &str, left: &str, right: &str, merged: &str, symmetric: bool) -> EffortView {
    const PATH: &str = "file";
    let b1 = diff_lines(PATH, base.as_bytes(), left.as_bytes());
    let b2 = diff_lines(PATH, base.as_bytes(), right.as_bytes());
    let m = diff_lines(PATH, base.as_bytes(), merged.as_bytes());
    let breakdown = EffortBreakdown::new(m, &b1, &b2);
    let mode = if symmetric { EffortMode::Symmetric } else { EffortMode::MergeMinusBranches };
    EffortView {
        effort: breakdown.effort(mode),
        merge_actions: render(&breakdown.actions_merge),
        branch_actions: render(&breakdown.actions_branches),
        extra: render(&breakdown.extra),
        discarded: render(&breakdown.discarded),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutView {
    pub q1: f64,
    pub q3: f64,
    pub upper_fence: f64,
    pub kept: Vec<String>,
    pub dropped_above: Vec<String>,
    pub dropped_below: Vec<String>,
}

/// Corpus cut over `name count` lines: drop counts above the upper fence and
/// below the first quartile.
pub fn corpus_cut(text: &str) -> Result<CutView, String> {
    let mut repos = Vec::new();
    for (n, line) in data_lines(text) {
        let (name, count) = line
            .rsplit_once(|c: char| c.is_whitespace() || c == ',')
            .ok_or_else(|| format!("line {n}: expected a name and a count"))?;
        let count: u64 = count.trim().parse().map_err(|_| format!("line {n}: {count:?} is not a count"))?;
        let meta = RepoMeta {
            owner_and_name: name.trim().trim_end_matches(',').to_string(),
            stars: 0,
            is_fork: false,
            is_archived: false,
            last_push: Default::default(),
            contributors: 0,
            default_branch_commits: 0,
            primary_language: String::new(),
        };
        repos.push((meta, count));
    }
    let selection = select_corpus(&repos);
    let fences = selection.fences.ok_or("no counts given")?;
    Ok(CutView {
        q1: fences.q1,
        q3: fences.q3,
        upper_fence: fences.upper_fence,
        kept: selection.kept.into_iter().map(|r| r.owner_and_name).collect(),
        dropped_above: selection.dropped_above,
        dropped_below: selection.dropped_below,
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Association rules of a comma-separated table, as JSON.
#[wasm_bindgen(js_name = mineRules)]
pub fn mine_rules(text: &str, scheme: &str, min_support: f64, min_confidence: f64) -> Result<String, JsError> {
    to_json(mine_table(text, scheme, min_support, min_confidence))
}

/// Merge effort of a single file, as JSON.
#[wasm_bindgen(js_name = mergeEffort)]
pub fn merge_effort(base: &str, left: &str, right: &str, merged: &str, symmetric: bool) -> Result<String, JsError> {
    to_json(Ok(file_effort(base, left, right, merged, symmetric)))
}

/// Quartile cut of a list of merge counts, as JSON.
#[wasm_bindgen(js_name = corpusCut)]
pub fn corpus_cut_json(text: &str) -> Result<String, JsError> {
    to_json(corpus_cut(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str =
        "b1,b2,effort\nu,d,true\n0,≥100,false\nu,d,false\nu,d,true\nu,u,false\nu,d,true\nu,d,false\nu,d,true\n";

    #[test]
    fn labelled_table_gives_the_worked_example_rule() {
        let mined = mine_table(SAMPLE, "labels", 0.25, 0.0).unwrap();
        assert_eq!(mined.rows, 8);
        let r = mined.rules.iter().find(|r| r.antecedent == "b1=u & b2=d" && r.consequent == "effort=true").unwrap();
        assert_eq!(r.support, 0.5);
        assert!((r.lift - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn count_table_is_discretized() {
        let text = "# merges\nb1,b2,effort\n3,15,2\n0,150,0\n4,20,0\n2,11,7\n";
        let mined = mine_table(text, "magnitude", 0.25, 0.0).unwrap();
        let b1 = &mined.attributes[0];
        assert_eq!(b1.labels, ["0", "u", "d", "≥100"]);
        assert!(mined.rules.iter().any(|r| r.antecedent == "b1=u & b2=d" && r.consequent == "effort=true"));
        assert!(mine_table("b1,b2\n1,2\n", "binary", 0.1, 0.0).is_err());
        assert!(mine_table("b1,b2,effort\nx,1,1\n", "binary", 0.1, 0.0).is_err());
        assert!(mine_table(text, "fancy", 0.1, 0.0).is_err());
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let err = mine_table("a,b\n1,2\n3\n", "labels", 0.1, 0.0).unwrap_err();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn single_file_effort() {
        let base = "a\nb\nc\n";
        let novel = file_effort(base, "a\nB1\nc\n", "a\nB2\nc\n", "a\nB3\nc\n", false);
        assert_eq!(novel.effort, 1);
        assert_eq!(novel.extra, ["+B3"]);
        let kept = file_effort(base, "a\nB1\nc\n", "a\nB2\nc\n", "a\nB1\nc\n", true);
        assert_eq!(kept.effort, 2);
        assert_eq!(file_effort(base, "x\nb\nc\n", "a\nb\ny\n", "x\nb\ny\n", true).effort, 0);
    }

    #[test]
    fn cut_drops_both_tails() {
        let text = "small 5\nmid1 100\nmid2 120\nmid3 130\nmid4 140\nhuge 100000\n";
        let cut = corpus_cut(text).unwrap();
        // q1 interpolates between 100 and 120
        assert_eq!(cut.q1, 105.0);
        assert_eq!(cut.dropped_above, ["huge"]);
        assert_eq!(cut.dropped_below, ["small", "mid1"]);
        assert_eq!(cut.kept, ["mid2", "mid3", "mid4"]);
        assert!(corpus_cut("").is_err());
        assert!(corpus_cut("name lots\n").is_err());
    }
}
