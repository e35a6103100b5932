//! Multidimensional association rules over discretized merge features.
//!
//! Rows are categorical: every attribute takes exactly one label per row.
//! Frequent itemsets are found level by level (Apriori) and every split of a
//! frequent itemset into antecedent and consequent becomes a candidate rule.
//! Rules keep the raw counts they were computed from, so support,
//! confidence and lift are always derived from exact integers:
//!
//! ```text
//! support    = t_xy / t
//! confidence = t_xy / t_x
//! lift       = confidence / (t_y / t)
//! ```

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sha::Sha;

pub const ATTR_B1: &str = "b1";
pub const ATTR_B2: &str = "b2";
pub const ATTR_REFACTORINGS: &str = "refactorings";
pub const ATTR_EFFORT: &str = "effort";

/// Minimum support used for the full-corpus analysis (0.05%).
pub const DEFAULT_MIN_SUPPORT: f64 = 0.0005;
/// Confidence ratio above which a rule's direction is considered settled.
pub const DEFAULT_DIRECTION_RATIO: f64 = 2.0;

/// One valid merge: refactorings on each side and the measured effort.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeFeatureRow {
    pub project: String,
    pub merge_sha: Sha,
    pub b1: u64,
    pub b2: u64,
    pub refactorings: u64,
    pub effort: u64,
}

impl MergeFeatureRow {
    pub fn new(project: impl Into<String>, merge_sha: Sha, b1: u64, b2: u64, effort: u64) -> Self {
        MergeFeatureRow { project: project.into(), merge_sha, b1, b2, refactorings: b1 + b2, effort }
    }

    pub fn check(&self) -> Result<()> {
        if self.refactorings != self.b1 + self.b2 {
            return Err(Error::Domain(format!(
                "row {}: refactorings {} != b1 {} + b2 {}",
                self.merge_sha, self.refactorings, self.b1, self.b2
            )));
        }
        Ok(())
    }
}

pub fn discretize_binary(n: u64) -> &'static str {
    if n == 0 {
        "false"
    } else {
        "true"
    }
}

/// `0`, units (1–9), dozens (10–99), hundreds or more.
pub fn discretize_magnitude(n: u64) -> &'static str {
    match n {
        0 => "0",
        1..=9 => "u",
        10..=99 => "d",
        _ => "≥100",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Binning {
    Binary,
    Magnitude,
}

impl Binning {
    pub fn labels(self) -> &'static [&'static str] {
        match self {
            Binning::Binary => &["false", "true"],
            Binning::Magnitude => &["0", "u", "d", "≥100"],
        }
    }

    pub fn label(self, n: u64) -> &'static str {
        match self {
            Binning::Binary => discretize_binary(n),
            Binning::Magnitude => discretize_magnitude(n),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Binning::Binary => "binary",
            Binning::Magnitude => "magnitude",
        }
    }
}

impl FromStr for Binning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Binning::Binary),
            "magnitude" => Ok(Binning::Magnitude),
            other => Err(Error::Config(format!("unknown discretization scheme {other:?}"))),
        }
    }
}

/// How refactoring counts (b1, b2, refactorings) and effort are binned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Scheme {
    pub refactorings: Binning,
    pub effort: Binning,
}

impl Scheme {
    /// Occurrence of refactorings against occurrence of effort.
    pub const BINARY: Scheme = Scheme { refactorings: Binning::Binary, effort: Binning::Binary };
    /// Amount of refactorings against occurrence of effort.
    pub const MAGNITUDE: Scheme = Scheme { refactorings: Binning::Magnitude, effort: Binning::Binary };
    /// Amount of refactorings against amount of effort.
    pub const INTENSITY: Scheme = Scheme { refactorings: Binning::Magnitude, effort: Binning::Magnitude };

    pub fn name(self) -> String {
        format!("{}-{}", self.refactorings.as_str(), self.effort.as_str())
    }

    pub fn binning(self, attribute: &str) -> Option<Binning> {
        match attribute {
            ATTR_B1 | ATTR_B2 | ATTR_REFACTORINGS => Some(self.refactorings),
            ATTR_EFFORT => Some(self.effort),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub labels: Vec<String>,
}

/// A single `attribute = label` test.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    pub value: String,
}

impl Condition {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Condition { attribute: attribute.into(), value: value.into() }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

pub fn format_conditions(conds: &[Condition]) -> String {
    conds.iter().map(ToString::to_string).collect::<Vec<_>>().join(" & ")
}

/// Attribute index and label index.
type Item = (u16, u16);

/// A categorical table. Row values are label indices into the schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    attributes: Vec<Attribute>,
    rows: Vec<Vec<u16>>,
    scheme: Option<Scheme>,
}

impl Dataset {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() || attributes.len() > u16::MAX as usize {
            return Err(Error::Domain("dataset needs between 1 and 65535 attributes".into()));
        }
        for (i, a) in attributes.iter().enumerate() {
            if attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Domain(format!("duplicate attribute {:?}", a.name)));
            }
            if a.labels.is_empty() {
                return Err(Error::Domain(format!("attribute {:?} has no labels", a.name)));
            }
        }
        Ok(Dataset { attributes, rows: Vec::new(), scheme: None })
    }

    /// Discretizes feature rows over the attributes b1, b2, refactorings
    /// and effort.
    pub fn from_feature_rows(rows: &[MergeFeatureRow], scheme: Scheme) -> Result<Self> {
        let attr = |name: &str| Attribute {
            name: name.to_string(),
            labels: scheme.binning(name).unwrap().labels().iter().map(|s| s.to_string()).collect(),
        };
        let mut ds = Dataset::new(vec![attr(ATTR_B1), attr(ATTR_B2), attr(ATTR_REFACTORINGS), attr(ATTR_EFFORT)])?;
        ds.scheme = Some(scheme);
        for r in rows {
            r.check()?;
            ds.push_row(&[
                scheme.refactorings.label(r.b1),
                scheme.refactorings.label(r.b2),
                scheme.refactorings.label(r.refactorings),
                scheme.effort.label(r.effort),
            ])?;
        }
        Ok(ds)
    }

    pub fn push_row(&mut self, labels: &[&str]) -> Result<()> {
        if labels.len() != self.attributes.len() {
            return Err(Error::Domain(format!(
                "row has {} values, schema has {} attributes",
                labels.len(),
                self.attributes.len()
            )));
        }
        let row = labels
            .iter()
            .zip(&self.attributes)
            .map(|(l, a)| {
                a.labels
                    .iter()
                    .position(|x| x == l)
                    .map(|i| i as u16)
                    .ok_or_else(|| Error::Domain(format!("label {l:?} not declared for attribute {:?}", a.name)))
            })
            .collect::<Result<Vec<_>>>()?;
        self.rows.push(row);
        Ok(())
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn scheme(&self) -> Option<Scheme> {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row `i` as attribute → label.
    pub fn row(&self, i: usize) -> BTreeMap<&str, &str> {
        self.rows[i]
            .iter()
            .zip(&self.attributes)
            .map(|(&l, a)| (a.name.as_str(), a.labels[l as usize].as_str()))
            .collect()
    }

    fn item(&self, c: &Condition) -> Option<Item> {
        let a = self.attributes.iter().position(|x| x.name == c.attribute)?;
        let l = self.attributes[a].labels.iter().position(|x| *x == c.value)?;
        Some((a as u16, l as u16))
    }

    /// Number of rows satisfying every condition.
    pub fn count(&self, conditions: &[Condition]) -> Result<u64> {
        let items = conditions
            .iter()
            .map(|c| {
                self.item(c).ok_or_else(|| Error::Config(format!("condition {c} is not part of the dataset schema")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.count_items(&items))
    }

    fn count_items(&self, items: &[Item]) -> u64 {
        self.rows.iter().filter(|row| items.iter().all(|&(a, l)| row[a as usize] == l)).count() as u64
    }
}

fn meets(count: u64, total: u64, threshold: f64) -> bool {
    count as f64 / total as f64 >= threshold
}

fn check_min_support(min_support: f64) -> Result<()> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::Domain(format!("min_support must be in (0, 1], got {min_support}")));
    }
    Ok(())
}

/// Frequent itemsets with their absolute counts.
#[derive(Debug, Clone)]
pub struct FrequentItemsets {
    attributes: Vec<Attribute>,
    scheme: Option<Scheme>,
    total: u64,
    counts: BTreeMap<Vec<Item>, u64>,
}

impl FrequentItemsets {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn condition(&self, (a, l): Item) -> Condition {
        let attr = &self.attributes[a as usize];
        Condition::new(&attr.name, &attr.labels[l as usize])
    }

    fn conditions(&self, items: &[Item]) -> Vec<Condition> {
        items.iter().map(|&i| self.condition(i)).collect()
    }

    /// Itemsets as condition lists (schema order) with counts.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<Condition>, u64)> + '_ {
        self.counts.iter().map(|(items, &n)| (self.conditions(items), n))
    }

    /// Support of an itemset given as conditions, if it is frequent.
    pub fn support(&self, conditions: &[Condition]) -> Option<f64> {
        self.count(conditions).map(|n| n as f64 / self.total as f64)
    }

    pub fn count(&self, conditions: &[Condition]) -> Option<u64> {
        let mut items = Vec::with_capacity(conditions.len());
        for c in conditions {
            let a = self.attributes.iter().position(|x| x.name == c.attribute)?;
            let l = self.attributes[a].labels.iter().position(|x| *x == c.value)?;
            items.push((a as u16, l as u16));
        }
        items.sort_unstable();
        self.counts.get(&items).copied()
    }
}

/// Level-wise frequent itemset search. At most one condition per attribute
/// appears in an itemset.
pub fn apriori_frequent_itemsets(dataset: &Dataset, min_support: f64) -> Result<FrequentItemsets> {
    if dataset.is_empty() {
        return Err(Error::Domain("cannot mine an empty dataset".into()));
    }
    check_min_support(min_support)?;
    let total = dataset.len() as u64;
    let mut counts = BTreeMap::new();

    let mut level: Vec<(Vec<Item>, u64)> = Vec::new();
    for (a, attr) in dataset.attributes.iter().enumerate() {
        let mut per_label = vec![0u64; attr.labels.len()];
        for row in &dataset.rows {
            per_label[row[a] as usize] += 1;
        }
        for (l, &n) in per_label.iter().enumerate() {
            if n > 0 && meets(n, total, min_support) {
                level.push((vec![(a as u16, l as u16)], n));
            }
        }
    }

    while !level.is_empty() {
        let frequent: HashMap<&[Item], u64> = level.iter().map(|(k, n)| (k.as_slice(), *n)).collect();
        let mut candidates: Vec<Vec<Item>> = Vec::new();
        for (i, (x, _)) in level.iter().enumerate() {
            for (y, _) in &level[i + 1..] {
                let k = x.len();
                if x[..k - 1] != y[..k - 1] {
                    // `level` is sorted, so no later itemset shares x's prefix.
                    break;
                }
                let (lx, ly) = (x[k - 1], y[k - 1]);
                if lx.0 == ly.0 {
                    continue;
                }
                let mut cand = x.clone();
                cand.push(ly);
                let all_subsets_frequent = (0..cand.len()).all(|skip| {
                    let sub: Vec<Item> =
                        cand.iter().enumerate().filter(|&(j, _)| j != skip).map(|(_, &it)| it).collect();
                    frequent.contains_key(sub.as_slice())
                });
                if all_subsets_frequent {
                    candidates.push(cand);
                }
            }
        }
        for (k, n) in level.drain(..) {
            counts.insert(k, n);
        }
        for cand in candidates {
            let n = dataset.count_items(&cand);
            if n > 0 && meets(n, total, min_support) {
                level.push((cand, n));
            }
        }
        level.sort();
    }

    Ok(FrequentItemsets { attributes: dataset.attributes.clone(), scheme: dataset.scheme, total, counts })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<Condition>,
    pub consequent: Vec<Condition>,
    pub t_xy: u64,
    pub t_x: u64,
    pub t_y: u64,
    pub t: u64,
}

impl AssociationRule {
    pub fn support(&self) -> f64 {
        self.t_xy as f64 / self.t as f64
    }

    pub fn confidence(&self) -> f64 {
        self.t_xy as f64 / self.t_x as f64
    }

    /// `confidence / support(consequent)`, evaluated as one quotient of
    /// integers: `t_xy · t / (t_x · t_y)`.
    pub fn lift(&self) -> f64 {
        (self.t_xy as f64 * self.t as f64) / (self.t_x as f64 * self.t_y as f64)
    }

    /// Exact comparison of two lifts.
    pub fn cmp_lift(&self, other: &AssociationRule) -> Ordering {
        let lhs = self.t_xy as u128 * self.t as u128 * other.t_x as u128 * other.t_y as u128;
        let rhs = other.t_xy as u128 * other.t as u128 * self.t_x as u128 * self.t_y as u128;
        lhs.cmp(&rhs)
    }

    fn cmp_support(&self, other: &AssociationRule) -> Ordering {
        (self.t_xy as u128 * other.t as u128).cmp(&(other.t_xy as u128 * self.t as u128))
    }

    /// Descending lift, then descending support, then conditions.
    pub fn report_order(a: &AssociationRule, b: &AssociationRule) -> Ordering {
        b.cmp_lift(a)
            .then_with(|| b.cmp_support(a))
            .then_with(|| a.antecedent.cmp(&b.antecedent))
            .then_with(|| a.consequent.cmp(&b.consequent))
    }

    pub fn reversed(&self) -> AssociationRule {
        AssociationRule {
            antecedent: self.consequent.clone(),
            consequent: self.antecedent.clone(),
            t_xy: self.t_xy,
            t_x: self.t_y,
            t_y: self.t_x,
            t: self.t,
        }
    }
}

impl fmt::Display for AssociationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} (sup {:.4}, conf {:.4}, lift {:.4})",
            format_conditions(&self.antecedent),
            format_conditions(&self.consequent),
            self.support(),
            self.confidence(),
            self.lift()
        )
    }
}

/// Rules mined from one dataset, in report order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleTable {
    pub attributes: Vec<Attribute>,
    pub scheme: Option<Scheme>,
    pub rows: u64,
    pub rules: Vec<AssociationRule>,
}

impl RuleTable {
    pub fn find(&self, antecedent: &[Condition], consequent: &[Condition]) -> Option<&AssociationRule> {
        let norm = |c: &[Condition]| {
            let mut v = c.to_vec();
            v.sort_by_key(|c| self.attributes.iter().position(|a| a.name == c.attribute));
            v
        };
        let (x, y) = (norm(antecedent), norm(consequent));
        self.rules.iter().find(|r| r.antecedent == x && r.consequent == y)
    }

    pub fn has_condition(&self, c: &Condition) -> bool {
        self.attributes.iter().any(|a| a.name == c.attribute && a.labels.contains(&c.value))
    }
}

/// Every antecedent/consequent split of every frequent itemset that clears
/// both thresholds.
pub fn derive_rules(itemsets: &FrequentItemsets, min_support: f64, min_confidence: f64) -> RuleTable {
    let mut rules = Vec::new();
    let t = itemsets.total;
    for (items, &t_xy) in &itemsets.counts {
        let k = items.len();
        if k < 2 || !meets(t_xy, t, min_support) {
            continue;
        }
        for mask in 1..(1u32 << k) - 1 {
            let (mut x, mut y) = (Vec::new(), Vec::new());
            for (j, &it) in items.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    x.push(it);
                } else {
                    y.push(it);
                }
            }
            let t_x = itemsets.counts[&x];
            let t_y = itemsets.counts[&y];
            if !meets(t_xy, t_x, min_confidence) {
                continue;
            }
            rules.push(AssociationRule {
                antecedent: itemsets.conditions(&x),
                consequent: itemsets.conditions(&y),
                t_xy,
                t_x,
                t_y,
                t,
            });
        }
    }
    rules.sort_by(AssociationRule::report_order);
    RuleTable { attributes: itemsets.attributes.clone(), scheme: itemsets.scheme, rows: t, rules }
}

/// Frequent itemsets followed by rule derivation.
pub fn mine_rules(dataset: &Dataset, min_support: f64, min_confidence: f64) -> Result<RuleTable> {
    let itemsets = apriori_frequent_itemsets(dataset, min_support)?;
    Ok(derive_rules(&itemsets, min_support, min_confidence))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
    Undecided,
}

/// Decides which way a rule pair points by comparing confidences. Lift is
/// symmetric, so it cannot tell `X → Y` from `Y → X`.
pub fn rule_direction(
    forward: &AssociationRule,
    backward: &AssociationRule,
    ratio_threshold: f64,
) -> Result<Direction> {
    if !(ratio_threshold >= 1.0 && ratio_threshold.is_finite()) {
        return Err(Error::ContractViolation(format!(
            "ratio threshold must be a finite number >= 1, got {ratio_threshold}"
        )));
    }
    let mirrored = forward.antecedent == backward.consequent
        && forward.consequent == backward.antecedent
        && forward.t == backward.t
        && forward.t_xy == backward.t_xy
        && forward.t_x == backward.t_y
        && forward.t_y == backward.t_x;
    if !mirrored {
        return Err(Error::ContractViolation(
            "backward rule is not the forward rule with antecedent and consequent swapped".into(),
        ));
    }
    if forward.cmp_lift(backward) != Ordering::Equal {
        return Err(Error::ContractViolation("rule pair has different lifts".into()));
    }
    if forward.t_xy == 0 {
        return Ok(Direction::Undecided);
    }
    // conf_f / conf_b = t_x(backward) / t_x(forward)
    let (fx, bx) = (forward.t_x as f64, backward.t_x as f64);
    Ok(if bx >= ratio_threshold * fx {
        Direction::Forward
    } else if fx >= ratio_threshold * bx {
        Direction::Backward
    } else {
        Direction::Undecided
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn worked_example() -> Dataset {
        let attr = |name: &str, labels: &[&str]| Attribute {
            name: name.into(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
        };
        let mut ds = Dataset::new(vec![
            attr("b1", &["0", "u", "d", "≥100"]),
            attr("b2", &["0", "u", "d", "≥100"]),
            attr("effort", &["false", "true"]),
        ])
        .unwrap();
        for row in [
            ["u", "d", "true"],
            ["0", "≥100", "false"],
            ["u", "d", "false"],
            ["u", "d", "true"],
            ["u", "u", "false"],
            ["u", "d", "true"],
            ["u", "d", "false"],
            ["u", "d", "true"],
        ] {
            ds.push_row(&row).unwrap();
        }
        ds
    }

    fn c(a: &str, v: &str) -> Condition {
        Condition::new(a, v)
    }

    #[test]
    fn binary_labels() {
        assert_eq!(discretize_binary(0), "false");
        assert_eq!(discretize_binary(1), "true");
        assert_eq!(discretize_binary(40248), "true");
    }

    #[test]
    fn magnitude_boundaries() {
        let cases = [(0, "0"), (1, "u"), (5, "u"), (9, "u"), (10, "d"), (99, "d"), (100, "≥100"), (u64::MAX, "≥100")];
        for (n, want) in cases {
            assert_eq!(discretize_magnitude(n), want, "n = {n}");
        }
    }

    #[test]
    fn worked_example_itemsets() {
        let ds = worked_example();
        let fi = apriori_frequent_itemsets(&ds, 0.5).unwrap();
        assert_eq!(fi.count(&[c("b1", "u")]), Some(7));
        assert_eq!(fi.count(&[c("b1", "u"), c("b2", "d")]), Some(6));
        assert_eq!(fi.count(&[c("b1", "u"), c("b2", "d"), c("effort", "true")]), Some(4));
        assert_eq!(fi.support(&[c("b2", "d"), c("b1", "u")]), Some(0.75));
        // 1/8 < 0.5
        assert_eq!(fi.count(&[c("b1", "0")]), None);
    }

    #[test]
    fn worked_example_rule() {
        let rules = mine_rules(&worked_example(), 0.25, 0.0).unwrap();
        let r = rules.find(&[c("b1", "u"), c("b2", "d")], &[c("effort", "true")]).expect("rule present");
        assert_eq!((r.t_xy, r.t_x, r.t_y, r.t), (4, 6, 4, 8));
        assert_eq!(r.support(), 0.5);
        assert!((r.confidence() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.lift() - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn worked_example_direction() {
        let rules = mine_rules(&worked_example(), 0.25, 0.0).unwrap();
        let fwd = rules.find(&[c("b1", "u"), c("b2", "d")], &[c("effort", "true")]).unwrap();
        let bwd = rules.find(&[c("effort", "true")], &[c("b1", "u"), c("b2", "d")]).unwrap();
        // conf 4/6 forward vs 4/4 backward
        assert_eq!(bwd.confidence(), 1.0);
        assert_eq!(rule_direction(fwd, bwd, 2.0).unwrap(), Direction::Undecided);
        assert_eq!(rule_direction(fwd, bwd, 1.4).unwrap(), Direction::Backward);
        assert_eq!(rule_direction(bwd, fwd, 1.4).unwrap(), Direction::Forward);
    }

    fn synthetic(t_xy: u64, t_x: u64, t_y: u64) -> AssociationRule {
        AssociationRule { antecedent: vec![c("x", "1")], consequent: vec![c("y", "1")], t_xy, t_x, t_y, t: 100 }
    }

    #[test]
    fn direction_examples() {
        let fwd = synthetic(9, 10, 45);
        assert_eq!(fwd.confidence(), 0.9);
        assert_eq!(fwd.reversed().confidence(), 0.2);
        assert_eq!(rule_direction(&fwd, &fwd.reversed(), 2.0).unwrap(), Direction::Forward);
        let even = synthetic(5, 10, 10);
        assert_eq!(rule_direction(&even, &even.reversed(), 2.0).unwrap(), Direction::Undecided);
        assert!(rule_direction(&fwd, &even.reversed(), 2.0).is_err());
        assert!(rule_direction(&fwd, &fwd.reversed(), 0.5).is_err());
    }

    #[test]
    fn constant_consequent_has_unit_lift() {
        let attr = |name: &str| Attribute { name: name.into(), labels: vec!["a".into(), "b".into()] };
        let mut ds = Dataset::new(vec![attr("x"), attr("k")]).unwrap();
        for x in ["a", "b", "a", "a", "b"] {
            ds.push_row(&[x, "a"]).unwrap();
        }
        let rules = mine_rules(&ds, 0.1, 0.0).unwrap();
        let onto_k: Vec<_> = rules.rules.iter().filter(|r| r.consequent == [c("k", "a")]).collect();
        assert_eq!(onto_k.len(), 2);
        for r in onto_k {
            assert_eq!(r.lift(), 1.0);
            assert_eq!(r.confidence(), 1.0);
        }
    }

    #[test]
    fn identical_rows_full_support() {
        let attr = |name: &str| Attribute { name: name.into(), labels: vec!["p".into(), "q".into()] };
        let mut ds = Dataset::new(vec![attr("a"), attr("b"), attr("c")]).unwrap();
        for _ in 0..4 {
            ds.push_row(&["p", "q", "p"]).unwrap();
        }
        let fi = apriori_frequent_itemsets(&ds, 1.0).unwrap();
        // every nonempty subset of the 3-condition row
        assert_eq!(fi.len(), 7);
        assert_eq!(fi.count(&[c("a", "p"), c("b", "q"), c("c", "p")]), Some(4));
    }

    #[test]
    fn rejects_bad_inputs() {
        let ds = worked_example();
        assert!(apriori_frequent_itemsets(&ds, 0.0).is_err());
        assert!(apriori_frequent_itemsets(&ds, 1.5).is_err());
        let empty = Dataset::new(ds.attributes().to_vec()).unwrap();
        assert!(apriori_frequent_itemsets(&empty, 0.5).is_err());
        let mut ds = worked_example();
        assert!(ds.push_row(&["u", "x", "true"]).is_err());
        assert!(ds.push_row(&["u", "d"]).is_err());
    }

    #[test]
    fn feature_rows_are_discretized_per_scheme() {
        let sha = Sha::parse(&"a".repeat(40)).unwrap();
        let rows = vec![MergeFeatureRow::new("p", sha, 0, 12, 0), MergeFeatureRow::new("p", sha, 3, 200, 150)];
        let ds = Dataset::from_feature_rows(&rows, Scheme::MAGNITUDE).unwrap();
        assert_eq!(ds.row(0)["refactorings"], "d");
        assert_eq!(ds.row(0)["effort"], "false");
        assert_eq!(ds.row(1)["b2"], "≥100");
        let ds = Dataset::from_feature_rows(&rows, Scheme::INTENSITY).unwrap();
        assert_eq!(ds.row(1)["effort"], "≥100");
        let mut bad = rows[0].clone();
        bad.refactorings = 1;
        assert!(Dataset::from_feature_rows(&[bad], Scheme::BINARY).is_err());
    }

    #[test]
    fn report_order_descends_by_lift() {
        let rules = mine_rules(&worked_example(), 0.125, 0.0).unwrap();
        for w in rules.rules.windows(2) {
            assert_ne!(AssociationRule::report_order(&w[0], &w[1]), Ordering::Greater);
            assert!(w[0].lift() >= w[1].lift() - 1e-12);
        }
    }
}
