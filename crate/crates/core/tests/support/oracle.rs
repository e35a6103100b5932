//! Exhaustive association-rule enumeration, used as an oracle for the
//! Apriori miner. Shares nothing with the implementation beyond the
//! definitions of support and confidence.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;

pub type Cond = (String, String);
/// (antecedent, consequent) -> (t_xy, t_x, t_y, t)
pub type RuleMap = BTreeMap<(Vec<Cond>, Vec<Cond>), (u64, u64, u64, u64)>;

#[derive(Debug, Clone)]
pub struct Table {
    pub attributes: Vec<(String, Vec<String>)>,
    pub rows: Vec<Vec<usize>>,
}

impl Table {
    pub fn random<R: Rng>(rng: &mut R, max_rows: usize, max_attrs: usize, max_labels: usize) -> Table {
        let n_attrs = rng.gen_range(1..=max_attrs);
        let attributes: Vec<(String, Vec<String>)> = (0..n_attrs)
            .map(|a| {
                let n_labels = rng.gen_range(1..=max_labels);
                (format!("a{a}"), (0..n_labels).map(|l| format!("v{l}")).collect())
            })
            .collect();
        let n_rows = rng.gen_range(1..=max_rows);
        let rows = (0..n_rows).map(|_| attributes.iter().map(|(_, ls)| rng.gen_range(0..ls.len())).collect()).collect();
        Table { attributes, rows }
    }

    fn count(&self, conds: &[(usize, usize)]) -> u64 {
        self.rows.iter().filter(|r| conds.iter().all(|&(a, l)| r[a] == l)).count() as u64
    }

    fn named(&self, conds: &[(usize, usize)]) -> Vec<Cond> {
        conds.iter().map(|&(a, l)| (self.attributes[a].0.clone(), self.attributes[a].1[l].clone())).collect()
    }

    /// Every assignment of "absent or one label" to each attribute.
    fn all_itemsets(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
        for (a, (_, labels)) in self.attributes.iter().enumerate() {
            let mut next = Vec::new();
            for set in &out {
                next.push(set.clone());
                for l in 0..labels.len() {
                    let mut s = set.clone();
                    s.push((a, l));
                    next.push(s);
                }
            }
            out = next;
        }
        out.retain(|s| !s.is_empty());
        out
    }

    pub fn frequent(&self, min_support: f64) -> BTreeMap<Vec<Cond>, u64> {
        let t = self.rows.len() as u64;
        self.all_itemsets()
            .into_iter()
            .filter_map(|s| {
                let n = self.count(&s);
                (n > 0 && n as f64 / t as f64 >= min_support).then(|| (self.named(&s), n))
            })
            .collect()
    }

    pub fn rules(&self, min_support: f64, min_confidence: f64) -> RuleMap {
        let t = self.rows.len() as u64;
        let mut out = RuleMap::new();
        for set in self.all_itemsets() {
            if set.len() < 2 {
                continue;
            }
            let t_xy = self.count(&set);
            if t_xy == 0 || (t_xy as f64 / t as f64) < min_support {
                continue;
            }
            for mask in 1..(1u32 << set.len()) - 1 {
                let x: Vec<_> = set.iter().enumerate().filter(|(j, _)| mask & (1 << j) != 0).map(|(_, &c)| c).collect();
                let y: Vec<_> = set.iter().enumerate().filter(|(j, _)| mask & (1 << j) == 0).map(|(_, &c)| c).collect();
                let t_x = self.count(&x);
                let t_y = self.count(&y);
                if (t_xy as f64 / t_x as f64) < min_confidence {
                    continue;
                }
                out.insert((self.named(&x), self.named(&y)), (t_xy, t_x, t_y, t));
            }
        }
        out
    }
}
