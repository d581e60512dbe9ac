//! Partition agreement and variable-selection scores.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};

/// `C(k, 2)`.
fn pairs(k: usize) -> i128 {
    let k = k as i128;
    k * (k - 1) / 2
}

/// Adjusted Rand Index with its degeneracy flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AriScore {
    pub value: f64,
    /// The chance-corrected denominator vanished; `value` is then 1 for equal
    /// partitions and 0 otherwise.
    pub degenerate: bool,
}

/// Contingency table between two labelings, rows indexed by the distinct
/// labels of `a` in ascending order, columns likewise for `b`.
pub fn contingency(a: &[usize], b: &[usize]) -> Vec<Vec<usize>> {
    let rows: BTreeMap<usize, usize> = a.iter().copied().collect::<BTreeSet<_>>().into_iter().zip(0..).collect();
    let cols: BTreeMap<usize, usize> = b.iter().copied().collect::<BTreeSet<_>>().into_iter().zip(0..).collect();
    let mut table = vec![vec![0; cols.len()]; rows.len()];
    for (x, y) in a.iter().zip(b) {
        table[rows[x]][cols[y]] += 1;
    }
    table
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut forward = BTreeMap::new();
    let mut backward = BTreeMap::new();
    a.iter()
        .zip(b)
        .all(|(x, y)| *forward.entry(x).or_insert(y) == y && *backward.entry(y).or_insert(x) == x)
}

pub fn adjusted_rand_index_detailed(a: &[usize], b: &[usize]) -> Result<AriScore> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!("label length mismatch: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Validation("at least two samples are needed for the ARI".into()));
    }
    let table = contingency(a, b);
    // exact integer arithmetic, scaled by 2·C(n, 2), with a single final division
    let index: i128 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let row_pairs: i128 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let col_pairs: i128 = (0..table[0].len())
        .map(|c| pairs(table.iter().map(|r| r[c]).sum()))
        .sum();
    let total = pairs(n);
    let numerator = 2 * (index * total - row_pairs * col_pairs);
    let denominator = (row_pairs + col_pairs) * total - 2 * row_pairs * col_pairs;
    if denominator == 0 {
        let value = if same_partition(a, b) { 1.0 } else { 0.0 };
        return Ok(AriScore { value, degenerate: true });
    }
    Ok(AriScore {
        value: numerator as f64 / denominator as f64,
        degenerate: false,
    })
}

/// Hubert–Arabie adjusted Rand index.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    adjusted_rand_index_detailed(a, b).map(|s| s.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionScores {
    /// `tp / m`; absent when there are no truly informative variables.
    pub sensitivity: Option<f64>,
    /// `tn / q`; absent when every variable is informative.
    pub specificity: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

pub fn selection_scores(selected: &[usize], true_informative: &[usize], p: usize) -> Result<SelectionScores> {
    let check = |set: &[usize], what: &str| -> Result<BTreeSet<usize>> {
        match set.iter().find(|&&d| d >= p) {
            Some(d) => Err(Error::Validation(format!("{what} variable index {d} >= p = {p}"))),
            None => Ok(set.iter().copied().collect()),
        }
    };
    let selected = check(selected, "selected")?;
    let truth = check(true_informative, "true informative")?;
    let tp = selected.intersection(&truth).count();
    let fp = selected.len() - tp;
    let fn_ = truth.len() - tp;
    let tn = p - truth.len() - fp;
    let m = truth.len();
    let q = p - m;
    Ok(SelectionScores {
        sensitivity: (m > 0).then(|| tp as f64 / m as f64),
        specificity: (q > 0).then(|| tn as f64 / q as f64),
        tp,
        fp,
        tn,
        fn_,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub ari: f64,
    pub ari_degenerate: bool,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub confusion: Vec<Vec<usize>>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Clustering and selection scores of an estimate against the truth.
pub fn evaluate(
    true_labels: &[usize],
    estimated_labels: &[usize],
    selected: &[usize],
    true_informative: &[usize],
    p: usize,
) -> Result<EvalResult> {
    let ari = adjusted_rand_index_detailed(true_labels, estimated_labels)?;
    let scores = selection_scores(selected, true_informative, p)?;
    Ok(EvalResult {
        ari: ari.value,
        ari_degenerate: ari.degenerate,
        sensitivity: scores.sensitivity,
        specificity: scores.specificity,
        confusion: contingency(true_labels, estimated_labels),
        tp: scores.tp,
        fp: scores.fp,
        tn: scores.tn,
        fn_: scores.fn_,
    })
}
