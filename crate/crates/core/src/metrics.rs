//! Evaluation of a screening outcome against a known important set.
//!
//! Feature indices are 0-based throughout.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::shard::rank_descending;

fn as_set(v: &[usize]) -> HashSet<usize> {
    v.iter().copied().collect()
}

/// 1 when every important feature was selected.
pub fn ssr_indicator(truth: &[usize], selected: &[usize]) -> u8 {
    let sel = as_set(selected);
    u8::from(truth.iter().all(|j| sel.contains(j)))
}

/// `|M ∩ M̂| / |M|`.
pub fn psr(truth: &[usize], selected: &[usize]) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let sel = as_set(selected);
    let hit = as_set(truth).iter().filter(|j| sel.contains(j)).count();
    hit as f64 / as_set(truth).len() as f64
}

/// `|M̂ \ M| / |M̂|`, zero for an empty selection.
pub fn fdr_realized(truth: &[usize], selected: &[usize]) -> f64 {
    let sel = as_set(selected);
    if sel.is_empty() {
        return 0.0;
    }
    let t = as_set(truth);
    sel.iter().filter(|j| !t.contains(j)).count() as f64 / sel.len() as f64
}

/// Probability that an important feature outranks an unimportant one, ties
/// counting one half. Computed from average ranks.
pub fn auc(truth: &[usize], utilities: &[f64]) -> Result<f64> {
    let p = utilities.len();
    let t = as_set(truth);
    if t.iter().any(|&j| j >= p) {
        return Err(Error::ShapeMismatch(format!("important index outside 0..{p}")));
    }
    let m = t.len();
    if m == 0 || m == p {
        return Err(Error::DegenerateTruth);
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| utilities[a].total_cmp(&utilities[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < p {
        let mut k = i;
        while k + 1 < p && utilities[order[k + 1]] == utilities[order[i]] {
            k += 1;
        }
        // 1-based ranks i+1..=k+1 share their average.
        let avg = (i + k + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=k].iter().filter(|j| t.contains(j)).count() as f64;
        i = k + 1;
    }
    let mf = m as f64;
    let u = rank_sum - mf * (mf + 1.0) / 2.0;
    Ok(u / (mf * (p - m) as f64))
}

/// Smallest `r` such that the top `r` features (index tie-break) contain
/// every important feature.
pub fn minimum_model_size(truth: &[usize], utilities: &[f64]) -> usize {
    let t = as_set(truth);
    if t.is_empty() {
        return 0;
    }
    let mut remaining = t.len();
    for (r, j) in rank_descending(utilities).into_iter().enumerate() {
        if t.contains(&j) {
            remaining -= 1;
            if remaining == 0 {
                return r + 1;
            }
        }
    }
    utilities.len()
}

#[cfg(test)]
pub(crate) fn auc_double_sum(truth: &[usize], utilities: &[f64]) -> f64 {
    let t = as_set(truth);
    let nulls: Vec<usize> = (0..utilities.len()).filter(|j| !t.contains(j)).collect();
    let mut penalty = 0.0;
    for &i in &t {
        for &j in &nulls {
            if utilities[i] < utilities[j] {
                penalty += 1.0;
            } else if utilities[i] == utilities[j] {
                penalty += 0.5;
            }
        }
    }
    1.0 - penalty / (t.len() * nulls.len()) as f64
}
