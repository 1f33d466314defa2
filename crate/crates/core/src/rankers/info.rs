//! Plug-in information-theoretic scores in nats.
//!
//! Features (and regression targets) with fewer than [`DISCRETE_LIMIT`]
//! distinct values are used as-is; others are cut into equal-frequency bins.

use std::collections::HashMap;

use crate::datagen::Task;
use crate::error::Result;
use crate::matrix::Matrix;

use super::class_labels;

/// Variables with fewer distinct values than this are treated as discrete.
pub const DISCRETE_LIMIT: usize = 20;
pub const DEFAULT_BINS: usize = 10;

/// Codes for each value: category ids for discrete variables, bin ids for
/// continuous ones.
pub fn discretize(values: &[f64], bins: Option<usize>) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < DISCRETE_LIMIT {
        return values
            .iter()
            .map(|v| distinct.partition_point(|d| d.total_cmp(v).is_lt()))
            .collect();
    }
    let n = sorted.len();
    let bins = bins.unwrap_or(DEFAULT_BINS).clamp(1, (n / 2).max(1));
    let mut cuts: Vec<f64> = (1..bins).map(|b| sorted[b * n / bins]).collect();
    cuts.dedup();
    values
        .iter()
        .map(|v| cuts.partition_point(|c| c <= v))
        .collect()
}

pub fn entropy(codes: &[usize]) -> f64 {
    let n = codes.len() as f64;
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for &c in codes {
        *counts.entry(c).or_default() += 1.0;
    }
    let mut h = 0.0;
    // Sort for a summation order independent of hashing.
    let mut values: Vec<f64> = counts.into_values().collect();
    values.sort_by(|a, b| a.total_cmp(b));
    for c in values {
        let p = c / n;
        h -= p * p.ln();
    }
    h
}

pub fn mutual_information(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut pa: HashMap<usize, f64> = HashMap::new();
    let mut pb: HashMap<usize, f64> = HashMap::new();
    for (&i, &j) in a.iter().zip(b) {
        *joint.entry((i, j)).or_default() += 1.0;
        *pa.entry(i).or_default() += 1.0;
        *pb.entry(j).or_default() += 1.0;
    }
    let mut cells: Vec<((usize, usize), f64)> = joint.into_iter().collect();
    cells.sort_by_key(|&(k, _)| k);
    let mi: f64 = cells
        .into_iter()
        .map(|((i, j), c)| {
            let pxy = c / n;
            pxy * (c * n / (pa[&i] * pb[&j])).ln()
        })
        .sum();
    mi.max(0.0)
}

fn target_codes(y: &[f64], task: Task, bins: Option<usize>) -> Result<Vec<usize>> {
    match task {
        Task::Classification => Ok(class_labels(y)?.0),
        Task::Regression => Ok(discretize(y, bins)),
    }
}

pub fn mutual_info_scores(x: &Matrix, y: &[f64], task: Task, bins: Option<usize>) -> Result<Vec<f64>> {
    let t = target_codes(y, task, bins)?;
    Ok((0..x.cols())
        .map(|f| mutual_information(&discretize(&x.column(f), bins), &t))
        .collect())
}

/// `2 * IG / (H(X) + H(Y))`, defined as 0 when both entropies vanish.
pub fn su_scores(x: &Matrix, y: &[f64], task: Task, bins: Option<usize>) -> Result<Vec<f64>> {
    let t = target_codes(y, task, bins)?;
    let ht = entropy(&t);
    Ok((0..x.cols())
        .map(|f| {
            let codes = discretize(&x.column(f), bins);
            let denom = entropy(&codes) + ht;
            if denom <= 0.0 {
                0.0
            } else {
                (2.0 * mutual_information(&codes, &t) / denom).clamp(0.0, 1.0)
            }
        })
        .collect())
}
