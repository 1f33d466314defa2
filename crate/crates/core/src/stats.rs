//! Significance tests for comparing rankers across datasets.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Mean validation scores, one row per dataset and one column per ranker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    pub datasets: Vec<String>,
    pub rankers: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn new(datasets: Vec<String>, rankers: Vec<String>, scores: Vec<Vec<f64>>) -> Result<Self> {
        if datasets.len() < 2 || rankers.len() < 2 {
            return Err(Error::DegenerateTable(format!(
                "need at least 2 datasets and 2 rankers, got {}x{}",
                datasets.len(),
                rankers.len()
            )));
        }
        if scores.len() != datasets.len() || scores.iter().any(|r| r.len() != rankers.len()) {
            return Err(Error::DegenerateTable("score matrix shape does not match labels".into()));
        }
        if scores.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateTable("score matrix has missing cells".into()));
        }
        Ok(Self {
            datasets,
            rankers,
            scores,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub p_value: f64,
    /// Higher is better: the best ranker on a dataset receives rank k.
    pub average_ranks: Vec<f64>,
}

/// Largest sample handled by exact enumeration of sign assignments.
pub const WILCOXON_EXACT_MAX: usize = 20;

/// Ranks `1..=n` of `values` in ascending order; ties share their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired scores.
///
/// Zero differences are dropped. Up to [`WILCOXON_EXACT_MAX`] remaining
/// pairs the p-value comes from the exact distribution of the positive rank
/// sum (conditional on tied ranks); beyond that from the normal
/// approximation with continuity and tie corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Err(Error::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let r_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w = r_plus.min(total - r_plus);
    if n <= WILCOXON_EXACT_MAX {
        // Doubled ranks are integers even with ties.
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0f64; max + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let limit = (w * 2.0).round() as usize;
        let tail: f64 = counts[..=limit].iter().sum();
        let p = (2.0 * tail / 2f64.powi(n as i32)).min(1.0);
        return Ok(WilcoxonResult {
            statistic: w,
            p_value: p,
            n,
            exact: true,
        });
    }
    let nf = n as f64;
    let mut sorted = abs.clone();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|v| **v == sorted[i]).count();
        tie_term += (j * j * j - j) as f64;
        i += j;
    }
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let normal = Normal::standard();
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    Ok(WilcoxonResult {
        statistic: w,
        p_value: p,
        n,
        exact: false,
    })
}

/// Friedman test over datasets (rows) and rankers (columns).
///
/// Within each dataset the worst score gets rank 1 and ties share the
/// average rank. A table where every ranker ties on every dataset yields
/// a statistic of 0 and p = 1.
pub fn friedman(table: &ScoreTable) -> Result<FriedmanResult> {
    let n = table.scores.len();
    let k = table.rankers.len();
    let mut avg = vec![0.0; k];
    for row in &table.scores {
        for (j, r) in average_ranks(row).into_iter().enumerate() {
            avg[j] += r / n as f64;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = avg.iter().map(|r| r * r).sum();
    let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0).powi(2) / 4.0)).max(0.0);
    let dist = ChiSquared::new(kf - 1.0).map_err(|e| Error::DegenerateTable(e.to_string()))?;
    Ok(FriedmanResult {
        chi2,
        p_value: (1.0 - dist.cdf(chi2)).clamp(0.0, 1.0),
        average_ranks: avg,
    })
}

/// Critical values `q_alpha` for the Nemenyi test, k = 2..=10, from
/// J. Demšar, "Statistical Comparisons of Classifiers over Multiple Data
/// Sets", JMLR 7 (2006), Table 5a. They are studentized range quantiles
/// with infinite degrees of freedom divided by sqrt(2).
const Q_005: [f64; 9] = [1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164];
const Q_010: [f64; 9] = [1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920];

pub fn nemenyi_q(k: usize, alpha: f64) -> Result<f64> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_005
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_010
    } else {
        return Err(Error::UnsupportedK { k, alpha });
    };
    if !(2..=10).contains(&k) {
        return Err(Error::UnsupportedK { k, alpha });
    }
    Ok(table[k - 2])
}

/// Critical difference in average rank: `q_alpha * sqrt(k (k + 1) / (6 N))`.
pub fn nemenyi_cd(k: usize, n: usize, alpha: f64) -> Result<f64> {
    let q = nemenyi_q(k, alpha)?;
    if n == 0 {
        return Err(Error::DegenerateTable("no datasets".into()));
    }
    Ok(q * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt())
}
