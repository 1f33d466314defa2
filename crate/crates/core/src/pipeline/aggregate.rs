//! Reducing run records to one summary per (dataset, ranker).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{importance_stability, nogueira_stability, ValidationCurve};
use crate::ranking::{ImportanceMatrix, SparseSupportSet};

use super::run::RunRecord;

/// Per-k mean and sample standard deviation of the validation score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub k: usize,
    pub mean: f64,
    pub stdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub dataset: String,
    pub ranker: String,
    pub group_id: String,
    pub n_bootstraps: usize,
    pub n_features: usize,
    /// Mean over every bootstrap and subset size.
    pub mean_score: f64,
    pub curve: Vec<CurvePoint>,
    /// Mean and standard deviation of each feature's importance.
    pub importance_mean: Option<Vec<f64>>,
    pub importance_stdev: Option<Vec<f64>>,
    pub stability_mean_stdev: Option<f64>,
    pub nogueira_phi: Option<f64>,
    pub r2_mean: Option<f64>,
    pub logloss_mean: Option<f64>,
    pub support_accuracy_mean: Option<f64>,
    pub fit_time_mean: f64,
}

impl Aggregate {
    pub fn averaged_curve(&self) -> Result<ValidationCurve> {
        ValidationCurve::new(self.curve.iter().map(|p| (p.k, p.mean)).collect(), true)
    }
}

/// Learning-curve and timing summary for one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub dataset: String,
    pub ranker: String,
    pub sample_size: usize,
    pub n_bootstraps: usize,
    pub fit_time_mean: f64,
    pub fit_time_stdev: f64,
    pub mean_score: Option<f64>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn stdev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| mean(&v))
}

/// Summarizes the bootstraps of one run group. Records must be non-empty
/// and share a group id.
pub fn aggregate_group(records: &[RunRecord]) -> Result<Aggregate> {
    let first = &records[0];
    let b = records.len();
    let p = first.n_features;

    let mut by_k: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        for &(k, s) in &r.curve {
            by_k.entry(k).or_default().push(s);
        }
    }
    let curve: Vec<CurvePoint> = by_k
        .iter()
        .map(|(&k, s)| CurvePoint {
            k,
            mean: mean(s),
            stdev: stdev(s),
        })
        .collect();
    let flat: Vec<f64> = records
        .iter()
        .flat_map(|r| r.curve.iter().map(|p| p.1))
        .collect();
    let mean_score = if flat.is_empty() {
        mean_of(records.iter().map(|r| r.support_score)).unwrap_or(f64::NAN)
    } else {
        mean(&flat)
    };

    let importances: Option<Vec<_>> = records.iter().map(|r| r.importances.clone()).collect();
    let (importance_mean, importance_stdev, stability_mean_stdev) = match importances {
        Some(rows) => {
            let w = ImportanceMatrix::new(rows)?;
            let means: Vec<f64> = (0..p).map(|i| mean(&w.column(i))).collect();
            match importance_stability(&w, None) {
                Ok(rep) => (Some(means), Some(rep.per_feature_stdev), Some(rep.mean_stdev)),
                Err(_) => (Some(means), Some(vec![0.0; p]), None),
            }
        }
        None => (None, None, None),
    };

    // Selected subsets: the ranker's own support, otherwise the prefix at
    // the peak of the averaged curve.
    let sets: Option<Vec<SparseSupportSet>> = if records.iter().all(|r| r.support.is_some()) {
        Some(
            records
                .iter()
                .map(|r| SparseSupportSet::new(r.support.as_ref().unwrap().selected()))
                .collect(),
        )
    } else {
        let peak = curve
            .iter()
            .fold(None, |best: Option<&CurvePoint>, c| match best {
                Some(b) if b.mean >= c.mean => Some(b),
                _ => Some(c),
            })
            .map(|c| c.k);
        peak.and_then(|k| {
            records
                .iter()
                .map(|r| Some(SparseSupportSet::new(top_k(r, k)?)))
                .collect()
        })
    };
    let nogueira_phi = sets.and_then(|s| nogueira_stability(&s, p).ok());

    Ok(Aggregate {
        dataset: first.dataset.clone(),
        ranker: first.ranker.clone(),
        group_id: first.group_id.clone(),
        n_bootstraps: b,
        n_features: p,
        mean_score,
        curve,
        importance_mean,
        importance_stdev,
        stability_mean_stdev,
        nogueira_phi,
        r2_mean: mean_of(records.iter().map(|r| r.metrics.r2)),
        logloss_mean: mean_of(records.iter().map(|r| r.metrics.logloss)),
        support_accuracy_mean: mean_of(records.iter().map(|r| r.metrics.support_accuracy)),
        fit_time_mean: mean(&records.iter().map(|r| r.timing.fit_seconds).collect::<Vec<_>>()),
    })
}

fn top_k(r: &RunRecord, k: usize) -> Option<Vec<usize>> {
    let order = match (&r.ranking, &r.importances) {
        (Some(rank), _) => rank.order_desc(),
        (None, Some(w)) => w.order_desc(),
        _ => return None,
    };
    Some(order.into_iter().take(k).collect())
}

/// One aggregate per (dataset, ranker): the run group with the highest mean
/// score over all bootstraps and subset sizes. Equal means go to the
/// lexicographically smaller group id. Sweep records are ignored.
pub fn aggregate_best_run(records: &[RunRecord]) -> Result<Vec<Aggregate>> {
    let mut groups: BTreeMap<(&str, &str), BTreeMap<&str, Vec<RunRecord>>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.sample_size.is_none()) {
        groups
            .entry((&r.dataset, &r.ranker))
            .or_default()
            .entry(&r.group_id)
            .or_default()
            .push(r.clone());
    }
    let mut out = Vec::new();
    for runs in groups.into_values() {
        let mut best: Option<Aggregate> = None;
        for mut group in runs.into_values() {
            group.sort_by_key(|r| r.bootstrap);
            let agg = aggregate_group(&group)?;
            best = match best {
                Some(b) if !(agg.mean_score > b.mean_score) => Some(b),
                _ => Some(agg),
            };
        }
        out.extend(best);
    }
    Ok(out)
}

/// Fit time and mean score per (dataset, ranker, sample size).
pub fn summarize_sweep(records: &[RunRecord]) -> Vec<SweepPoint> {
    let mut groups: BTreeMap<(&str, &str, usize), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        if let Some(s) = r.sample_size {
            groups.entry((&r.dataset, &r.ranker, s)).or_default().push(r);
        }
    }
    groups
        .into_iter()
        .map(|((dataset, ranker, sample_size), rs)| {
            let times: Vec<f64> = rs.iter().map(|r| r.timing.fit_seconds).collect();
            let scores: Vec<f64> = rs.iter().flat_map(|r| r.curve.iter().map(|p| p.1)).collect();
            SweepPoint {
                dataset: dataset.to_string(),
                ranker: ranker.to_string(),
                sample_size,
                n_bootstraps: rs.len(),
                fit_time_mean: mean(&times),
                fit_time_stdev: stdev(&times),
                mean_score: (!scores.is_empty()).then(|| mean(&scores)),
            }
        })
        .collect()
}
