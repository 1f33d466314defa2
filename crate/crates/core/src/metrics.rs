//! Evaluation metrics: agreement with ground truth, stability across
//! bootstraps, and validation-curve summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::{ImportanceMatrix, ImportanceVector, SparseSupportSet, SupportVector};

/// Probabilities are clipped into `[LOG_CLIP, 1 - LOG_CLIP]` before logs.
pub const LOG_CLIP: f64 = 1e-15;

/// Validation scores for increasing subset sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCurve {
    pub points: Vec<(usize, f64)>,
    /// True when each score is a mean over bootstraps.
    pub averaged: bool,
}

impl ValidationCurve {
    pub fn new(points: Vec<(usize, f64)>, averaged: bool) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::SpecInvalid(
                "curve subset sizes must be strictly increasing".into(),
            ));
        }
        Ok(Self { points, averaged })
    }

    pub fn scores(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Subset size and score of the highest point; ties go to the smaller size.
    pub fn argmax(&self) -> Option<(usize, f64)> {
        self.points
            .iter()
            .copied()
            .fold(None, |best: Option<(usize, f64)>, p| match best {
                Some(b) if b.1 >= p.1 => Some(b),
                _ => Some(p),
            })
    }

    pub fn score_at(&self, k: usize) -> Option<f64> {
        self.points.iter().find(|p| p.0 == k).map(|p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub per_feature_stdev: Vec<f64>,
    pub mean_stdev: f64,
    pub weighted_variance_sum: Option<f64>,
    pub nogueira_phi: Option<f64>,
}

/// `1 - RSS / TSS` of estimated against true importances.
pub fn importance_r2(w_true: &ImportanceVector, w_hat: &ImportanceVector) -> Result<f64> {
    let (t, h) = (w_true.as_slice(), w_hat.as_slice());
    if t.len() != h.len() {
        return Err(Error::LengthMismatch {
            left: t.len(),
            right: h.len(),
        });
    }
    let mean = t.iter().sum::<f64>() / t.len() as f64;
    let tss: f64 = t.iter().map(|v| (v - mean).powi(2)).sum();
    if tss <= 0.0 {
        return Err(Error::DegenerateTruth);
    }
    let rss: f64 = t.iter().zip(h).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - rss / tss)
}

/// Mean binary cross-entropy of estimated importances against the relevance mask.
pub fn importance_logloss(s_true: &SupportVector, w_hat: &ImportanceVector) -> Result<f64> {
    let (s, w) = (s_true.as_slice(), w_hat.as_slice());
    if s.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: s.len(),
            right: w.len(),
        });
    }
    let total: f64 = s
        .iter()
        .zip(w)
        .map(|(&rel, &p)| {
            let p = p.clamp(LOG_CLIP, 1.0 - LOG_CLIP);
            if rel {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum();
    Ok(-total / s.len() as f64)
}

pub fn support_accuracy(s_true: &SupportVector, s_hat: &SupportVector) -> Result<f64> {
    let (a, b) = (s_true.as_slice(), s_hat.as_slice());
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64)
}

/// Per-feature spread of importances across bootstraps.
///
/// With `w_true`, also returns `sum_i Var_i / w_i` over features with
/// `w_i > 0`; features of zero true importance are left out.
pub fn importance_stability(
    w: &ImportanceMatrix,
    w_true: Option<&ImportanceVector>,
) -> Result<StabilityReport> {
    let b = w.n_bootstraps();
    if b < 2 {
        return Err(Error::InsufficientBootstraps { needed: 2, got: b });
    }
    let p = w.n_features();
    let variances: Vec<f64> = (0..p).map(|i| unbiased_variance(&w.column(i))).collect();
    let per_feature_stdev: Vec<f64> = variances.iter().map(|v| v.sqrt()).collect();
    let mean_stdev = per_feature_stdev.iter().sum::<f64>() / p as f64;
    let weighted_variance_sum = match w_true {
        None => None,
        Some(t) => {
            if t.len() != p {
                return Err(Error::LengthMismatch {
                    left: t.len(),
                    right: p,
                });
            }
            Some(
                t.as_slice()
                    .iter()
                    .zip(&variances)
                    .filter(|(wi, _)| **wi > 0.0)
                    .map(|(wi, v)| v / wi)
                    .sum(),
            )
        }
    };
    Ok(StabilityReport {
        per_feature_stdev,
        mean_stdev,
        weighted_variance_sum,
        nogueira_phi: None,
    })
}

fn unbiased_variance(values: &[f64]) -> f64 {
    if values.iter().all(|v| *v == values[0]) {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Stability of selected subsets:
/// `1 - mean_i(s_i^2) / ((k/p) (1 - k/p))` where `s_i^2` is the unbiased
/// variance of feature `i`'s selection indicator and `k` the mean subset size.
pub fn nogueira_stability(sets: &[SparseSupportSet], p: usize) -> Result<f64> {
    let b = sets.len();
    if b < 2 {
        return Err(Error::InsufficientBootstraps { needed: 2, got: b });
    }
    let mut freq = vec![0.0; p];
    for set in sets {
        for i in set.iter() {
            if i >= p {
                return Err(Error::IndexOutOfRange { index: i, len: p });
            }
            freq[i] += 1.0;
        }
    }
    let bf = b as f64;
    let k_bar = freq.iter().sum::<f64>() / bf;
    let q = k_bar / p as f64;
    let denom = q * (1.0 - q);
    if denom <= 0.0 {
        return Err(Error::DegenerateSelection);
    }
    let mean_var = freq
        .iter()
        .map(|f| {
            let ph = f / bf;
            bf / (bf - 1.0) * ph * (1.0 - ph)
        })
        .sum::<f64>()
        / p as f64;
    Ok(1.0 - mean_var / denom)
}

pub fn mean_validation_score(curve: &ValidationCurve) -> Result<f64> {
    if curve.points.is_empty() {
        return Err(Error::SpecInvalid("empty validation curve".into()));
    }
    Ok(curve.points.iter().map(|p| p.1).sum::<f64>() / curve.points.len() as f64)
}

/// Each score as a fraction of the best score.
pub fn relative_performance(scores: &[f64]) -> Result<Vec<f64>> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores.is_empty() || !(max > 0.0) {
        return Err(Error::NonPositiveMax);
    }
    Ok(scores.iter().map(|s| s / max).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::normalize_importances;
    use crate::sampling::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn iv(v: &[f64]) -> ImportanceVector {
        ImportanceVector::new(v.to_vec()).unwrap()
    }

    fn sv(v: &[u8]) -> SupportVector {
        SupportVector::new(v.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn r2_examples() {
        let w = iv(&[0.5, 0.3, 0.2, 0.0]);
        assert_eq!(importance_r2(&w, &w).unwrap(), 1.0);
        assert!(importance_r2(&w, &iv(&[0.25; 4])).unwrap().abs() < 1e-12);
        assert!(matches!(
            importance_r2(&iv(&[0.25; 4]), &w),
            Err(Error::DegenerateTruth)
        ));
    }

    #[test]
    fn logloss_examples() {
        let confident = iv(&[1.0 - 1e-15, 1e-15]);
        assert!(importance_logloss(&sv(&[1, 0]), &confident).unwrap() < 1e-12);
        let half = importance_logloss(&sv(&[1, 0]), &iv(&[0.5, 0.5])).unwrap();
        assert!((half - std::f64::consts::LN_2).abs() < 1e-12);
        let third = 1.0 / 3.0;
        let l = importance_logloss(&sv(&[1, 1, 0]), &iv(&[third, third, 1.0 - 2.0 * third])).unwrap();
        let expected = -(2.0 * third.ln() + (2.0f64 / 3.0).ln()) / 3.0;
        assert!((l - expected).abs() < 1e-12);
        assert!((l - 0.8675).abs() < 1e-4);
    }

    #[test]
    fn support_accuracy_examples() {
        let s = sv(&[1, 1, 0, 0]);
        assert_eq!(support_accuracy(&s, &s).unwrap(), 1.0);
        assert_eq!(support_accuracy(&s, &sv(&[0, 0, 1, 1])).unwrap(), 0.0);
        assert_eq!(support_accuracy(&s, &sv(&[1, 0, 0, 0])).unwrap(), 0.75);
        assert!(matches!(
            support_accuracy(&s, &sv(&[1])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn stability_examples() {
        let same = ImportanceMatrix::new(vec![iv(&[0.6, 0.4]); 3]).unwrap();
        assert_eq!(importance_stability(&same, None).unwrap().mean_stdev, 0.0);

        let m = ImportanceMatrix::new(vec![iv(&[0.2, 0.8]), iv(&[0.6, 0.4])]).unwrap();
        let r = importance_stability(&m, Some(&iv(&[0.5, 0.5]))).unwrap();
        // Both columns differ by 0.4 across two rows: variance 0.08.
        assert!((r.per_feature_stdev[0] - 0.08f64.sqrt()).abs() < 1e-12);
        assert!((r.weighted_variance_sum.unwrap() - 4.0 * 0.08).abs() < 1e-12);

        let one = ImportanceMatrix::new(vec![iv(&[1.0])]).unwrap();
        assert!(matches!(
            importance_stability(&one, None),
            Err(Error::InsufficientBootstraps { .. })
        ));
    }

    #[test]
    fn unbiased_variance_of_two_points() {
        assert_eq!(unbiased_variance(&[0.0, 2.0]).sqrt(), 2f64.sqrt());
    }

    #[test]
    fn weighted_sum_skips_zero_truth() {
        let m = ImportanceMatrix::new(vec![iv(&[0.5, 0.5, 0.0]), iv(&[0.5, 0.3, 0.2])]).unwrap();
        let r = importance_stability(&m, Some(&iv(&[0.5, 0.5, 0.0]))).unwrap();
        assert!((r.weighted_variance_sum.unwrap() - 0.02 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn nogueira_examples() {
        let a = SparseSupportSet::new([0]);
        let b = SparseSupportSet::new([1]);
        assert_eq!(nogueira_stability(&[a.clone(), a.clone()], 2).unwrap(), 1.0);
        assert!((nogueira_stability(&[a.clone(), b], 2).unwrap() + 1.0).abs() < 1e-12);
        let empty = SparseSupportSet::new([]);
        assert!(matches!(
            nogueira_stability(&[empty.clone(), empty], 2),
            Err(Error::DegenerateSelection)
        ));
        assert!(matches!(
            nogueira_stability(&[a], 2),
            Err(Error::InsufficientBootstraps { .. })
        ));
    }

    #[test]
    fn nogueira_random_selection_is_near_zero() {
        let mut rng = stream(11, "nogueira-test", 0);
        let sets: Vec<SparseSupportSet> = (0..1000)
            .map(|_| SparseSupportSet::new((0..100).filter(|_| rng.random_bool(0.5))))
            .collect();
        assert!(nogueira_stability(&sets, 100).unwrap().abs() < 0.05);
    }

    #[test]
    fn curve_means_and_relative_performance() {
        let c = ValidationCurve::new(vec![(1, 0.4), (2, 0.9), (3, 0.8), (4, 0.7)], true).unwrap();
        assert!((mean_validation_score(&c).unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(c.argmax(), Some((2, 0.9)));
        let c = ValidationCurve::new(vec![(1, 0.5), (2, 1.0)], true).unwrap();
        assert_eq!(mean_validation_score(&c).unwrap(), 0.75);
        assert!(ValidationCurve::new(vec![(2, 0.5), (1, 1.0)], true).is_err());
        assert_eq!(relative_performance(&[0.8, 0.4]).unwrap(), vec![1.0, 0.5]);
        assert_eq!(relative_performance(&[0.3]).unwrap(), vec![1.0]);
        assert_eq!(relative_performance(&[0.9, 0.9]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(relative_performance(&[0.0, -1.0]), Err(Error::NonPositiveMax)));
    }

    fn random_importances(seed: u64, p: usize) -> ImportanceVector {
        let mut rng = stream(seed, "metrics-test", 0);
        let raw: Vec<f64> = (0..p).map(|_| rng.random_range(0.01..1.0)).collect();
        normalize_importances(&raw).unwrap()
    }

    proptest! {
        #[test]
        fn r2_is_permutation_invariant(seed in 0u64..10_000, perm in Just((0..8).collect::<Vec<usize>>()).prop_shuffle()) {
            let t = random_importances(seed, 8);
            let h = random_importances(seed + 1, 8);
            let a = importance_r2(&t, &h).unwrap();
            let b = importance_r2(&t.permuted(&perm), &h.permuted(&perm)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn nogueira_invariant_to_relabeling_and_order(seed in 0u64..10_000, perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
            let mut rng = stream(seed, "nogueira-prop", 0);
            let sets: Vec<Vec<usize>> = (0..5)
                .map(|_| (0..6).filter(|_| rng.random_bool(0.4)).collect())
                .collect();
            let base: Vec<SparseSupportSet> = sets.iter().map(|s| SparseSupportSet::new(s.iter().copied())).collect();
            let Ok(phi) = nogueira_stability(&base, 6) else { return Ok(()); };
            prop_assert!(phi <= 1.0 + 1e-12);
            let relabeled: Vec<SparseSupportSet> = sets
                .iter()
                .rev()
                .map(|s| SparseSupportSet::new(s.iter().map(|&i| perm[i])))
                .collect();
            prop_assert!((nogueira_stability(&relabeled, 6).unwrap() - phi).abs() < 1e-12);
        }

        #[test]
        fn dominating_curve_has_higher_mean(scores in prop::collection::vec(0.0f64..1.0, 1..20), bump in prop::collection::vec(0.0f64..0.5, 20)) {
            let lo = ValidationCurve::new(scores.iter().enumerate().map(|(i, &s)| (i + 1, s)).collect(), true).unwrap();
            let hi = ValidationCurve::new(scores.iter().enumerate().map(|(i, &s)| (i + 1, s + bump[i])).collect(), true).unwrap();
            prop_assert!(mean_validation_score(&hi).unwrap() >= mean_validation_score(&lo).unwrap());
        }

        #[test]
        fn logloss_drops_when_mass_moves_to_relevant(seed in 0u64..10_000, mask in prop::collection::vec(any::<bool>(), 10), frac in 0.01f64..1.0) {
            let w = random_importances(seed, 10);
            let s = SupportVector::new(mask.clone());
            let (Some(rel), Some(irr)) = (mask.iter().position(|&b| b), mask.iter().position(|&b| !b)) else { return Ok(()); };
            let mut moved = w.as_slice().to_vec();
            let delta = moved[irr] * frac;
            moved[irr] -= delta;
            moved[rel] += delta;
            let moved = normalize_importances(&moved).unwrap();
            // Brute-force cross-entropy, written out independently.
            let brute = |v: &[f64]| -> f64 {
                -mask.iter().zip(v).map(|(&m, &p)| if m { p.ln() } else { (1.0 - p).ln() }).sum::<f64>() / 10.0
            };
            let before = importance_logloss(&s, &w).unwrap();
            let after = importance_logloss(&s, &moved).unwrap();
            prop_assert!((before - brute(w.as_slice())).abs() < 1e-9);
            prop_assert!((after - brute(moved.as_slice())).abs() < 1e-9);
            prop_assert!(after < before);
        }
    }
}
