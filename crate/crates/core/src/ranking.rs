//! Feature-ranking representations and the conversions between them.
//!
//! A ranker may report any of three views of its result:
//!
//! - an [`ImportanceVector`]: non-negative weights summing to one,
//! - a [`SupportVector`]: a boolean mask of selected features,
//! - a [`RankVector`]: a permutation of `1..=p` where a larger number means
//!   a more important feature.
//!
//! Feature indices are 0-based throughout. Ties in importance are broken
//! toward the lower feature index, which receives the higher rank.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a normalized importance vector.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImportanceVector(Vec<f64>);

impl ImportanceVector {
    /// Wraps already-normalized weights, checking the probability-vector contract.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::SpecInvalid("importance vector must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::SpecInvalid(
                "importances must be finite and non-negative".into(),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::SpecInvalid(format!(
                "importances sum to {sum}, expected 1"
            )));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Feature indices from most to least important.
    pub fn order_desc(&self) -> Vec<usize> {
        order_desc(&self.0)
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self(order.iter().map(|&i| self.0[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SupportVector(Vec<bool>);

impl SupportVector {
    pub fn new(values: Vec<bool>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankVector(Vec<usize>);

impl RankVector {
    /// Checks that `values` is a permutation of `1..=p`.
    pub fn new(values: Vec<usize>) -> Result<Self> {
        let p = values.len();
        let mut seen = vec![false; p];
        for &r in &values {
            if r == 0 || r > p || seen[r - 1] {
                return Err(Error::SpecInvalid(format!(
                    "rank vector is not a permutation of 1..={p}"
                )));
            }
            seen[r - 1] = true;
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Feature indices from highest to lowest rank.
    pub fn order_desc(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.0.len()).collect();
        idx.sort_by(|&a, &b| self.0[b].cmp(&self.0[a]));
        idx
    }
}

/// Sparse form of a support vector: the set of selected indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseSupportSet(BTreeSet<usize>);

impl SparseSupportSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        Self(indices.into_iter().collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

/// `B` importance vectors, one per bootstrap, all of length `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMatrix {
    rows: Vec<ImportanceVector>,
}

impl ImportanceMatrix {
    pub fn new(rows: Vec<ImportanceVector>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let p = first.len();
            for r in &rows {
                if r.len() != p {
                    return Err(Error::LengthMismatch {
                        left: r.len(),
                        right: p,
                    });
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn n_bootstraps(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.rows.first().map(|r| r.len()).unwrap_or(0)
    }

    pub fn rows(&self) -> &[ImportanceVector] {
        &self.rows
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.as_slice()[i]).collect()
    }
}

/// Divides raw scores by their sum after clipping negatives (and NaN) to zero.
///
/// Positive infinities are treated as the limit: the mass is shared equally
/// among the infinite entries.
pub fn normalize_importances(raw: &[f64]) -> Result<ImportanceVector> {
    if raw.is_empty() {
        return Err(Error::SpecInvalid("importance vector must be non-empty".into()));
    }
    let n_inf = raw.iter().filter(|v| **v == f64::INFINITY).count();
    if n_inf > 0 {
        let share = 1.0 / n_inf as f64;
        return Ok(ImportanceVector(
            raw.iter()
                .map(|&v| if v == f64::INFINITY { share } else { 0.0 })
                .collect(),
        ));
    }
    let clipped: Vec<f64> = raw
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    let sum: f64 = clipped.iter().sum();
    if sum <= 0.0 {
        return Err(Error::AllZero);
    }
    Ok(ImportanceVector(clipped.into_iter().map(|v| v / sum).collect()))
}

pub fn threshold_support(w: &ImportanceVector, epsilon: f64) -> SupportVector {
    SupportVector(w.as_slice().iter().map(|&v| v > epsilon).collect())
}

pub fn to_sparse(s: &SupportVector) -> SparseSupportSet {
    SparseSupportSet::new(s.selected())
}

pub fn from_sparse(set: &SparseSupportSet, p: usize) -> Result<SupportVector> {
    let mut out = vec![false; p];
    for i in set.iter() {
        if i >= p {
            return Err(Error::IndexOutOfRange { index: i, len: p });
        }
        out[i] = true;
    }
    Ok(SupportVector(out))
}

pub fn rank_from_importances(w: &ImportanceVector) -> RankVector {
    let p = w.len();
    let order = w.order_desc();
    let mut ranks = vec![0usize; p];
    for (pos, &feature) in order.iter().enumerate() {
        ranks[feature] = p - pos;
    }
    RankVector(ranks)
}

/// Indices sorted by descending score, ties toward the lower index.
pub(crate) fn order_desc(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn normalize_examples() {
        let w = normalize_importances(&[1.0, 4.0, 0.0]).unwrap();
        assert!(close(w.as_slice(), &[0.2, 0.8, 0.0]));
        let w = normalize_importances(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(close(w.as_slice(), &[0.25; 4]));
        let w = normalize_importances(&[-1.0, 1.0, 3.0]).unwrap();
        assert!(close(w.as_slice(), &[0.0, 0.25, 0.75]));
    }

    #[test]
    fn normalize_rejects_all_zero() {
        assert!(matches!(
            normalize_importances(&[0.0, -2.0, 0.0]),
            Err(Error::AllZero)
        ));
    }

    #[test]
    fn normalize_infinite_scores() {
        let w = normalize_importances(&[f64::INFINITY, 3.0, f64::INFINITY]).unwrap();
        assert!(close(w.as_slice(), &[0.5, 0.0, 0.5]));
    }

    #[test]
    fn threshold_examples() {
        let w = ImportanceVector::new(vec![0.2, 0.8, 0.0]).unwrap();
        assert_eq!(threshold_support(&w, 0.0).as_slice(), &[true, true, false]);
        assert_eq!(threshold_support(&w, 1.0).as_slice(), &[false, false, false]);
        let u = ImportanceVector::new(vec![0.25; 4]).unwrap();
        assert_eq!(threshold_support(&u, 0.1).as_slice(), &[true; 4]);
    }

    #[test]
    fn sparse_examples() {
        let s = SupportVector::new(vec![true, true, false]);
        assert_eq!(to_sparse(&s), SparseSupportSet::new([0, 1]));
        assert!(to_sparse(&SupportVector::new(vec![false; 3])).is_empty());
        let back = from_sparse(&SparseSupportSet::new([2]), 3).unwrap();
        assert_eq!(back.as_slice(), &[false, false, true]);
        assert!(matches!(
            from_sparse(&SparseSupportSet::new([3]), 3),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn rank_examples() {
        let w = ImportanceVector::new(vec![0.2, 0.8, 0.0]).unwrap();
        assert_eq!(rank_from_importances(&w).as_slice(), &[2, 3, 1]);
        let tie = ImportanceVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(rank_from_importances(&tie).as_slice(), &[2, 1]);
        let one = ImportanceVector::new(vec![1.0]).unwrap();
        assert_eq!(rank_from_importances(&one).as_slice(), &[1]);
    }

    #[test]
    fn rank_vector_rejects_non_permutation() {
        assert!(RankVector::new(vec![1, 1, 2]).is_err());
        assert!(RankVector::new(vec![0, 1]).is_err());
        assert!(RankVector::new(vec![2, 3, 1]).is_ok());
    }

    fn permutations(p: usize) -> Vec<Vec<usize>> {
        if p == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for perm in permutations(p - 1) {
            for pos in 0..=perm.len() {
                let mut next = perm.clone();
                next.insert(pos, p);
                out.push(next);
            }
        }
        out
    }

    #[test]
    fn rank_round_trip_over_all_permutations() {
        for p in 1..=6 {
            for perm in permutations(p) {
                let reals: Vec<f64> = perm.iter().map(|&r| r as f64).collect();
                let w = normalize_importances(&reals).unwrap();
                assert_eq!(rank_from_importances(&w).as_slice(), perm.as_slice());
            }
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalize_is_idempotent(raw in prop::collection::vec(-5.0f64..10.0, 1..30)) {
                prop_assume!(raw.iter().any(|v| *v > 0.0));
                let once = normalize_importances(&raw).unwrap();
                let twice = normalize_importances(once.as_slice()).unwrap();
                for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
                let sum: f64 = once.as_slice().iter().sum();
                prop_assert!((sum - 1.0).abs() < NORMALIZATION_TOLERANCE);
            }

            #[test]
            fn zero_threshold_selects_positive(raw in prop::collection::vec(0.0f64..1.0, 1..30)) {
                prop_assume!(raw.iter().any(|v| *v > 0.0));
                let w = normalize_importances(&raw).unwrap();
                let s = threshold_support(&w, 0.0);
                for (sel, v) in s.as_slice().iter().zip(w.as_slice()) {
                    prop_assert_eq!(*sel, *v > 0.0);
                }
            }

            #[test]
            fn sparse_round_trip(bits in prop::collection::vec(any::<bool>(), 0..40)) {
                let s = SupportVector::new(bits.clone());
                let back = from_sparse(&to_sparse(&s), bits.len()).unwrap();
                prop_assert_eq!(back, s);
            }
        }
    }
}
