//! Synthetic datasets with known ground-truth feature importances.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::ranking::{normalize_importances, threshold_support, ImportanceVector, SupportVector};
use crate::sampling::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Classification,
    Regression,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Task::Classification => f.write_str("classification"),
            Task::Regression => f.write_str("regression"),
        }
    }
}

/// A-priori relevance of every feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub importances: ImportanceVector,
    pub relevant: SupportVector,
}

impl GroundTruth {
    pub fn from_importances(importances: ImportanceVector) -> Self {
        let relevant = threshold_support(&importances, 0.0);
        Self {
            importances,
            relevant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub task: Task,
    pub x: Matrix,
    /// Class labels `0..C` stored as floats, or real regression targets.
    pub y: Vec<f64>,
    pub ground_truth: Option<GroundTruth>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        task: Task,
        x: Matrix,
        y: Vec<f64>,
        ground_truth: Option<GroundTruth>,
    ) -> Result<Self> {
        if x.rows() < 2 || x.cols() < 1 {
            return Err(Error::SpecInvalid(format!(
                "dataset needs n >= 2 and p >= 1, got {}x{}",
                x.rows(),
                x.cols()
            )));
        }
        if y.len() != x.rows() {
            return Err(Error::LengthMismatch {
                left: y.len(),
                right: x.rows(),
            });
        }
        if let Some(gt) = &ground_truth {
            if gt.importances.len() != x.cols() || gt.relevant.len() != x.cols() {
                return Err(Error::LengthMismatch {
                    left: gt.importances.len(),
                    right: x.cols(),
                });
            }
        }
        Ok(Self {
            name: name.into(),
            task,
            x,
            y,
            ground_truth,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn n_classes(&self) -> usize {
        match self.task {
            Task::Classification => self.y.iter().fold(0usize, |m, &v| m.max(v as usize + 1)),
            Task::Regression => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynclfSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_informative: usize,
    #[serde(default)]
    pub n_redundant: usize,
    #[serde(default)]
    pub n_repeated: usize,
    #[serde(default = "two")]
    pub n_classes: usize,
    #[serde(default = "two")]
    pub n_clusters_per_class: usize,
    #[serde(default = "unit")]
    pub class_sep: f64,
    #[serde(default, rename = "random_state")]
    pub seed: u64,
    #[serde(default)]
    pub shuffle: bool,
}

fn two() -> usize {
    2
}

fn unit() -> f64 {
    1.0
}

impl SynclfSpec {
    /// The "Synclf hard" configuration: 10000 x 50, four informative features,
    /// three classes with three clusters each, `class_sep = 0.8`.
    pub fn synclf_hard() -> Self {
        Self {
            n_samples: 10_000,
            n_features: 50,
            n_informative: 4,
            n_redundant: 0,
            n_repeated: 0,
            n_classes: 3,
            n_clusters_per_class: 3,
            class_sep: 0.8,
            seed: 0,
            shuffle: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SpecInvalid(m));
        if self.n_samples < 2 {
            return bad(format!("n_samples must be >= 2, got {}", self.n_samples));
        }
        if self.n_informative == 0 {
            return bad("n_informative must be >= 1".into());
        }
        if self.n_informative + self.n_redundant + self.n_repeated > self.n_features {
            return bad(format!(
                "informative + redundant + repeated = {} exceeds n_features = {}",
                self.n_informative + self.n_redundant + self.n_repeated,
                self.n_features
            ));
        }
        if self.n_classes < 2 || self.n_clusters_per_class < 1 {
            return bad("need n_classes >= 2 and n_clusters_per_class >= 1".into());
        }
        let clusters = self.n_classes * self.n_clusters_per_class;
        if self.n_informative < 64 && clusters as u128 > 1u128 << self.n_informative {
            return bad(format!(
                "n_classes * n_clusters_per_class = {clusters} exceeds 2^n_informative"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynregSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_informative: usize,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default, rename = "random_state")]
    pub seed: u64,
}

/// Gaussian clusters on the vertices of a hypercube.
///
/// Informative columns come first, then redundant (random linear mixes of
/// the informative ones, weights uniform in (-1, 1)), then repeated copies,
/// then standard-normal noise. Classes get `n / n_classes` rows each (the
/// first `n % n_classes` classes one more), spread evenly over their clusters.
pub fn make_classification(spec: &SynclfSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = stream(spec.seed, "make_classification", 0);
    let n = spec.n_samples;
    let p = spec.n_features;
    let k = spec.n_informative;
    let n_clusters = spec.n_classes * spec.n_clusters_per_class;

    let mut seen = HashSet::new();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(n_clusters);
    while centroids.len() < n_clusters {
        let bits: Vec<bool> = (0..k).map(|_| rng.random::<bool>()).collect();
        if seen.insert(bits.clone()) {
            centroids.push(
                bits.iter()
                    .map(|&b| if b { spec.class_sep } else { -spec.class_sep })
                    .collect(),
            );
        }
    }

    // Cluster c belongs to class c % n_classes.
    let mut cluster_sizes = vec![0usize; n_clusters];
    for class in 0..spec.n_classes {
        let in_class = n / spec.n_classes + usize::from(class < n % spec.n_classes);
        let per = spec.n_clusters_per_class;
        for j in 0..per {
            cluster_sizes[class + j * spec.n_classes] = in_class / per + usize::from(j < in_class % per);
        }
    }

    let mut x = Matrix::zeros(n, p);
    let mut y = Vec::with_capacity(n);
    let mut row = 0;
    for (c, &size) in cluster_sizes.iter().enumerate() {
        for _ in 0..size {
            for (f, centre) in centroids[c].iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                x.set(row, f, z + centre);
            }
            y.push((c % spec.n_classes) as f64);
            row += 1;
        }
    }

    let mixing: Vec<f64> = (0..k * spec.n_redundant)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    for r in 0..n {
        for j in 0..spec.n_redundant {
            let v: f64 = (0..k).map(|f| x.get(r, f) * mixing[f * spec.n_redundant + j]).sum();
            x.set(r, k + j, v);
        }
    }

    let useful = k + spec.n_redundant;
    let sources: Vec<usize> = (0..spec.n_repeated)
        .map(|_| rng.random_range(0..useful))
        .collect();
    for r in 0..n {
        for (j, &src) in sources.iter().enumerate() {
            let v = x.get(r, src);
            x.set(r, useful + j, v);
        }
    }

    let first_noise = useful + spec.n_repeated;
    for r in 0..n {
        for f in first_noise..p {
            x.set(r, f, rng.sample(StandardNormal));
        }
    }

    let mut weights = vec![0.0; p];
    for w in weights.iter_mut().take(k) {
        *w = 1.0 / k as f64;
    }

    if spec.shuffle {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(&mut rng);
        let mut cols: Vec<usize> = (0..p).collect();
        cols.shuffle(&mut rng);
        x = x.select_rows(&rows).select_cols(&cols);
        y = rows.iter().map(|&r| y[r]).collect();
        weights = cols.iter().map(|&c| weights[c]).collect();
    }

    let gt = GroundTruth::from_importances(ImportanceVector::new(weights)?);
    Dataset::new("make_classification", Task::Classification, x, y, Some(gt))
}

/// Linear target `y = X beta + noise`; informative columns lead.
pub fn make_regression(spec: &SynregSpec) -> Result<Dataset> {
    Ok(make_regression_with_coef(spec)?.0)
}

/// Like [`make_regression`], also returning the true coefficients.
pub fn make_regression_with_coef(spec: &SynregSpec) -> Result<(Dataset, Vec<f64>)> {
    if spec.n_samples < 2 || spec.n_features < 1 {
        return Err(Error::SpecInvalid("need n_samples >= 2 and n_features >= 1".into()));
    }
    if spec.n_informative == 0 || spec.n_informative > spec.n_features {
        return Err(Error::SpecInvalid(format!(
            "n_informative must be in 1..={}, got {}",
            spec.n_features, spec.n_informative
        )));
    }
    if !(spec.noise_std >= 0.0) {
        return Err(Error::SpecInvalid("noise_std must be >= 0".into()));
    }
    let mut rng = stream(spec.seed, "make_regression", 0);
    let (n, p) = (spec.n_samples, spec.n_features);
    let mut x = Matrix::zeros(n, p);
    for r in 0..n {
        for f in 0..p {
            x.set(r, f, rng.sample(StandardNormal));
        }
    }
    let mut beta = vec![0.0; p];
    for b in beta.iter_mut().take(spec.n_informative) {
        // (0, 100]
        *b = 100.0 * (1.0 - rng.random::<f64>());
    }
    let y: Vec<f64> = (0..n)
        .map(|r| {
            let clean: f64 = x.row(r).iter().zip(&beta).map(|(a, b)| a * b).sum();
            let z: f64 = rng.sample(StandardNormal);
            clean + spec.noise_std * z
        })
        .collect();
    let gt = regression_ground_truth(&beta)?;
    let ds = Dataset::new("make_regression", Task::Regression, x, y, Some(gt))?;
    Ok((ds, beta))
}

/// Ground truth of a linear model: the normalized absolute coefficients.
pub fn regression_ground_truth(beta: &[f64]) -> Result<GroundTruth> {
    let abs: Vec<f64> = beta.iter().map(|b| b.abs()).collect();
    Ok(GroundTruth::from_importances(normalize_importances(&abs)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_clf() -> SynclfSpec {
        SynclfSpec {
            n_samples: 301,
            n_features: 12,
            n_informative: 3,
            n_redundant: 2,
            n_repeated: 2,
            n_classes: 3,
            n_clusters_per_class: 2,
            class_sep: 1.0,
            seed: 11,
            shuffle: false,
        }
    }

    #[test]
    fn synclf_hard_ground_truth() {
        let mut spec = SynclfSpec::synclf_hard();
        spec.n_samples = 900;
        let ds = make_classification(&spec).unwrap();
        let gt = ds.ground_truth.as_ref().unwrap();
        let mut expected = vec![0.0; 50];
        expected[..4].copy_from_slice(&[0.25; 4]);
        assert_eq!(gt.importances.as_slice(), expected.as_slice());
        assert_eq!(gt.relevant.selected(), vec![0, 1, 2, 3]);
        assert_eq!(ds.n_classes(), 3);
    }

    #[test]
    fn all_informative_means_all_relevant() {
        let spec = SynclfSpec {
            n_samples: 50,
            n_features: 3,
            n_informative: 3,
            n_redundant: 0,
            n_repeated: 0,
            n_classes: 2,
            n_clusters_per_class: 1,
            class_sep: 1.0,
            seed: 0,
            shuffle: false,
        };
        let ds = make_classification(&spec).unwrap();
        assert_eq!(ds.ground_truth.unwrap().relevant.count(), 3);
    }

    #[test]
    fn classification_is_deterministic() {
        let a = make_classification(&small_clf()).unwrap();
        let b = make_classification(&small_clf()).unwrap();
        assert_eq!(a, b);
        let mut other = small_clf();
        other.seed = 12;
        assert_ne!(a.x, make_classification(&other).unwrap().x);
    }

    #[test]
    fn classes_are_balanced() {
        let ds = make_classification(&small_clf()).unwrap();
        let mut counts = [0usize; 3];
        for &c in &ds.y {
            counts[c as usize] += 1;
        }
        let spread = counts.iter().max().unwrap() - counts.iter().min().unwrap();
        assert!(spread <= 3, "{counts:?}");
    }

    #[test]
    fn repeated_columns_copy_their_source() {
        let spec = small_clf();
        let ds = make_classification(&spec).unwrap();
        let useful = spec.n_informative + spec.n_redundant;
        for j in useful..useful + spec.n_repeated {
            let col = ds.x.column(j);
            assert!(
                (0..useful).any(|s| ds.x.column(s) == col),
                "column {j} is not a copy"
            );
        }
    }

    #[test]
    fn redundant_columns_are_linear_in_informative() {
        let spec = small_clf();
        let ds = make_classification(&spec).unwrap();
        // Four rows determine the three mixing weights plus a check equation.
        let k = spec.n_informative;
        let a = nalgebra::DMatrix::from_fn(ds.n_samples(), k, |r, c| ds.x.get(r, c));
        for j in k..k + spec.n_redundant {
            let b = nalgebra::DVector::from_fn(ds.n_samples(), |r, _| ds.x.get(r, j));
            let sol = a.clone().svd(true, true).solve(&b, 1e-12).unwrap();
            let resid = (&a * &sol - &b).norm();
            assert!(resid < 1e-9, "residual {resid}");
            assert!(sol.iter().all(|w| w.abs() < 1.0));
        }
    }

    #[test]
    fn shuffle_permutes_truth_with_columns() {
        let mut spec = small_clf();
        spec.shuffle = true;
        let ds = make_classification(&spec).unwrap();
        let gt = ds.ground_truth.unwrap();
        assert_eq!(gt.relevant.count(), spec.n_informative);
        for (w, s) in gt.importances.as_slice().iter().zip(gt.relevant.as_slice()) {
            assert_eq!(*s, *w > 0.0);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = small_clf();
        spec.n_repeated = 10;
        assert!(matches!(make_classification(&spec), Err(Error::SpecInvalid(_))));
        let mut spec = small_clf();
        spec.n_informative = 2;
        spec.n_redundant = 0;
        spec.n_repeated = 0;
        // 3 classes x 2 clusters > 2^2 vertices
        assert!(matches!(make_classification(&spec), Err(Error::SpecInvalid(_))));
    }

    #[test]
    fn regression_single_informative_column() {
        let spec = SynregSpec {
            n_samples: 20,
            n_features: 2,
            n_informative: 1,
            noise_std: 0.0,
            seed: 1,
        };
        let (ds, beta) = make_regression_with_coef(&spec).unwrap();
        assert_eq!(beta[1], 0.0);
        assert!(beta[0] > 0.0 && beta[0] <= 100.0);
        for r in 0..20 {
            assert!((ds.y[r] - beta[0] * ds.x.get(r, 0)).abs() < 1e-12);
        }
        assert_eq!(ds.ground_truth.unwrap().importances.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn regression_truth_is_normalized_abs_beta() {
        let gt = regression_ground_truth(&[3.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(gt.importances.as_slice(), &[0.75, 0.25, 0.0, 0.0]);
        assert_eq!(gt.relevant.selected(), vec![0, 1]);
    }

    fn ols_errors(seed: u64) -> (Vec<f64>, f64) {
        let spec = SynregSpec {
            n_samples: 100,
            n_features: 10,
            n_informative: 5,
            noise_std: 1.0,
            seed,
        };
        let (ds, beta) = make_regression_with_coef(&spec).unwrap();
        let a = nalgebra::DMatrix::from_fn(100, 10, |r, c| ds.x.get(r, c));
        let b = nalgebra::DVector::from_vec(ds.y.clone());
        let fit = a.svd(true, true).solve(&b, 1e-12).unwrap();
        let tol = 3.0 * spec.noise_std / (spec.n_samples as f64).sqrt();
        (fit.iter().zip(&beta).map(|(e, t)| (e - t).abs()).collect(), tol)
    }

    #[test]
    fn ols_recovers_generated_coefficients() {
        // A 3-sigma band: nearly every coefficient over many seeds falls inside.
        let mut inside = 0;
        let mut total = 0;
        for seed in 0..200 {
            let (errors, tol) = ols_errors(seed);
            inside += errors.iter().filter(|e| **e < tol).count();
            total += errors.len();
        }
        let frac = inside as f64 / total as f64;
        assert!(frac > 0.99, "only {frac} of coefficients within 3 sigma/sqrt(n)");
    }
}
