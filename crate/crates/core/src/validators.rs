//! Validation estimators that score feature subsets on held-out data.

use serde::{Deserialize, Serialize};

use crate::datagen::Task;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tree::{DecisionTree, TreeParams};

pub const VALIDATOR_NAMES: [&str; 2] = ["knn", "decision_tree"];

/// R² reported when the truth is constant and the predictions are not.
pub const R2_FLOOR: f64 = -1e6;

fn default_k() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValidatorSpec {
    Knn {
        #[serde(default = "default_k")]
        k: usize,
    },
    DecisionTree,
}

impl Default for ValidatorSpec {
    fn default() -> Self {
        ValidatorSpec::Knn { k: default_k() }
    }
}

impl ValidatorSpec {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "knn" => Ok(Self::Knn { k: default_k() }),
            "decision_tree" => Ok(Self::DecisionTree),
            other => Err(Error::Unknown {
                kind: "validator",
                name: other.into(),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Knn { .. } => "knn",
            Self::DecisionTree => "decision_tree",
        }
    }

    /// Trains on `(x_train, y_train)` and predicts every row of `x_test`.
    pub fn fit_predict(
        &self,
        task: Task,
        x_train: &Matrix,
        y_train: &[f64],
        x_test: &Matrix,
    ) -> Result<Vec<f64>> {
        if x_train.rows() == 0 {
            return Err(Error::EmptyTrain);
        }
        if y_train.len() != x_train.rows() {
            return Err(Error::LengthMismatch {
                left: y_train.len(),
                right: x_train.rows(),
            });
        }
        if x_test.cols() != x_train.cols() {
            return Err(Error::DimensionMismatch {
                expected: x_train.cols(),
                got: x_test.cols(),
            });
        }
        match *self {
            Self::Knn { k } => {
                if k == 0 || k > x_train.rows() {
                    return Err(Error::SpecInvalid(format!(
                        "knn needs 1 <= k <= n_train, got k={k}, n_train={}",
                        x_train.rows()
                    )));
                }
                Ok(knn_predict(task, k, x_train, y_train, x_test))
            }
            Self::DecisionTree => {
                DecisionTree::fit(x_train, y_train, task, TreeParams::default())?.predict(x_test)
            }
        }
    }

    /// Scores of the validator trained on every prefix `order[..k]`,
    /// `k = 1..=order.len()`, against `y_test`.
    ///
    /// Equivalent to calling [`fit_predict`](Self::fit_predict) and [`score`]
    /// on each column subset; kNN reuses partial distances across prefixes.
    pub fn prefix_scores(
        &self,
        task: Task,
        x_train: &Matrix,
        y_train: &[f64],
        x_test: &Matrix,
        y_test: &[f64],
        order: &[usize],
    ) -> Result<Vec<f64>> {
        if y_test.len() != x_test.rows() {
            return Err(Error::LengthMismatch {
                left: y_test.len(),
                right: x_test.rows(),
            });
        }
        if let Some(&bad) = order.iter().find(|&&c| c >= x_train.cols()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: x_train.cols(),
            });
        }
        match *self {
            Self::Knn { k }
                if k >= 1
                    && k <= x_train.rows()
                    && x_test.cols() == x_train.cols()
                    && y_train.len() == x_train.rows() =>
            {
                let preds = knn_prefix_predictions(task, k, x_train, y_train, x_test, order);
                preds.iter().map(|p| score(task, y_test, p)).collect()
            }
            _ => (1..=order.len())
                .map(|k| {
                    let cols = &order[..k];
                    let pred = self.fit_predict(
                        task,
                        &x_train.select_cols(cols),
                        y_train,
                        &x_test.select_cols(cols),
                    )?;
                    score(task, y_test, &pred)
                })
                .collect(),
        }
    }
}

/// Test rows handled together when growing prefix distances.
const KNN_BLOCK: usize = 128;

/// Predictions for every prefix of `order`, one vector per prefix length.
fn knn_prefix_predictions(
    task: Task,
    k: usize,
    x_train: &Matrix,
    y_train: &[f64],
    x_test: &Matrix,
    order: &[usize],
) -> Vec<Vec<f64>> {
    let n = x_train.rows();
    let m = x_test.rows();
    let mut preds = vec![vec![0.0; m]; order.len()];
    // Column-major copies of the used training columns.
    let cols: Vec<Vec<f64>> = order.iter().map(|&c| x_train.column(c)).collect();
    let mut dist = vec![0.0f64; KNN_BLOCK * n];
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut votes: Vec<(f64, usize)> = Vec::new();
    for start in (0..m).step_by(KNN_BLOCK) {
        let rows = (m - start).min(KNN_BLOCK);
        dist[..rows * n].iter_mut().for_each(|d| *d = 0.0);
        for (step, &c) in order.iter().enumerate() {
            let col = &cols[step];
            for r in 0..rows {
                let q = x_test.get(start + r, c);
                for (d, &v) in dist[r * n..(r + 1) * n].iter_mut().zip(col) {
                    *d += (v - q) * (v - q);
                }
            }
            for r in 0..rows {
                scratch.clear();
                scratch.extend(dist[r * n..(r + 1) * n].iter().copied().zip(0..n));
                preds[step][start + r] = vote(task, k, &mut scratch, y_train, &mut votes);
            }
        }
    }
    preds
}

fn vote(
    task: Task,
    k: usize,
    dist: &mut [(f64, usize)],
    y_train: &[f64],
    votes: &mut Vec<(f64, usize)>,
) -> f64 {
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    let neighbors = &dist[..k];
    match task {
        Task::Regression => neighbors.iter().map(|&(_, j)| y_train[j]).sum::<f64>() / k as f64,
        Task::Classification => {
            votes.clear();
            for &(_, j) in neighbors {
                let label = y_train[j];
                match votes.iter_mut().find(|(l, _)| *l == label) {
                    Some(v) => v.1 += 1,
                    None => votes.push((label, 1)),
                }
            }
            votes
                .iter()
                .copied()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.total_cmp(&a.0)))
                .map(|v| v.0)
                .unwrap_or(f64::NAN)
        }
    }
}

fn knn_predict(task: Task, k: usize, x_train: &Matrix, y_train: &[f64], x_test: &Matrix) -> Vec<f64> {
    let n = x_train.rows();
    let p = x_train.cols();
    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut votes: Vec<(f64, usize)> = Vec::new();
    (0..x_test.rows())
        .map(|r| {
            let q = x_test.row(r);
            dist.clear();
            dist.extend((0..n).map(|j| {
                let d: f64 = x_train.as_slice()[j * p..(j + 1) * p]
                    .iter()
                    .zip(q)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d, j)
            }));
            vote(task, k, &mut dist, y_train, &mut votes)
        })
        .collect()
}

/// Accuracy for classification, R² for regression.
pub fn score(task: Task, y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::SpecInvalid("cannot score an empty test set".into()));
    }
    let n = y_true.len() as f64;
    Ok(match task {
        Task::Classification => {
            y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count() as f64 / n
        }
        Task::Regression => {
            let mean = y_true.iter().sum::<f64>() / n;
            let tss: f64 = y_true.iter().map(|v| (v - mean).powi(2)).sum();
            let rss: f64 = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum();
            if tss == 0.0 {
                if rss == 0.0 {
                    0.0
                } else {
                    R2_FLOOR
                }
            } else {
                (1.0 - rss / tss).max(R2_FLOOR)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn knn_exact_match_returns_label() {
        let x = Matrix::from_rows(&[[0.0, 0.0], [5.0, 5.0], [9.0, 1.0]]).unwrap();
        let y = [2.0, 0.0, 1.0];
        let q = Matrix::from_rows(&[[5.0, 5.0]]).unwrap();
        let knn = ValidatorSpec::Knn { k: 1 };
        assert_eq!(knn.fit_predict(Task::Classification, &x, &y, &q).unwrap(), vec![0.0]);
    }

    #[test]
    fn knn_three_neighbors_hand_sorted() {
        let x = Matrix::column_vector(&[0.0, 0.0, 0.0, 10.0, 10.0]);
        let y = [0.0, 0.0, 0.0, 1.0, 1.0];
        let q = Matrix::column_vector(&[9.0]);
        // Distances 9,9,9,1,1: neighbors are rows 3, 4 and row 0 (lowest index of the ties).
        let knn = ValidatorSpec::Knn { k: 3 };
        assert_eq!(knn.fit_predict(Task::Classification, &x, &y, &q).unwrap(), vec![1.0]);
        let reg = knn.fit_predict(Task::Regression, &x, &[0.0, 3.0, 6.0, 1.0, 2.0], &q).unwrap();
        assert!((reg[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn knn_vote_tie_goes_to_smaller_label() {
        let x = Matrix::column_vector(&[-1.0, 1.0]);
        let q = Matrix::column_vector(&[0.0]);
        let knn = ValidatorSpec::Knn { k: 2 };
        assert_eq!(knn.fit_predict(Task::Classification, &x, &[3.0, 1.0], &q).unwrap(), vec![1.0]);
    }

    #[test]
    fn tree_fits_separable_data() {
        let x = Matrix::column_vector(&[0.1, 0.4, 0.35, 0.8, 0.9, 0.7]);
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let pred = ValidatorSpec::DecisionTree
            .fit_predict(Task::Classification, &x, &y, &x)
            .unwrap();
        assert_eq!(score(Task::Classification, &y, &pred).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        let x = Matrix::column_vector(&[0.0, 1.0]);
        let wide = Matrix::from_rows(&[[0.0, 1.0]]).unwrap();
        let knn = ValidatorSpec::Knn { k: 1 };
        assert!(matches!(
            knn.fit_predict(Task::Classification, &x, &[0.0, 1.0], &wide),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            knn.fit_predict(Task::Classification, &Matrix::zeros(0, 1), &[], &x),
            Err(Error::EmptyTrain)
        ));
        assert!(matches!(
            score(Task::Classification, &[0.0], &[0.0, 1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn score_examples() {
        let acc = score(Task::Classification, &[0.0, 1.0, 1.0], &[0.0, 1.0, 0.0]).unwrap();
        assert!((acc - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(score(Task::Regression, &[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0]).unwrap(), 1.0);
        assert_eq!(score(Task::Regression, &[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(score(Task::Regression, &[2.0, 2.0], &[2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(score(Task::Regression, &[2.0, 2.0], &[2.0, 3.0]).unwrap(), R2_FLOOR);
    }

    #[test]
    fn spec_from_yaml_defaults_k() {
        let spec: ValidatorSpec = serde_yaml::from_str("name: knn").unwrap();
        assert_eq!(spec, ValidatorSpec::Knn { k: 5 });
    }

    #[test]
    fn prefix_scores_match_subset_by_subset() {
        let mut rng = stream(8, "prefix-test", 0);
        let (n, p) = (300, 6);
        let data: Vec<f64> = (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = Matrix::from_vec(n, p, data).unwrap();
        let y_clf: Vec<f64> = (0..n).map(|r| f64::from(x.get(r, 3) + 0.5 * x.get(r, 1) > 0.0)).collect();
        let y_reg: Vec<f64> = (0..n).map(|r| x.get(r, 3) - x.get(r, 5)).collect();
        let train: Vec<usize> = (0..200).collect();
        let test: Vec<usize> = (200..n).collect();
        let order = [3, 1, 0, 5, 2, 4];
        for (task, y) in [(Task::Classification, &y_clf), (Task::Regression, &y_reg)] {
            let ytr: Vec<f64> = train.iter().map(|&i| y[i]).collect();
            let yte: Vec<f64> = test.iter().map(|&i| y[i]).collect();
            let (xtr, xte) = (x.select_rows(&train), x.select_rows(&test));
            for spec in [ValidatorSpec::Knn { k: 5 }, ValidatorSpec::Knn { k: 1 }, ValidatorSpec::DecisionTree] {
                let fast = spec.prefix_scores(task, &xtr, &ytr, &xte, &yte, &order).unwrap();
                for kk in 1..=order.len() {
                    let cols = &order[..kk];
                    let pred = spec.fit_predict(task, &xtr.select_cols(cols), &ytr, &xte.select_cols(cols)).unwrap();
                    assert_eq!(fast[kk - 1], score(task, &yte, &pred).unwrap(), "{spec:?} {task} k={kk}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn ignored_columns_do_not_matter(seed in 0u64..10_000, k in 1usize..6) {
            let mut rng = stream(seed, "validator-test", 0);
            let n = 20;
            let rows: Vec<[f64; 3]> = (0..n)
                .map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
                .collect();
            let y: Vec<f64> = rows.iter().map(|r| f64::from(r[0] + r[1] > 1.0)).collect();
            let full = Matrix::from_rows(&rows).unwrap();
            let train = full.select_rows(&(0..15).collect::<Vec<_>>());
            let test = full.select_rows(&(15..20).collect::<Vec<_>>());
            for spec in [ValidatorSpec::Knn { k }, ValidatorSpec::DecisionTree] {
                let subset = [0, 1];
                let a = spec.fit_predict(Task::Classification, &train.select_cols(&subset), &y[..15], &test.select_cols(&subset)).unwrap();
                // Changing the excluded column changes nothing once it is dropped.
                let mut noisy = full.clone();
                for r in 0..n {
                    noisy.set(r, 2, rng.random_range(-5.0..5.0));
                }
                let ntrain = noisy.select_rows(&(0..15).collect::<Vec<_>>()).select_cols(&subset);
                let ntest = noisy.select_rows(&(15..20).collect::<Vec<_>>()).select_cols(&subset);
                let b = spec.fit_predict(Task::Classification, &ntrain, &y[..15], &ntest).unwrap();
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn scores_are_bounded(y in prop::collection::vec(0u8..3, 1..30), seed in 0u64..1000) {
            let mut rng = stream(seed, "score-test", 0);
            let t: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            let p: Vec<f64> = t.iter().map(|_| f64::from(rng.random_range(0u8..3))).collect();
            let acc = score(Task::Classification, &t, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&acc));
            prop_assert!(score(Task::Regression, &t, &p).unwrap() <= 1.0);
        }
    }
}
