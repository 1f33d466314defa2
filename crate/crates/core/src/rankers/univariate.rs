//! Per-feature class-separation statistics.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::class_labels;

/// One-way ANOVA F statistic of every feature against the class labels.
///
/// Constant features score 0. A feature with no within-class spread but
/// distinct class means scores `+inf`, which normalization turns into an
/// equal share among such features.
pub fn anova_f_scores(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (labels, c) = class_labels(y)?;
    let n = x.rows();
    let mut counts = vec![0.0; c];
    for &l in &labels {
        counts[l] += 1.0;
    }
    let df_between = (c - 1) as f64;
    let df_within = (n - c) as f64;
    let mut sums = vec![0.0; c];
    Ok((0..x.cols())
        .map(|f| {
            let col = x.column(f);
            let (lo, hi) = col
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
            if lo == hi {
                return 0.0;
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            for (v, &l) in col.iter().zip(&labels) {
                sums[l] += v;
            }
            let mean = col.iter().sum::<f64>() / n as f64;
            let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, k)| s / k).collect();
            let ssb: f64 = means
                .iter()
                .zip(&counts)
                .map(|(m, k)| k * (m - mean).powi(2))
                .sum();
            let ssw: f64 = col
                .iter()
                .zip(&labels)
                .map(|(v, &l)| (v - means[l]).powi(2))
                .sum();
            if ssb == 0.0 {
                0.0
            } else if ssw == 0.0 {
                f64::INFINITY
            } else {
                (ssb / df_between) / (ssw / df_within)
            }
        })
        .collect())
}

/// Chi-squared statistic between class-wise feature sums and the sums
/// expected from class frequencies alone.
pub fn chi2_scores(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (labels, c) = class_labels(y)?;
    let n = x.rows();
    for r in 0..n {
        if let Some(col) = x.row(r).iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeFeature { row: r, col });
        }
    }
    let mut freq = vec![0.0; c];
    for &l in &labels {
        freq[l] += 1.0 / n as f64;
    }
    let mut observed = vec![0.0; c];
    Ok((0..x.cols())
        .map(|f| {
            observed.iter_mut().for_each(|o| *o = 0.0);
            for (r, &l) in labels.iter().enumerate() {
                observed[l] += x.get(r, f);
            }
            let total: f64 = observed.iter().sum();
            if total == 0.0 {
                return 0.0;
            }
            observed
                .iter()
                .zip(&freq)
                .map(|(o, p)| {
                    let e = p * total;
                    (o - e).powi(2) / e
                })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::normalize_importances;

    #[test]
    fn anova_hand_example() {
        let x = Matrix::column_vector(&[1.0, 2.0, 3.0, 4.0]);
        let f = anova_f_scores(&x, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((f[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn anova_constant_feature_and_normalization() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]]).unwrap();
        let f = anova_f_scores(&x, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(f[1], 0.0);
        let w = normalize_importances(&f).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn anova_matches_textbook_three_groups() {
        // Groups (1,2,3), (4,5,6), (7,8,9): SSB = 54, SSW = 6, F = (54/2)/(6/6) = 27.
        let x = Matrix::column_vector(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0]);
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0];
        assert!((anova_f_scores(&x, &y).unwrap()[0] - 27.0).abs() < 1e-9);
    }

    #[test]
    fn chi2_hand_example() {
        let x = Matrix::column_vector(&[1.0, 1.0, 0.0, 0.0]);
        let s = chi2_scores(&x, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((s[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn chi2_equal_class_sums_score_zero() {
        let x = Matrix::column_vector(&[1.0, 2.0, 2.0, 1.0]);
        let s = chi2_scores(&x, &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(s[0], 0.0);
    }

    #[test]
    fn chi2_rejects_negative_cells() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, -0.5]]).unwrap();
        assert!(matches!(
            chi2_scores(&x, &[0.0, 1.0]),
            Err(Error::NegativeFeature { row: 1, col: 1 })
        ));
    }
}
