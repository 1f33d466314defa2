//! Relief and ReliefF instance-based feature weights.
//!
//! Both scale every feature by its range on the training set, so a
//! per-feature difference lies in `[0, 1]` and a constant feature never
//! contributes. Raw weights lie in `[-1, 1]`.
//!
//! Neighbours are other instances. When `instances` maps each row to its
//! source instance, resampled copies of the query are skipped, so a
//! bootstrap duplicate never becomes a zero-difference nearest hit. Without
//! it every other row is a candidate.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::sampling::stream;

use super::class_labels;

/// Features mapped to `[0, 1]` by their range; constant features become 0.
fn range_scaled(x: &Matrix) -> Matrix {
    let (n, p) = (x.rows(), x.cols());
    let mut lo = vec![f64::INFINITY; p];
    let mut hi = vec![f64::NEG_INFINITY; p];
    for r in 0..n {
        for (f, &v) in x.row(r).iter().enumerate() {
            lo[f] = lo[f].min(v);
            hi[f] = hi[f].max(v);
        }
    }
    let mut z = Matrix::zeros(n, p);
    for r in 0..n {
        let src = x.row(r);
        for (f, out) in z.row_mut(r).iter_mut().enumerate() {
            let range = hi[f] - lo[f];
            *out = if range > 0.0 { (src[f] - lo[f]) / range } else { 0.0 };
        }
    }
    z
}

/// The instances to sweep: all rows, or `m` rows drawn without replacement.
fn iteration_rows(n: usize, n_iterations: Option<usize>, seed: u64, tag: &str) -> Vec<usize> {
    match n_iterations {
        Some(m) if m < n => {
            let mut rows = index::sample(&mut stream(seed, tag, 0), n, m).into_vec();
            rows.sort_unstable();
            rows
        }
        _ => (0..n).collect(),
    }
}

/// Whether rows `i` and `j` are the same instance (or copies of one).
fn same_instance(instances: Option<&[usize]>, n: usize) -> Result<impl Fn(usize, usize) -> bool + '_> {
    if let Some(ids) = instances {
        if ids.len() != n {
            return Err(Error::LengthMismatch {
                left: ids.len(),
                right: n,
            });
        }
    }
    Ok(move |i: usize, j: usize| i == j || instances.is_some_and(|ids| ids[i] == ids[j]))
}

/// Original Relief: one nearest hit and one nearest miss per instance,
/// Euclidean distance, squared per-feature differences, weights divided by
/// the number of iterations.
pub fn relief_weights(
    x: &Matrix,
    y: &[f64],
    n_iterations: Option<usize>,
    seed: u64,
    instances: Option<&[usize]>,
) -> Result<Vec<f64>> {
    let (labels, _) = class_labels(y)?;
    let same = same_instance(instances, y.len())?;
    let z = range_scaled(x);
    let (n, p) = (z.rows(), z.cols());
    let rows = iteration_rows(n, n_iterations, seed, "relief");
    let m = rows.len() as f64;
    let mut w = vec![0.0; p];
    for &i in &rows {
        let zi = z.row(i);
        let mut hit: Option<(f64, usize)> = None;
        let mut miss: Option<(f64, usize)> = None;
        for j in 0..n {
            if same(i, j) {
                continue;
            }
            let d: f64 = zi.iter().zip(z.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            let slot = if labels[j] == labels[i] { &mut hit } else { &mut miss };
            if slot.is_none_or(|(best, _)| d < best) {
                *slot = Some((d, j));
            }
        }
        for (neighbor, sign) in [(hit, -1.0), (miss, 1.0)] {
            if let Some((_, j)) = neighbor {
                for (f, (a, b)) in zi.iter().zip(z.row(j)).enumerate() {
                    w[f] += sign * (a - b) * (a - b) / m;
                }
            }
        }
    }
    Ok(w)
}

/// ReliefF: `k` nearest hits and `k` nearest misses from every other class,
/// Manhattan distance on range-scaled features, misses from class `c`
/// weighted by `P(c) / (1 - P(class of the instance))`.
///
/// Distance ties are broken toward the lower row index. `n_iterations =
/// None` sweeps every instance, which makes the result independent of
/// `seed`.
pub fn relieff_weights(
    x: &Matrix,
    y: &[f64],
    k: usize,
    n_iterations: Option<usize>,
    seed: u64,
    instances: Option<&[usize]>,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::SpecInvalid("k_neighbors must be at least 1".into()));
    }
    let (labels, c) = class_labels(y)?;
    let same = same_instance(instances, y.len())?;
    let z = range_scaled(x);
    let (n, p) = (z.rows(), z.cols());
    let mut prior = vec![0.0; c];
    for &l in &labels {
        prior[l] += 1.0 / n as f64;
    }
    let rows = iteration_rows(n, n_iterations, seed, "relieff");
    let m = rows.len() as f64;
    let mut w = vec![0.0; p];
    let mut buckets: Vec<Vec<(f64, usize)>> = vec![Vec::with_capacity(n); c];
    let data = z.as_slice();
    for &i in &rows {
        let zi = z.row(i);
        buckets.iter_mut().for_each(|b| b.clear());
        for (j, zj) in data.chunks_exact(p).enumerate() {
            if same(i, j) {
                continue;
            }
            let d: f64 = zi.iter().zip(zj).map(|(a, b)| (a - b).abs()).sum();
            buckets[labels[j]].push((d, j));
        }
        let own = labels[i];
        for (class, bucket) in buckets.iter_mut().enumerate() {
            let kk = k.min(bucket.len());
            if kk == 0 {
                continue;
            }
            if kk < bucket.len() {
                bucket.select_nth_unstable_by(kk - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            }
            let coef = if class == own {
                -1.0 / (m * kk as f64)
            } else {
                prior[class] / (1.0 - prior[own]) / (m * kk as f64)
            };
            for &(_, j) in &bucket[..kk] {
                for (wf, (a, b)) in w.iter_mut().zip(zi.iter().zip(z.row(j))) {
                    *wf += coef * (a - b).abs();
                }
            }
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straightforward ReliefF: full sort of all other instances per query.
    fn brute_force_relieff(x: &[Vec<f64>], y: &[usize], k: usize, ids: Option<&[usize]>) -> Vec<f64> {
        let n = x.len();
        let p = x[0].len();
        let lo: Vec<f64> = (0..p).map(|f| x.iter().map(|r| r[f]).fold(f64::INFINITY, f64::min)).collect();
        let hi: Vec<f64> = (0..p).map(|f| x.iter().map(|r| r[f]).fold(f64::NEG_INFINITY, f64::max)).collect();
        let diff = |f: usize, a: usize, b: usize| {
            if hi[f] == lo[f] {
                0.0
            } else {
                (x[a][f] - x[b][f]).abs() / (hi[f] - lo[f])
            }
        };
        let classes = y.iter().max().unwrap() + 1;
        let prior: Vec<f64> = (0..classes)
            .map(|c| y.iter().filter(|&&l| l == c).count() as f64 / n as f64)
            .collect();
        let mut w = vec![0.0; p];
        for i in 0..n {
            let mut others: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i && ids.is_none_or(|ids| ids[i] != ids[j]))
                .map(|j| ((0..p).map(|f| diff(f, i, j)).sum(), j))
                .collect();
            others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            for c in 0..classes {
                let near: Vec<usize> = others.iter().filter(|o| y[o.1] == c).take(k).map(|o| o.1).collect();
                for &j in &near {
                    for f in 0..p {
                        let d = diff(f, i, j) / (n as f64 * near.len() as f64);
                        if c == y[i] {
                            w[f] -= d;
                        } else {
                            w[f] += prior[c] / (1.0 - prior[y[i]]) * d;
                        }
                    }
                }
            }
        }
        w
    }

    /// Full factorial over two XOR inputs and a binary noise column, every
    /// combination present twice.
    fn xor_grid() -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..16 {
            let a = (i / 8) as f64;
            let b = ((i / 4) % 2) as f64;
            let noise = ((i / 2) % 2) as f64;
            rows.push(vec![a, b, noise]);
            labels.push(usize::from(a != b));
        }
        (rows, labels)
    }

    #[test]
    fn separated_one_dimensional_data() {
        let x = Matrix::column_vector(&[0.0, 0.0, 1.0, 1.0]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let w = relieff_weights(&x, &y, 1, None, 0, None).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12);
        let w = relief_weights(&x, &y, None, 0, None).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_feature_weight_is_zero() {
        let x = Matrix::from_rows(&[[0.0, 2.0], [0.1, 2.0], [1.0, 2.0], [0.9, 2.0]]).unwrap();
        let y = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(relieff_weights(&x, &y, 10, None, 0, None).unwrap()[1], 0.0);
        assert_eq!(relief_weights(&x, &y, None, 0, None).unwrap()[1], 0.0);
    }

    #[test]
    fn xor_grid_matches_brute_force() {
        let (rows, labels) = xor_grid();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        for k in [1, 2, 4, 8] {
            let fast = relieff_weights(&x, &y, k, None, 0, None).unwrap();
            let slow = brute_force_relieff(&rows, &labels, k, None);
            for f in 0..3 {
                assert!((fast[f] - slow[f]).abs() < 1e-12, "k={k} f={f}: {fast:?} vs {slow:?}");
            }
        }
    }

    #[test]
    fn xor_pair_outweighs_noise_with_single_neighbors() {
        let (rows, labels) = xor_grid();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        for w in [
            relieff_weights(&x, &y, 1, None, 0, None).unwrap(),
            relief_weights(&x, &y, None, 0, None).unwrap(),
        ] {
            assert!(w[0] > 0.0 && w[1] > 0.0, "{w:?}");
            assert!(w[2].abs() < 1e-12, "{w:?}");
        }
    }

    #[test]
    fn resampled_copies_are_not_neighbors() {
        use crate::sampling::stream;
        use rand::Rng;
        let mut rng = stream(9, "relief-copies", 0);
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] > 0.0)).collect();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let ids: Vec<usize> = (0..30).flat_map(|i| [i, i]).collect();
        let doubled: Vec<Vec<f64>> = ids.iter().map(|&i| rows[i].clone()).collect();
        let labels2: Vec<usize> = ids.iter().map(|&i| labels[i]).collect();
        let y2: Vec<f64> = ids.iter().map(|&i| y[i]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let x2 = Matrix::from_rows(&doubled).unwrap();

        let fast = relieff_weights(&x2, &y2, 4, None, 0, Some(&ids)).unwrap();
        let slow = brute_force_relieff(&doubled, &labels2, 4, Some(&ids));
        for f in 0..3 {
            assert!((fast[f] - slow[f]).abs() < 1e-12);
        }
        // Every row doubled: two copy-free neighbours are one instance seen
        // twice, which matches a single neighbour on the original rows.
        let pairs = [
            (
                relief_weights(&x, &y, None, 0, None).unwrap(),
                relief_weights(&x2, &y2, None, 0, Some(&ids)).unwrap(),
            ),
            (
                relieff_weights(&x, &y, 1, None, 0, None).unwrap(),
                relieff_weights(&x2, &y2, 2, None, 0, Some(&ids)).unwrap(),
            ),
        ];
        for (a, b) in pairs {
            for f in 0..3 {
                assert!((a[f] - b[f]).abs() < 1e-12, "{a:?} vs {b:?}");
            }
        }
        assert!(relief_weights(&x, &y, None, 0, Some(&ids)).is_err());
    }

    #[test]
    fn multiclass_matches_brute_force() {
        use crate::sampling::stream;
        use rand::Rng;
        let mut rng = stream(3, "relieff-test", 0);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<usize> = rows
            .iter()
            .map(|r| if r[0] > 0.3 { 2 } else if r[1] > 0.0 { 1 } else { 0 })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let fast = relieff_weights(&x, &y, 4, None, 0, None).unwrap();
        let slow = brute_force_relieff(&rows, &labels, 4, None);
        for f in 0..4 {
            assert!((fast[f] - slow[f]).abs() < 1e-12);
        }
        assert!(fast.iter().all(|w| (-1.0..=1.0).contains(w)));
    }

    #[test]
    fn binary_k1_relieff_equals_relief_on_binary_features() {
        // Squared and absolute differences agree on {0, 1}-valued features.
        let (rows, labels) = xor_grid();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let a = relieff_weights(&x, &y, 1, None, 0, None).unwrap();
        let b = relief_weights(&x, &y, None, 0, None).unwrap();
        for f in 0..3 {
            assert!((a[f] - b[f]).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn subsampled_iterations_are_seeded() {
        let (rows, labels) = xor_grid();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = labels.iter().map(|&l| l as f64).collect();
        let a = relieff_weights(&x, &y, 3, Some(8), 5, None).unwrap();
        assert_eq!(a, relieff_weights(&x, &y, 3, Some(8), 5, None).unwrap());
        assert_eq!(
            relieff_weights(&x, &y, 3, None, 1, None).unwrap(),
            relieff_weights(&x, &y, 3, None, 2, None).unwrap()
        );
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::column_vector(&[0.0, 1.0]);
        assert!(matches!(
            relieff_weights(&x, &[1.0, 1.0], 1, None, 0, None),
            Err(Error::SingleClass)
        ));
    }
}
