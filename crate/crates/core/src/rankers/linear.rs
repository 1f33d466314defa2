//! Ridge and lasso coefficients for regression targets.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative eigenvalue floor below which `Z^T Z` counts as rank-deficient.
const RANK_TOLERANCE: f64 = 1e-12;

fn design(x: &Matrix, y: &[f64], center: bool) -> (DMatrix<f64>, DVector<f64>) {
    let (n, p) = (x.rows(), x.cols());
    let mut z = DMatrix::from_row_slice(n, p, x.as_slice());
    let mut t = DVector::from_column_slice(y);
    if center {
        for mut col in z.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
        }
        let mean = t.mean();
        t.add_scalar_mut(-mean);
    }
    (z, t)
}

/// Closed-form `(Z^T Z + lambda I)^-1 Z^T y`.
///
/// With `center`, columns of `X` and `y` are mean-centered first, which is
/// equivalent to fitting an unpenalized intercept.
pub fn ridge_coefficients(x: &Matrix, y: &[f64], lambda: f64, center: bool) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::SpecInvalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let (z, t) = design(x, y, center);
    let p = z.ncols();
    let gram = z.transpose() * &z;
    if lambda == 0.0 {
        let eig = gram.clone().symmetric_eigenvalues();
        let max = eig.amax();
        let min = eig.min();
        if max == 0.0 || min <= RANK_TOLERANCE * max {
            return Err(Error::SingularMatrix);
        }
    }
    let a = gram + DMatrix::identity(p, p) * lambda;
    let rhs = z.transpose() * t;
    let chol = a.cholesky().ok_or(Error::SingularMatrix)?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Minimizes `0.5 * ||y - Z b||^2 + lambda * ||b||_1` on centered data by
/// cyclic coordinate descent, stopping once no coefficient moves by more
/// than `tol` in a full sweep.
pub fn lasso_coefficients(
    x: &Matrix,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::SpecInvalid(format!("lambda must be >= 0, got {lambda}")));
    }
    let (z, t) = design(x, y, true);
    let p = z.ncols();
    let norms: Vec<f64> = z.column_iter().map(|c| c.norm_squared()).collect();
    let mut beta = vec![0.0; p];
    let mut resid = t.clone();
    for _ in 0..max_iter {
        let mut max_step: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let col = z.column(j);
            let rho = col.dot(&resid) + norms[j] * beta[j];
            let next = soft_threshold(rho, lambda) / norms[j];
            let step = next - beta[j];
            if step != 0.0 {
                resid.axpy(-step, &col, 1.0);
                beta[j] = next;
                max_step = max_step.max(step.abs());
            }
        }
        if max_step < tol {
            return Ok(beta);
        }
    }
    log::warn!("lasso did not converge in {max_iter} sweeps");
    Ok(beta)
}

fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}
