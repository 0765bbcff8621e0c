//! Small dense linear-algebra helpers shared by the numerical modules.

use nalgebra::{DMatrix, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const SVD_MAX_ITERS: usize = 10_000;

pub fn skew(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

pub fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Thin SVD with singular values sorted in descending order.
pub fn svd(m: &DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m.clone(), true, true, f64::EPSILON, SVD_MAX_ITERS).ok_or(Error::SvdFailure)
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let svd = SVD::try_new(m.clone(), false, false, f64::EPSILON, SVD_MAX_ITERS).ok_or(Error::SvdFailure)?;
    Ok(svd.singular_values.iter().copied().collect())
}

/// `‖MᵀM − I‖_F`.
pub fn ortho_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    (m.transpose() * m - DMatrix::<f64>::identity(n, n)).norm()
}

/// Nearest orthogonal matrix `U Vᵀ` from the SVD `M = U Σ Vᵀ`.
///
/// With `special = true` the result is forced into SO(n): when the determinant
/// is negative the column of `U` paired with the smallest singular value is
/// negated before recombining.
pub fn polar_factor(m: &DMatrix<f64>, special: bool) -> Result<DMatrix<f64>> {
    let svd = svd(m)?;
    let mut u = svd.u.ok_or(Error::SvdFailure)?;
    let v_t = svd.v_t.ok_or(Error::SvdFailure)?;
    let mut q = &u * &v_t;
    if special && q.determinant() < 0.0 {
        let last = u.ncols() - 1;
        u.column_mut(last).neg_mut();
        q = &u * &v_t;
    }
    Ok(q)
}

/// Orthogonal factor of a QR decomposition, normalised so that `diag(R) > 0`.
pub fn qr_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols().min(r.nrows()) {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign convention `diag(R) > 0`).
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    qr_orthogonal(&gaussian_matrix(n, n, rng))
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

/// Median of a slice; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mid = sorted.len() / 2;
    Some(if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    })
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}
