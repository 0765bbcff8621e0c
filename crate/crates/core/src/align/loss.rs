//! Alignment loss `f(C) = ‖A − C B Cᵀ‖²_F` and its gradients.

use nalgebra::DMatrix;

use crate::error::{shape_mismatch, Error, Result};
use crate::linalg;

/// Inputs are treated as symmetric when `‖M − Mᵀ‖_max` is below this.
const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn check_square_pair(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() || a.nrows() == 0 {
        return Err(Error::InvalidDimensions {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.shape() != b.shape() {
        return Err(shape_mismatch(a.shape(), b.shape()));
    }
    if !linalg::all_finite(a) || !linalg::all_finite(b) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Pair of operators to align, with the symmetric shortcut decided once.
#[derive(Debug, Clone)]
pub(crate) struct Objective<'a> {
    pub a: &'a DMatrix<f64>,
    pub b: &'a DMatrix<f64>,
    symmetric: bool,
}

impl<'a> Objective<'a> {
    pub fn new(a: &'a DMatrix<f64>, b: &'a DMatrix<f64>) -> Self {
        let symmetric = linalg::is_symmetric(a, SYMMETRY_TOL) && linalg::is_symmetric(b, SYMMETRY_TOL);
        Self { a, b, symmetric }
    }

    /// `E = A − C B Cᵀ`.
    pub fn residual(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        self.a - c * self.b * c.transpose()
    }

    pub fn loss(&self, c: &DMatrix<f64>) -> f64 {
        self.residual(c).norm_squared()
    }

    /// Loss and Euclidean gradient `−2(E C Bᵀ + Eᵀ C B)`; for symmetric inputs
    /// this collapses to `−4 E C B`.
    pub fn loss_and_grad(&self, c: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        let e = self.residual(c);
        let cb = c * self.b;
        let grad = if self.symmetric {
            &e * &cb * -4.0
        } else {
            (&e * c * self.b.transpose() + e.transpose() * &cb) * -2.0
        };
        (e.norm_squared(), grad)
    }
}

/// `‖CᵀC − I‖²_F`.
pub(crate) fn ortho_penalty(c: &DMatrix<f64>) -> f64 {
    let n = c.ncols();
    (c.transpose() * c - DMatrix::<f64>::identity(n, n)).norm_squared()
}

/// Gradient of [`ortho_penalty`]: `4 (C Cᵀ C − C)`.
pub(crate) fn ortho_penalty_grad(c: &DMatrix<f64>) -> DMatrix<f64> {
    (c * c.transpose() * c - c) * 4.0
}

/// `¼‖C Cᵀ − I‖²_F`, whose gradient `(C Cᵀ − I) C` is the landing pull.
pub(crate) fn landing_potential(c: &DMatrix<f64>) -> f64 {
    let n = c.nrows();
    0.25 * (c * c.transpose() - DMatrix::<f64>::identity(n, n)).norm_squared()
}

pub(crate) fn landing_pull(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    (c * c.transpose() - DMatrix::<f64>::identity(n, n)) * c
}

/// Regularised loss `‖A − C B Cᵀ‖² + λ‖CᵀC − I‖²` and its gradient.
pub fn loss_and_gradient(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    lambda: f64,
) -> Result<(f64, DMatrix<f64>)> {
    check_square_pair(a, b)?;
    if c.shape() != a.shape() {
        return Err(shape_mismatch(a.shape(), c.shape()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "penalty weight must be non-negative, got {lambda}"
        )));
    }
    let (f, g) = Objective::new(a, b).loss_and_grad(c);
    Ok((f + lambda * ortho_penalty(c), g + ortho_penalty_grad(c) * lambda))
}

/// Euclidean gradient of the unpenalised loss, the `G` of the landing field.
pub fn euclidean_gradient(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    loss_and_gradient(a, b, c, 0.0).map(|(_, g)| g)
}

/// Riemannian gradient on O(n): `skew(G Cᵀ) C`.
pub fn riemannian_gradient(g: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    linalg::skew(&(g * c.transpose())) * c
}

/// Landing field `skew(G Cᵀ) C + λ_L (C Cᵀ − I) C`.
pub fn landing_field(g: &DMatrix<f64>, c: &DMatrix<f64>, landing_weight: f64) -> DMatrix<f64> {
    riemannian_gradient(g, c) + landing_pull(c) * landing_weight
}
