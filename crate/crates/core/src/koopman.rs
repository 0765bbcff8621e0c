//! Reduced-rank DMD and kernel DMD operators fitted to Hankel pairs.
//!
//! With the thin SVD `h_now = U Σ Vᵀ`, each column of `h_now` has reduced
//! coordinates given by the matching row of `V`. The reduced operator maps
//! those coordinates one step forward: `A = Σ_r⁻¹ U_rᵀ h_next V_r`, the
//! least-squares solution of `V'_r ≈ A V_r` where `V'_r` holds the coordinates
//! of `h_next` in the same truncated basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::embedding::{HankelPair, TimeSeries};
use crate::error::{shape_mismatch, Error, Result};
use crate::linalg;

/// Singular values below this fraction of the largest are treated as zero.
const PINV_CUTOFF: f64 = 1e-12;

/// SVD of a Hankel pair cached so that operators of any rank can be formed
/// without recomputing the decomposition.
#[derive(Debug, Clone)]
pub struct DmdBasis {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v: DMatrix<f64>,
    /// `Uᵀ h_next V` over the numerically non-zero singular directions.
    projected: DMatrix<f64>,
    last_snapshot: DVector<f64>,
    channels: usize,
}

impl DmdBasis {
    pub fn new(pair: &HankelPair) -> Result<Self> {
        if pair.h_now.shape() != pair.h_next.shape() {
            return Err(shape_mismatch(pair.h_now.shape(), pair.h_next.shape()));
        }
        if pair.cols() == 0 || pair.rows() == 0 {
            return Err(Error::InvalidDimensions {
                rows: pair.rows(),
                cols: pair.cols(),
            });
        }
        let svd = linalg::svd(&pair.h_now)?;
        let s_all: Vec<f64> = svd.singular_values.iter().copied().collect();
        let smax = s_all.first().copied().unwrap_or(0.0);
        let keep = s_all.iter().take_while(|&&s| s > PINV_CUTOFF * smax && s > 0.0).count();
        let mut u = svd.u.ok_or(Error::SvdFailure)?.columns(0, keep).into_owned();
        let mut v = svd.v_t.ok_or(Error::SvdFailure)?.rows(0, keep).transpose();
        // Sign convention: the largest-magnitude entry of each column of V is
        // positive. V depends only on h_nowᵀ h_now, so the operator does not
        // change when observation channels are permuted.
        for k in 0..keep {
            let col = v.column(k);
            let pivot = col
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            if pivot < 0.0 {
                v.column_mut(k).neg_mut();
                u.column_mut(k).neg_mut();
            }
        }
        let projected = u.transpose() * &pair.h_next * &v;
        Ok(Self {
            u,
            s: s_all,
            v,
            projected,
            last_snapshot: pair.last_snapshot(),
            channels: pair.channels,
        })
    }

    /// All singular values of `h_now`, descending.
    pub fn singular_values(&self) -> &[f64] {
        &self.s
    }

    /// Largest rank with a numerically non-zero singular value.
    pub fn max_rank(&self) -> usize {
        self.u.ncols()
    }

    pub fn truncate(&self, rank: usize) -> Result<LinearDynamics> {
        let max = self.s.len();
        if rank == 0 || rank > max {
            return Err(Error::RankTooLarge { rank, max });
        }
        // Directions below the pseudo-inverse cutoff contribute nothing.
        let r = rank.min(self.max_rank());
        if r == 0 {
            return Err(Error::DegenerateInput("data matrix is zero".into()));
        }
        let s_inv = DMatrix::from_diagonal(&DVector::from_iterator(r, self.s[..r].iter().map(|s| 1.0 / s)));
        let a_reduced = &s_inv * self.projected.view((0, 0), (r, r));
        Ok(LinearDynamics {
            a_reduced,
            rank: r,
            left_basis: self.u.columns(0, r).into_owned(),
            singular_values: self.s[..r].to_vec(),
            right_basis: self.v.columns(0, r).into_owned(),
            last_snapshot: self.last_snapshot.clone(),
            channels: self.channels,
        })
    }
}

/// Reduced-rank linear model `v(t+1) = A v(t)` in the truncated SVD basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearDynamics {
    pub a_reduced: DMatrix<f64>,
    pub rank: usize,
    /// `U_r`, embedded-space basis (rows = Hankel rows).
    pub left_basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// `V_r`, time-coordinate basis (rows = Hankel columns).
    pub right_basis: DMatrix<f64>,
    /// Final column of `h_next`, the starting point for forecasting.
    pub last_snapshot: DVector<f64>,
    pub channels: usize,
}

impl LinearDynamics {
    /// Reduced coordinates `Σ_r⁻¹ U_rᵀ h` of embedded snapshots.
    pub fn reduce(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = self.left_basis.transpose() * h;
        for (i, s) in self.singular_values.iter().enumerate() {
            z.row_mut(i).unscale_mut(*s);
        }
        z
    }

    /// Inverse of [`reduce`](Self::reduce) on the span of `U_r`.
    pub fn lift(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut scaled = z.clone();
        for (i, s) in self.singular_values.iter().enumerate() {
            scaled.row_mut(i).scale_mut(*s);
        }
        &self.left_basis * scaled
    }

    /// One-step prediction of every column of `h` in embedded coordinates.
    pub fn one_step(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        self.lift(&(&self.a_reduced * self.reduce(h)))
    }
}

pub fn dmd_fit(pair: &HankelPair, rank: usize) -> Result<LinearDynamics> {
    let max = pair.rows().min(pair.cols());
    if rank == 0 || rank > max {
        return Err(Error::RankTooLarge { rank, max });
    }
    DmdBasis::new(pair)?.truncate(rank)
}

/// Iterates the model `steps` times from its last embedded snapshot and
/// returns the newest-snapshot block of each lifted state. No stabilisation
/// is applied: unstable operators produce growing output.
pub fn dmd_predict(model: &LinearDynamics, steps: usize, dt: f64) -> Result<TimeSeries> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let d = model.channels;
    let mut z = model.reduce(&DMatrix::from_column_slice(
        model.last_snapshot.len(),
        1,
        model.last_snapshot.as_slice(),
    ));
    let mut out = DMatrix::zeros(steps, d);
    for k in 0..steps {
        z = &model.a_reduced * z;
        let x = model.lift(&z);
        for c in 0..d {
            out[(k, c)] = x[(c, 0)];
        }
    }
    if !linalg::all_finite(&out) {
        return Err(Error::NonFinite);
    }
    TimeSeries::new(out, dt)
}

/// Mean squared one-step prediction error over the holdout columns, in
/// embedded coordinates.
pub fn reconstruction_mse(model: &LinearDynamics, holdout: &HankelPair) -> Result<f64> {
    let rows = model.left_basis.nrows();
    if holdout.rows() != rows || holdout.h_next.shape() != holdout.h_now.shape() {
        return Err(shape_mismatch((rows, holdout.cols()), holdout.h_now.shape()));
    }
    let err = model.one_step(&holdout.h_now) - &holdout.h_next;
    Ok(err.norm_squared() / err.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-‖x − y‖² / (2 h²))`.
    Rbf,
    /// `⟨x, y⟩`; the bandwidth is ignored.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Auto,
    Fixed(f64),
}

/// Kernel DMD operator in the leading eigenbasis of the Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelOperator {
    pub a_v: DMatrix<f64>,
    pub kernel_bandwidth: f64,
    pub rank: usize,
    pub kernel: Kernel,
}

/// Columns used by the median-distance bandwidth rule.
const BANDWIDTH_SUBSAMPLE: usize = 500;

/// Median pairwise Euclidean distance between (at most 500, evenly spaced)
/// columns.
pub fn median_bandwidth(x: &DMatrix<f64>) -> f64 {
    let n = x.ncols();
    let idx: Vec<usize> = if n <= BANDWIDTH_SUBSAMPLE {
        (0..n).collect()
    } else {
        (0..BANDWIDTH_SUBSAMPLE).map(|i| i * n / BANDWIDTH_SUBSAMPLE).collect()
    };
    let mut d = Vec::with_capacity(idx.len() * idx.len().saturating_sub(1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            d.push((x.column(i) - x.column(j)).norm());
        }
    }
    linalg::median(&d).unwrap_or(0.0)
}

fn gram(kernel: Kernel, h: f64, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    match kernel {
        Kernel::Linear => x.transpose() * y,
        Kernel::Rbf => {
            let inv = 1.0 / (2.0 * h * h);
            DMatrix::from_fn(x.ncols(), y.ncols(), |i, j| {
                (-(x.column(i) - y.column(j)).norm_squared() * inv).exp()
            })
        }
    }
}

/// Fits kernel DMD with the RBF kernel.
pub fn kernel_dmd_fit(pair: &HankelPair, rank: usize, bandwidth: Bandwidth) -> Result<KernelOperator> {
    kernel_dmd_fit_with(pair, rank, Kernel::Rbf, bandwidth)
}

/// Kernel DMD: with `K_XX = Q Λ Qᵀ` truncated to the top `rank` eigenpairs,
/// `U = V = √N Q_r Λ_r^{-1/2}` and `A_v = Vᵀ K_YX U / N`. This scaling makes the
/// operator on static data (`h_next = h_now`) the identity.
pub fn kernel_dmd_fit_with(
    pair: &HankelPair,
    rank: usize,
    kernel: Kernel,
    bandwidth: Bandwidth,
) -> Result<KernelOperator> {
    let n = pair.cols();
    if rank == 0 || rank > n {
        return Err(Error::RankTooLarge { rank, max: n });
    }
    if pair.h_now.shape() != pair.h_next.shape() {
        return Err(shape_mismatch(pair.h_now.shape(), pair.h_next.shape()));
    }
    let h = match bandwidth {
        Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
        Bandwidth::Fixed(h) => return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}"))),
        Bandwidth::Auto => {
            let h = median_bandwidth(&pair.h_now);
            if h > 0.0 {
                h
            } else {
                1.0
            }
        }
    };

    let k_xx = gram(kernel, h, &pair.h_now, &pair.h_now);
    // K_YX[i, j] = k(y_i, x_j), y = columns of h_next.
    let k_yx = gram(kernel, h, &pair.h_next, &pair.h_now);

    let eig = SymmetricEigen::try_new(k_xx, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lmax = eig.eigenvalues[order[0]].max(0.0);
    let available = order
        .iter()
        .take_while(|&&i| eig.eigenvalues[i] > 1e-12 * lmax && eig.eigenvalues[i] > 0.0)
        .count();
    if available < rank {
        return Err(Error::SingularGram {
            requested: rank,
            available,
        });
    }
    let scale = (n as f64).sqrt();
    let basis = DMatrix::from_fn(n, rank, |i, j| {
        let k = order[j];
        scale * eig.eigenvectors[(i, k)] / eig.eigenvalues[k].sqrt()
    });
    // K_YX U: rows index y; Vᵀ (K_YX U) with V = U, following the operator
    // convention Vᵀ K_YX U / N.
    let a_v = basis.transpose() * k_yx.transpose() * &basis / n as f64;
    if !linalg::all_finite(&a_v) {
        return Err(Error::NonFinite);
    }
    Ok(KernelOperator {
        a_v,
        kernel_bandwidth: h,
        rank,
        kernel,
    })
}

/// Operators with a square matrix whose spectrum can be taken.
pub trait Spectrum {
    fn operator(&self) -> &DMatrix<f64>;

    fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        eigenvalues(self.operator())
    }
}

impl Spectrum for LinearDynamics {
    fn operator(&self) -> &DMatrix<f64> {
        &self.a_reduced
    }
}

impl Spectrum for KernelOperator {
    fn operator(&self) -> &DMatrix<f64> {
        &self.a_v
    }
}

/// Complex spectrum sorted by descending modulus, then descending real part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !m.is_square() {
        return Err(Error::InvalidDimensions {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if !linalg::all_finite(m) {
        return Err(Error::NonFinite);
    }
    let schur = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let mut ev: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|c| Complex64::new(c.re, c.im))
        .collect();
    sort_spectrum(&mut ev);
    Ok(ev)
}

pub fn sort_spectrum(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{hankel_embed, EmbeddingParams};

    #[test]
    fn identity_dynamics() {
        let h = DMatrix::from_row_slice(3, 4, &[1.0, 2.0, 0.5, 3.0, 0.0, 1.0, 4.0, 2.0, 1.0, 1.0, 1.0, 0.0]);
        let pair = HankelPair {
            h_now: h.clone(),
            h_next: h,
            params: EmbeddingParams::new(1, 3).unwrap(),
            channels: 1,
            trial_columns: vec![4],
        };
        let model = dmd_fit(&pair, 3).unwrap();
        assert!((&model.a_reduced - DMatrix::<f64>::identity(3, 3)).amax() < 1e-10);
        assert!(matches!(dmd_fit(&pair, 4), Err(Error::RankTooLarge { .. })));
    }

    #[test]
    fn ar1_scalar() {
        let x: Vec<f64> = (0..20).map(|i| 0.9f64.powi(i)).collect();
        let s = TimeSeries::from_scalar(&x, 1.0).unwrap();
        let pair = hankel_embed(&s, EmbeddingParams::new(1, 1).unwrap()).unwrap();
        let model = dmd_fit(&pair, 1).unwrap();
        assert!((model.a_reduced[(0, 0)] - 0.9).abs() < 1e-8);
    }

    #[test]
    fn ar1_forecast_from_unit_state() {
        let s = TimeSeries::from_scalar(&[1.0 / 0.81, 1.0 / 0.9, 1.0], 1.0).unwrap();
        let pair = hankel_embed(&s, EmbeddingParams::new(1, 1).unwrap()).unwrap();
        let model = dmd_fit(&pair, 1).unwrap();
        let pred = dmd_predict(&model, 3, 1.0).unwrap();
        for (got, want) in pred.data().iter().zip([0.9, 0.81, 0.729]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn rotation_spectrum() {
        let (rho, theta) = (0.8f64, 0.6f64);
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                rho * theta.cos(),
                -rho * theta.sin(),
                rho * theta.sin(),
                rho * theta.cos(),
            ],
        );
        let ev = eigenvalues(&m).unwrap();
        assert!((ev[0] - Complex64::from_polar(rho, theta)).norm() < 1e-12);
        assert!((ev[1] - Complex64::from_polar(rho, -theta)).norm() < 1e-12);
        assert_eq!(
            eigenvalues(&DMatrix::from_element(1, 1, 0.9)).unwrap(),
            vec![Complex64::new(0.9, 0.0)]
        );
    }

    #[test]
    fn static_kernel_data_has_unit_eigenvalue() {
        let h = DMatrix::from_fn(3, 10, |i, j| ((i * 7 + j * 3) as f64 * 0.37).sin());
        let pair = HankelPair {
            h_now: h.clone(),
            h_next: h,
            params: EmbeddingParams::new(1, 3).unwrap(),
            channels: 1,
            trial_columns: vec![10],
        };
        let op = kernel_dmd_fit(&pair, 4, Bandwidth::Auto).unwrap();
        assert!(op.kernel_bandwidth > 0.0);
        let ev = op.eigenvalues().unwrap();
        assert!(ev.iter().any(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-8));
        let again = kernel_dmd_fit(&pair, 4, Bandwidth::Auto).unwrap();
        assert_eq!(op, again);
    }

    #[test]
    fn singular_gram_is_reported() {
        let h = DMatrix::from_element(2, 6, 1.0);
        let pair = HankelPair {
            h_now: h.clone(),
            h_next: h,
            params: EmbeddingParams::new(1, 2).unwrap(),
            channels: 1,
            trial_columns: vec![6],
        };
        let err = kernel_dmd_fit(&pair, 3, Bandwidth::Fixed(1.0)).unwrap_err();
        assert!(matches!(
            err,
            Error::SingularGram {
                requested: 3,
                available: 1
            }
        ));
    }
}
