//! Comparison baselines: orthogonal Procrustes on raw trajectories and the
//! 2-Wasserstein distance between operator spectra (kernel DMD + Wasserstein).

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::embedding::{hankel_embed, EmbeddingParams, TimeSeries};
use crate::error::{Error, Result, Stage};
use crate::koopman::{self, Bandwidth, Spectrum};
use crate::linalg;

/// Orthogonal Procrustes distance `min_R ‖X − Y R‖_F` after centring both
/// trajectories; the narrower one is zero-padded to the common width.
pub fn procrustes_distance(x: &TimeSeries, y: &TimeSeries) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} rows", x.len()),
            got: format!("{} rows", y.len()),
        });
    }
    let d = x.channels().max(y.channels());
    let prep = |s: &TimeSeries| -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(s.len(), d);
        m.view_mut((0, 0), s.data().shape()).copy_from(s.data());
        let mean = m.row_mean();
        for mut row in m.row_iter_mut() {
            row -= &mean;
        }
        if m.norm() == 0.0 {
            return Err(Error::DegenerateInput("trajectory is constant after centring".into()));
        }
        Ok(m)
    };
    let (xm, ym) = (prep(x)?, prep(y)?);
    let sv = linalg::singular_values(&(ym.transpose() * &xm))?;
    let d2 = xm.norm_squared() + ym.norm_squared() - 2.0 * sv.iter().sum::<f64>();
    Ok(d2.max(0.0).sqrt())
}

/// Eigenvalues treated as a uniform point cloud in the complex plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCloud {
    points: Vec<Complex64>,
}

impl SpectralCloud {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with potentials, `O(n³)`). Returns `assign[row] = column` and the cost.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> (Vec<usize>, f64) {
    let n = cost.nrows();
    assert!(cost.is_square(), "assignment needs a square cost matrix");
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // 1-based arrays; index 0 is the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        assign[p[j] - 1] = j - 1;
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum();
    (assign, total)
}

/// 2-Wasserstein distance between uniform clouds, the smaller one padded with
/// points at the origin.
pub fn wasserstein_spectral(s1: &SpectralCloud, s2: &SpectralCloud) -> f64 {
    let n = s1.len().max(s2.len());
    let pad = |s: &SpectralCloud| {
        let mut v = s.points.clone();
        v.resize(n, Complex64::new(0.0, 0.0));
        v
    };
    let (a, b) = (pad(s1), pad(s2));
    let cost = DMatrix::from_fn(n, n, |i, j| (a[i] - b[j]).norm_sqr());
    let (_, total) = min_cost_assignment(&cost);
    (total / n as f64).max(0.0).sqrt()
}

/// Kernel DMD spectrum of one series.
pub fn kernel_spectrum(series: &TimeSeries, params: EmbeddingParams, rank: usize) -> Result<SpectralCloud> {
    let pair = hankel_embed(series, params).map_err(|e| e.at(Stage::Embedding))?;
    let op = koopman::kernel_dmd_fit(&pair, rank, Bandwidth::Auto).map_err(|e| e.at(Stage::Dmd))?;
    SpectralCloud::new(op.eigenvalues().map_err(|e| e.at(Stage::Dmd))?).map_err(|e| e.at(Stage::Baseline))
}

/// Kernel DMD of both series followed by the Wasserstein distance of their
/// spectra.
pub fn kwdsa_distance(
    series_x: &TimeSeries,
    series_y: &TimeSeries,
    params: EmbeddingParams,
    rank: usize,
) -> Result<f64> {
    let sx = kernel_spectrum(series_x, params, rank)?;
    let sy = kernel_spectrum(series_y, params, rank)?;
    Ok(wasserstein_spectral(&sx, &sy))
}
