use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// `y = x + ε`, `ε ~ N(0, scale²)`.
    Isotropic,
    /// `y = x + scale·|x|·ε`, `ε ~ N(0, 1)`.
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisySeries {
    pub series: TimeSeries,
    /// Empirical `var(signal) / var(added noise)`; infinite when no noise was
    /// added.
    pub snr: f64,
}

/// Variance pooled over all channels (mean of per-channel variances).
fn pooled_variance(m: &DMatrix<f64>) -> f64 {
    let t = m.nrows() as f64;
    let mut total = 0.0;
    for col in m.column_iter() {
        let mean = col.mean();
        total += col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t;
    }
    total / m.ncols() as f64
}

pub fn add_noise(series: &TimeSeries, kind: NoiseKind, scale: f64, seed: u64) -> Result<NoisySeries> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise scale must be non-negative, got {scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = series.data();
    let noise = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
        let e: f64 = StandardNormal.sample(&mut rng);
        match kind {
            NoiseKind::Isotropic => scale * e,
            NoiseKind::Multiplicative => scale * x[(i, j)].abs() * e,
        }
    });
    let noise_var = pooled_variance(&noise);
    let snr = if noise_var > 0.0 {
        pooled_variance(x) / noise_var
    } else {
        f64::INFINITY
    };
    Ok(NoisySeries {
        series: TimeSeries::new(x + noise, series.dt())?,
        snr,
    })
}

/// Noise scale whose expected SNR on `series` equals `snr`.
pub fn noise_scale_for_snr(series: &TimeSeries, kind: NoiseKind, snr: f64) -> Result<f64> {
    if !(snr > 0.0 && snr.is_finite()) {
        return Err(Error::InvalidArgument(format!("snr must be positive, got {snr}")));
    }
    let signal = pooled_variance(series.data());
    let per_unit = match kind {
        NoiseKind::Isotropic => 1.0,
        NoiseKind::Multiplicative => {
            let x = series.data();
            x.norm_squared() / x.len() as f64
        }
    };
    if signal == 0.0 || per_unit == 0.0 {
        return Err(Error::DegenerateInput("signal has zero variance".into()));
    }
    Ok((signal / (snr * per_unit)).sqrt())
}

fn check_projection(series: &TimeSeries, out_dim: usize) -> Result<()> {
    if out_dim < series.channels() {
        return Err(Error::InvalidArgument(format!(
            "projection dimension {out_dim} is below the channel count {}",
            series.channels()
        )));
    }
    Ok(())
}

/// `X W` with `W` a seeded `D x out_dim` standard Gaussian matrix.
pub fn random_projection(series: &TimeSeries, out_dim: usize, seed: u64) -> Result<TimeSeries> {
    check_projection(series, out_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = linalg::gaussian_matrix(series.channels(), out_dim, &mut rng);
    TimeSeries::new(series.data() * w, series.dt())
}

/// `X W` with `W` having orthonormal rows (`W Wᵀ = I`), so distances between
/// samples are preserved.
pub fn random_projection_orthogonal(series: &TimeSeries, out_dim: usize, seed: u64) -> Result<TimeSeries> {
    check_projection(series, out_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = linalg::haar_orthogonal(out_dim, &mut rng);
    let w = q.rows(0, series.channels()).into_owned();
    TimeSeries::new(series.data() * w, series.dt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_signal(t: usize) -> TimeSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let v: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
        TimeSeries::from_scalar(&v, 1.0).unwrap()
    }

    #[test]
    fn zero_scale_is_identity() {
        let s = unit_signal(100);
        for kind in [NoiseKind::Isotropic, NoiseKind::Multiplicative] {
            let out = add_noise(&s, kind, 0.0, 1).unwrap();
            assert_eq!(out.series, s);
            assert!(out.snr.is_infinite());
        }
    }

    #[test]
    fn multiplicative_keeps_zeros() {
        let s = TimeSeries::from_scalar(&[0.0, 1.0, 0.0, -2.0], 1.0).unwrap();
        let out = add_noise(&s, NoiseKind::Multiplicative, 0.7, 3).unwrap();
        assert_eq!(out.series.data()[(0, 0)], 0.0);
        assert_eq!(out.series.data()[(2, 0)], 0.0);
    }

    #[test]
    fn isotropic_unit_snr() {
        let s = unit_signal(10_000);
        let out = add_noise(&s, NoiseKind::Isotropic, 1.0, 11).unwrap();
        assert!((out.snr - 1.0).abs() < 0.1, "snr {}", out.snr);
    }

    #[test]
    fn scale_for_snr_hits_target() {
        let s = unit_signal(10_000);
        for kind in [NoiseKind::Isotropic, NoiseKind::Multiplicative] {
            let scale = noise_scale_for_snr(&s, kind, 8.3).unwrap();
            let out = add_noise(&s, kind, scale, 5).unwrap();
            assert!((out.snr / 8.3 - 1.0).abs() < 0.1, "{kind:?} snr {}", out.snr);
        }
    }

    #[test]
    fn projection_is_deterministic_and_full_rank() {
        let data = DMatrix::from_fn(200, 3, |i, j| ((i + 1) as f64 * (j as f64 + 0.7) * 0.05).sin());
        let s = TimeSeries::new(data, 0.01).unwrap();
        let p1 = random_projection(&s, 16, 4).unwrap();
        assert_eq!(p1, random_projection(&s, 16, 4).unwrap());
        let sv = linalg::singular_values(p1.data()).unwrap();
        assert!(sv[2] > 1e-8 * sv[0]);
        assert!(sv[3] < 1e-10 * sv[0]);
        let q = random_projection_orthogonal(&s, 3, 4).unwrap();
        let g1 = s.data().transpose() * s.data();
        let g2 = q.data() * q.data().transpose();
        let g0 = s.data() * s.data().transpose();
        assert!((g2 - g0).amax() < 1e-9 * g1.amax());
    }
}
