//! Effective-rank estimation for (Hankel-embedded) data matrices.
//!
//! The primary estimator is optimal singular value hard thresholding (SVHT):
//! with known noise level the cutoff is `lambda*(beta) sqrt(n) sigma`; with
//! unknown noise it is `omega(beta) * median(singular values)`, where
//! `omega(beta) = lambda*(beta) / sqrt(mu_beta)` and `mu_beta` is the median of
//! the Marchenko–Pastur law with aspect ratio `beta = m / n <= 1`.
//!
//! AIC, BIC and AICc over truncated-SVD models are provided as baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    SvhtKnownNoise,
    SvhtUnknownNoise,
    Aic,
    Bic,
    Aicc,
}

/// Information criterion used by [`rank_by_information_criterion`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Aic,
    Bic,
    Aicc,
}

impl From<Criterion> for RankMethod {
    fn from(c: Criterion) -> Self {
        match c {
            Criterion::Aic => RankMethod::Aic,
            Criterion::Bic => RankMethod::Bic,
            Criterion::Aicc => RankMethod::Aicc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEstimate {
    pub rank: usize,
    /// Singular-value cutoff. For the information criteria this is the
    /// smallest retained singular value.
    pub threshold: f64,
    pub method: RankMethod,
    /// `min(m, n) / max(m, n)`.
    pub aspect_ratio: f64,
    /// Set when some truncation reproduces the data exactly (zero residual).
    pub exact_fit: bool,
}

/// Optimal hard-threshold coefficient for white noise of known level.
pub fn lambda_star(beta: f64) -> f64 {
    let root = (beta * beta + 14.0 * beta + 1.0).sqrt();
    (2.0 * (beta + 1.0) + 8.0 * beta / ((beta + 1.0) + root)).sqrt()
}

fn aspect(m: usize, n: usize) -> Result<(usize, usize, f64)> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimensions { rows: m, cols: n });
    }
    let (lo, hi) = if m <= n { (m, n) } else { (n, m) };
    Ok((lo, hi, lo as f64 / hi as f64))
}

/// SVHT cutoff `lambda*(beta) sqrt(n) sigma` for an `m x n` matrix; the
/// dimensions are swapped when `m > n`.
pub fn svht_known_noise(m: usize, n: usize, sigma: f64) -> Result<f64> {
    let (_, hi, beta) = aspect(m, n)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be positive, got {sigma}"
        )));
    }
    Ok(lambda_star(beta) * (hi as f64).sqrt() * sigma)
}

/// Rank by thresholding at the known-noise cutoff.
pub fn svht_known_noise_rank(singular_values: &[f64], m: usize, n: usize, sigma: f64) -> Result<RankEstimate> {
    if singular_values.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let threshold = svht_known_noise(m, n, sigma)?;
    let (_, _, beta) = aspect(m, n)?;
    Ok(RankEstimate {
        rank: singular_values.iter().filter(|&&s| s > threshold).count(),
        threshold,
        method: RankMethod::SvhtKnownNoise,
        aspect_ratio: beta,
        exact_fit: false,
    })
}

/// Marchenko–Pastur density support for ratio `beta`.
fn mp_support(beta: f64) -> (f64, f64) {
    let r = beta.sqrt();
    ((1.0 - r).powi(2), (1.0 + r).powi(2))
}

/// Marchenko–Pastur CDF expressed in the angle `phi` of the substitution
/// `t = a + (b - a)(1 - cos phi) / 2`, which removes the square-root endpoint
/// singularities of the density.
fn mp_cdf_angle(beta: f64, phi: f64) -> f64 {
    const PANELS: usize = 2000;
    let (a, b) = mp_support(beta);
    let half = 0.5 * (b - a);
    let integrand = |p: f64| {
        let t = a + half * (1.0 - p.cos());
        let s = p.sin();
        if t <= 0.0 {
            // beta = 1 at phi = 0: sin^2 / (1 - cos) -> 2.
            return half * half * 2.0 / (2.0 * std::f64::consts::PI * beta * half);
        }
        half * half * s * s / (2.0 * std::f64::consts::PI * beta * t)
    };
    let h = phi / PANELS as f64;
    let mut acc = integrand(0.0) + integrand(phi);
    for i in 1..PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(i as f64 * h);
    }
    acc * h / 3.0
}

/// Median of the Marchenko–Pastur distribution with ratio `beta` in (0, 1].
pub fn marchenko_pastur_median(beta: f64) -> f64 {
    if beta < 1e-12 {
        return 1.0;
    }
    let (a, b) = mp_support(beta);
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
    // Bisection on the angle until the induced interval in t is below 1e-9.
    while 0.5 * (b - a) * (hi - lo) > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if mp_cdf_angle(beta, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let phi = 0.5 * (lo + hi);
    a + 0.5 * (b - a) * (1.0 - phi.cos())
}

/// Unknown-noise SVHT coefficient `omega(beta)`.
pub fn omega(beta: f64) -> f64 {
    lambda_star(beta) / marchenko_pastur_median(beta).sqrt()
}

/// Rank by thresholding at `omega(beta) * median(singular_values)`.
pub fn svht_unknown_noise(singular_values: &[f64], m: usize, n: usize) -> Result<RankEstimate> {
    if singular_values.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let (_, _, beta) = aspect(m, n)?;
    if singular_values.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::InvalidArgument(
            "singular values must be finite and non-negative".into(),
        ));
    }
    let med = linalg::median(singular_values).unwrap_or(0.0);
    let threshold = omega(beta) * med;
    Ok(RankEstimate {
        rank: singular_values.iter().filter(|&&s| s > threshold).count(),
        threshold,
        method: RankMethod::SvhtUnknownNoise,
        aspect_ratio: beta,
        exact_fit: false,
    })
}

/// Convenience: unknown-noise SVHT rank of a data matrix.
pub fn svht_rank_of(matrix: &nalgebra::DMatrix<f64>) -> Result<RankEstimate> {
    let sv = linalg::singular_values(matrix)?;
    svht_unknown_noise(&sv, matrix.nrows(), matrix.ncols())
}

/// Value of an information criterion for a model with `k` parameters and
/// residual sum of squares `rss` over `n_obs` observations.
pub fn criterion_value(criterion: Criterion, k: usize, rss: f64, n_obs: usize) -> f64 {
    let n = n_obs as f64;
    let k = k as f64;
    let fit = n * (rss / n).ln();
    match criterion {
        Criterion::Aic => 2.0 * k + fit,
        Criterion::Bic => n.ln() * k + fit,
        Criterion::Aicc => {
            if n - k - 1.0 <= 0.0 {
                f64::INFINITY
            } else {
                2.0 * k + fit + 2.0 * k * (k + 1.0) / (n - k - 1.0)
            }
        }
    }
}

/// Criterion value for every candidate rank `r = 1, ..., min(n_time, n_channels) - 1`.
/// Entry `i` holds the value for rank `i + 1`.
pub fn criterion_curve(
    singular_values: &[f64],
    n_time: usize,
    n_channels: usize,
    criterion: Criterion,
) -> Result<Vec<f64>> {
    if singular_values.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let max_rank = n_time.min(n_channels).min(singular_values.len() + 1);
    if max_rank < 2 {
        return Err(Error::InvalidDimensions {
            rows: n_time,
            cols: n_channels,
        });
    }
    let n_obs = n_time * n_channels;
    // tail[r] = sum_{i >= r} s_i^2
    let mut tail = vec![0.0; singular_values.len() + 1];
    for i in (0..singular_values.len()).rev() {
        tail[i] = tail[i + 1] + singular_values[i] * singular_values[i];
    }
    Ok((1..max_rank)
        .map(|r| {
            let k = r * (n_time + n_channels - r);
            criterion_value(criterion, k, tail[r.min(singular_values.len())], n_obs)
        })
        .collect())
}

/// Rank minimising AIC, BIC or AICc over truncated-SVD models.
///
/// If some truncation leaves zero residual the first such rank is returned
/// with `exact_fit` set.
pub fn rank_by_information_criterion(
    singular_values: &[f64],
    n_time: usize,
    n_channels: usize,
    criterion: Criterion,
) -> Result<RankEstimate> {
    let curve = criterion_curve(singular_values, n_time, n_channels, criterion)?;
    let (_, _, beta) = aspect(n_time, n_channels)?;
    let total: f64 = singular_values.iter().map(|s| s * s).sum();
    let mut rss = total;
    for r in 1..=curve.len() {
        rss -= singular_values[r - 1] * singular_values[r - 1];
        if rss <= total * 1e-24 {
            return Ok(RankEstimate {
                rank: r,
                threshold: singular_values[r - 1],
                method: criterion.into(),
                aspect_ratio: beta,
                exact_fit: true,
            });
        }
    }
    let (best, _) = curve.iter().enumerate().fold(
        (0, f64::INFINITY),
        |(bi, bv), (i, &v)| {
            if v < bv {
                (i, v)
            } else {
                (bi, bv)
            }
        },
    );
    let rank = best + 1;
    Ok(RankEstimate {
        rank,
        threshold: singular_values[rank - 1],
        method: criterion.into(),
        aspect_ratio: beta,
        exact_fit: false,
    })
}

/// Shared truncation rank for two datasets: the larger estimate, at least 1.
pub fn pair_rank(r1: &RankEstimate, r2: &RankEstimate) -> usize {
    r1.rank.max(r2.rank).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_star_limits() {
        // Evaluating the closed form at beta = 0 gives sqrt(2 * 1 + 0).
        assert!((lambda_star(0.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((lambda_star(1e-12) - 2f64.sqrt()).abs() < 1e-9);
        assert!((lambda_star(1.0) - 4.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn known_noise_rejects_bad_input() {
        assert!(matches!(
            svht_known_noise(0, 5, 1.0),
            Err(Error::InvalidDimensions { .. })
        ));
        assert!(svht_known_noise(5, 5, 0.0).is_err());
        let swapped = svht_known_noise(40, 10, 0.5).unwrap();
        assert!((swapped - svht_known_noise(10, 40, 0.5).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn mp_median_of_square_case() {
        // omega(1) ~ 2.858 is the commonly quoted square-matrix coefficient.
        let w = omega(1.0);
        assert!((w - 2.858).abs() < 1e-3, "omega {w}");
        assert!((mp_cdf_angle(1.0, std::f64::consts::PI) - 1.0).abs() < 1e-9);
        assert!((mp_cdf_angle(0.3, std::f64::consts::PI) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equal_spectrum_gives_rank_zero() {
        let est = svht_unknown_noise(&[1.0, 1.0, 1.0, 1.0], 4, 10).unwrap();
        assert_eq!(est.rank, 0);
    }

    #[test]
    fn empty_spectrum_is_error() {
        assert!(matches!(svht_unknown_noise(&[], 3, 3), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn exact_rank_two_is_flagged() {
        let sv = [5.0, 3.0, 0.0, 0.0, 0.0, 0.0];
        for c in [Criterion::Aic, Criterion::Bic, Criterion::Aicc] {
            let est = rank_by_information_criterion(&sv, 40, 6, c).unwrap();
            assert_eq!(est.rank, 2);
            assert!(est.exact_fit);
        }
    }

    #[test]
    fn pair_rank_rules() {
        let est = |rank| RankEstimate {
            rank,
            threshold: 0.0,
            method: RankMethod::SvhtUnknownNoise,
            aspect_ratio: 1.0,
            exact_fit: false,
        };
        assert_eq!(pair_rank(&est(3), &est(5)), 5);
        assert_eq!(pair_rank(&est(4), &est(4)), 4);
        assert_eq!(pair_rank(&est(0), &est(0)), 1);
    }
}
