//! Delay (Hankel) embedding of multivariate time series and selection of the
//! embedding parameters.
//!
//! A column of the embedded matrix stacks `mu` snapshots spaced `tau` samples
//! apart, newest first: `[x(t), x(t - tau), ..., x(t - (mu - 1) tau)]`. The
//! companion matrix `h_next` holds the same construction advanced by one
//! sample, so that DMD can regress one onto the other.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::koopman::DmdBasis;
use crate::linalg;
use crate::rank::{self, Criterion};

/// Real observations, one row per time step and one column per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    data: DMatrix<f64>,
    dt: f64,
}

impl TimeSeries {
    pub fn new(data: DMatrix<f64>, dt: f64) -> Result<Self> {
        if data.nrows() < 2 || data.ncols() < 1 {
            return Err(Error::InvalidDimensions {
                rows: data.nrows(),
                cols: data.ncols(),
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if !linalg::all_finite(&data) {
            return Err(Error::NonFinite);
        }
        Ok(Self { data, dt })
    }

    /// Builds a series from row-major samples (`rows[t][channel]`).
    pub fn from_rows(rows: &[Vec<f64>], dt: f64) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        let data = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
        Self::new(data, dt)
    }

    /// Single-channel series.
    pub fn from_scalar(values: &[f64], dt: f64) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(values.len(), 1, values), dt)
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn sample(&self, t: usize) -> DVector<f64> {
        self.data.row(t).transpose()
    }

    /// Elementwise transform; fails if the result is not finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.data.map(f), self.dt)
    }

    /// Samples `range` of the series.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if start + len > self.len() {
            return Err(Error::InvalidArgument(format!(
                "slice {start}..{} out of bounds for length {}",
                start + len,
                self.len()
            )));
        }
        Self::new(self.data.rows(start, len).into_owned(), self.dt)
    }

    /// Reorders channels: output channel `k` is input channel `perm[k]`.
    pub fn permute_channels(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.channels() || perm.iter().any(|&p| p >= self.channels()) {
            return Err(Error::InvalidArgument("invalid channel permutation".into()));
        }
        let data = DMatrix::from_fn(self.len(), perm.len(), |i, k| self.data[(i, perm[k])]);
        Self::new(data, self.dt)
    }

    /// Removes channels whose samples are all equal. Fails when nothing is
    /// left.
    pub fn drop_constant_channels(&self) -> Result<Self> {
        let keep: Vec<usize> = (0..self.channels())
            .filter(|&c| {
                let col = self.data.column(c);
                col.iter().any(|&v| v != col[0])
            })
            .collect();
        if keep.is_empty() {
            return Err(Error::DegenerateInput("every channel is constant".into()));
        }
        if keep.len() == self.channels() {
            return Ok(self.clone());
        }
        self.permute_channels_subset(&keep)
    }

    fn permute_channels_subset(&self, keep: &[usize]) -> Result<Self> {
        let data = DMatrix::from_fn(self.len(), keep.len(), |i, k| self.data[(i, keep[k])]);
        Self::new(data, self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmbeddingParams {
    /// Lag between stacked snapshots, in samples.
    pub delay_tau: usize,
    /// Number of stacked snapshots per column.
    pub num_delays_mu: usize,
}

impl EmbeddingParams {
    pub fn new(delay_tau: usize, num_delays_mu: usize) -> Result<Self> {
        if delay_tau == 0 || num_delays_mu == 0 {
            return Err(Error::InvalidArgument("tau and mu must be positive".into()));
        }
        Ok(Self {
            delay_tau,
            num_delays_mu,
        })
    }

    /// Samples spanned by one column of `h_now`, i.e. `(mu - 1) tau + 1`.
    pub fn span(&self) -> usize {
        (self.num_delays_mu - 1) * self.delay_tau + 1
    }

    /// Number of Hankel columns for a trajectory of `len` samples.
    pub fn columns_for(&self, len: usize) -> Option<usize> {
        len.checked_sub(self.span()).filter(|&c| c > 0)
    }

    pub fn check(&self, len: usize) -> Result<()> {
        if self.delay_tau == 0 || self.num_delays_mu == 0 {
            return Err(Error::InvalidArgument("tau and mu must be positive".into()));
        }
        if self.span() >= len {
            return Err(Error::EmbeddingTooLong { span: self.span(), len });
        }
        Ok(())
    }
}

/// Delay-embedded snapshot pairs ready for DMD.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPair {
    pub h_now: DMatrix<f64>,
    pub h_next: DMatrix<f64>,
    pub params: EmbeddingParams,
    /// Channels of the underlying series; the newest snapshot occupies the
    /// first `channels` rows of each column.
    pub channels: usize,
    /// Column count contributed by each trial, in order.
    pub trial_columns: Vec<usize>,
}

impl HankelPair {
    pub fn rows(&self) -> usize {
        self.h_now.nrows()
    }

    pub fn cols(&self) -> usize {
        self.h_now.ncols()
    }

    /// Most recent embedded snapshot (last column of `h_next`).
    pub fn last_snapshot(&self) -> DVector<f64> {
        self.h_next.column(self.cols() - 1).into_owned()
    }

    /// Copy with the row means of `h_now` subtracted from both matrices.
    pub fn centered(&self) -> HankelPair {
        let mean = self.h_now.column_mean();
        let mut out = self.clone();
        for mut col in out.h_now.column_iter_mut() {
            col -= &mean;
        }
        for mut col in out.h_next.column_iter_mut() {
            col -= &mean;
        }
        out
    }

    /// Restricts both matrices to the column range `start..start + len`.
    pub fn columns(&self, start: usize, len: usize) -> HankelPair {
        HankelPair {
            h_now: self.h_now.columns(start, len).into_owned(),
            h_next: self.h_next.columns(start, len).into_owned(),
            params: self.params,
            channels: self.channels,
            trial_columns: vec![len],
        }
    }
}

/// Builds the Hankel pair of a single trajectory.
pub fn hankel_embed(series: &TimeSeries, params: EmbeddingParams) -> Result<HankelPair> {
    hankel_embed_trials(std::slice::from_ref(series), params)
}

/// Embeds each trial independently and concatenates the columns.
pub fn hankel_embed_trials(trials: &[TimeSeries], params: EmbeddingParams) -> Result<HankelPair> {
    let first = trials
        .first()
        .ok_or_else(|| Error::InvalidArgument("no trials to embed".into()))?;
    let d = first.channels();
    if trials.iter().any(|t| t.channels() != d) {
        return Err(Error::InvalidArgument(
            "all trials must have the same channel count".into(),
        ));
    }
    for t in trials {
        if !linalg::all_finite(t.data()) {
            return Err(Error::NonFinite);
        }
        params.check(t.len())?;
    }

    let rows = params.num_delays_mu * d;
    let trial_columns: Vec<usize> = trials.iter().map(|t| t.len() - params.span()).collect();
    let total: usize = trial_columns.iter().sum();
    let mut h_now = DMatrix::zeros(rows, total);
    let mut h_next = DMatrix::zeros(rows, total);

    let mut col = 0;
    for (trial, &ncols) in trials.iter().zip(&trial_columns) {
        let x = trial.data();
        let first_t = params.span() - 1;
        for j in 0..ncols {
            let t = first_t + j;
            for k in 0..params.num_delays_mu {
                let src = t - k * params.delay_tau;
                for c in 0..d {
                    h_now[(k * d + c, col)] = x[(src, c)];
                    h_next[(k * d + c, col)] = x[(src + 1, c)];
                }
            }
            col += 1;
        }
    }

    Ok(HankelPair {
        h_now,
        h_next,
        params,
        channels: d,
        trial_columns,
    })
}

/// Delay grid used when none is supplied.
pub const DEFAULT_TAU_GRID: [usize; 5] = [1, 2, 5, 10, 20];
/// Delay-count grid used when none is supplied.
pub const DEFAULT_MU_GRID: [usize; 5] = [2, 5, 10, 20, 50];

/// BIC differences below this are treated as ties and resolved towards the
/// smaller embedding.
const BIC_TIE: f64 = 2.0;

/// Fraction of the samples held out for the one-step prediction score.
const HOLDOUT_FRACTION: f64 = 0.2;

/// Selects `(tau, mu)` by BIC of held-out one-step DMD predictions.
pub fn select_embedding_bic(series: &TimeSeries, tau_grid: &[usize], mu_grid: &[usize]) -> Result<EmbeddingParams> {
    select_embedding_bic_joint(std::slice::from_ref(series), tau_grid, mu_grid)
}

/// Joint selection for several series: the BIC values are summed so that all
/// series share one embedding.
pub fn select_embedding_bic_joint(
    series: &[TimeSeries],
    tau_grid: &[usize],
    mu_grid: &[usize],
) -> Result<EmbeddingParams> {
    if tau_grid.is_empty() || mu_grid.is_empty() || series.is_empty() {
        return Err(Error::InvalidArgument("empty embedding grid".into()));
    }
    let mut points = Vec::new();
    for &mu in mu_grid {
        for &tau in tau_grid {
            if tau > 0 && mu > 0 {
                points.push(EmbeddingParams {
                    delay_tau: tau,
                    num_delays_mu: mu,
                });
            }
        }
    }

    let scored: Vec<(EmbeddingParams, f64)> = points
        .par_iter()
        .filter_map(|&p| {
            let mut total = 0.0;
            for s in series {
                total += holdout_bic(s, p)?;
            }
            Some((p, total))
        })
        .collect();

    let best = scored.iter().map(|(_, b)| *b).fold(f64::INFINITY, f64::min);
    scored
        .into_iter()
        .filter(|(_, b)| *b <= best + BIC_TIE)
        .map(|(p, _)| p)
        .min_by_key(|p| (p.num_delays_mu, p.delay_tau))
        .ok_or(Error::NoFeasiblePoint)
}

/// BIC of the one-step prediction of the newest snapshot over a fixed set of
/// held-out target samples. `None` when the point is infeasible.
fn holdout_bic(series: &TimeSeries, params: EmbeddingParams) -> Option<f64> {
    let len = series.len();
    let holdout = ((len as f64 * HOLDOUT_FRACTION).round() as usize).max(1);
    params.check(len).ok()?;
    // Column j predicts sample span + j; training targets stop before the holdout.
    let train_cols = (len - holdout).checked_sub(params.span())?;
    if train_cols < 2 {
        return None;
    }
    let pair = hankel_embed(series, params).ok()?;
    let train = pair.columns(0, train_cols);
    let test = pair.columns(train_cols, pair.cols() - train_cols);

    let basis = DmdBasis::new(&train).ok()?;
    let sv = basis.singular_values();
    let (m, n) = (train.rows(), train.cols());
    let r = rank::svht_unknown_noise(sv, m.min(n), m.max(n))
        .map(|e| e.rank)
        .unwrap_or(1)
        .clamp(1, basis.max_rank());
    let model = basis.truncate(r).ok()?;

    let d = series.channels();
    let pred = model.one_step(&test.h_now);
    let err = pred.rows(0, d) - test.h_next.rows(0, d);
    let n_obs = err.len();
    let rss = err.norm_squared().max(f64::MIN_POSITIVE);
    let k = r * r + r * params.num_delays_mu * d;
    Some(rank::criterion_value(Criterion::Bic, k, rss, n_obs))
}

/// First lag at which the channel-averaged autocorrelation drops to `1/e`,
/// or `max_lag` if it never does.
pub fn select_delay_acf(series: &TimeSeries, max_lag: usize) -> Result<usize> {
    if max_lag == 0 || max_lag >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "max_lag must be in 1..{}, got {max_lag}",
            series.len()
        )));
    }
    let x = series.data();
    let t_len = series.len();
    let mut channels = Vec::new();
    for c in 0..series.channels() {
        let col = x.column(c);
        let mean = col.mean();
        let centered: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let var: f64 = centered.iter().map(|v| v * v).sum();
        if var > 0.0 {
            channels.push((centered, var));
        }
    }
    if channels.is_empty() {
        return Ok(max_lag);
    }
    let threshold = (-1.0f64).exp();
    for lag in 1..=max_lag {
        let mut acf = 0.0;
        for (c, var) in &channels {
            let cov: f64 = (0..t_len - lag).map(|t| c[t] * c[t + lag]).sum();
            acf += cov / var;
        }
        acf /= channels.len() as f64;
        if acf <= threshold {
            return Ok(lag);
        }
    }
    Ok(max_lag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn scalar(values: &[f64]) -> TimeSeries {
        TimeSeries::from_scalar(values, 1.0).unwrap()
    }

    #[test]
    fn small_embedding_matches_definition() {
        let pair = hankel_embed(&scalar(&[1.0, 2.0, 3.0, 4.0]), EmbeddingParams::new(1, 2).unwrap()).unwrap();
        assert_eq!(pair.h_now, DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 1.0, 2.0]));
        assert_eq!(pair.h_next, DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 2.0, 3.0]));
    }

    #[test]
    fn constant_series_gives_identical_columns() {
        let pair = hankel_embed(&scalar(&[2.5; 30]), EmbeddingParams::new(3, 4).unwrap()).unwrap();
        assert!(pair.h_now.iter().all(|&v| v == 2.5));
        assert!(pair.h_next.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn rejects_too_long_embedding() {
        let err = hankel_embed(&scalar(&[1.0, 2.0, 3.0]), EmbeddingParams::new(1, 3).unwrap()).unwrap_err();
        assert!(matches!(err, Error::EmbeddingTooLong { span: 3, len: 3 }));
    }

    #[test]
    fn rejects_non_finite() {
        let data = DMatrix::from_column_slice(3, 1, &[1.0, f64::NAN, 2.0]);
        assert!(matches!(TimeSeries::new(data, 1.0), Err(Error::NonFinite)));
    }

    #[test]
    fn trials_are_concatenated_blockwise() {
        let a = scalar(&[1.0, 2.0, 3.0, 4.0]);
        let b = scalar(&[10.0, 20.0, 30.0]);
        let pair = hankel_embed_trials(&[a, b], EmbeddingParams::new(1, 2).unwrap()).unwrap();
        assert_eq!(pair.trial_columns, vec![2, 1]);
        assert_eq!(pair.h_now.column(2).as_slice(), &[20.0, 10.0]);
        assert_eq!(pair.h_next.column(2).as_slice(), &[30.0, 20.0]);
    }

    #[test]
    fn single_point_grid() {
        let s = scalar(&(0..50).map(|i| (i as f64 * 0.3).sin()).collect::<Vec<_>>());
        let p = select_embedding_bic(&s, &[1], &[2]).unwrap();
        assert_eq!(p, EmbeddingParams::new(1, 2).unwrap());
    }

    #[test]
    fn infeasible_grid() {
        let s = scalar(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(
            select_embedding_bic(&s, &[10], &[5]),
            Err(Error::NoFeasiblePoint)
        ));
    }

    #[test]
    fn white_noise_prefers_smallest_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let values: Vec<f64> = (0..100).map(|_| StandardNormal.sample(&mut rng)).collect();
        let p = select_embedding_bic(&scalar(&values), &[1, 2, 5], &[2, 5, 10]).unwrap();
        assert_eq!(p, EmbeddingParams::new(1, 2).unwrap());
    }

    #[test]
    fn acf_white_noise_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert_eq!(select_delay_acf(&scalar(&values), 50).unwrap(), 1);
    }

    #[test]
    fn acf_cosine_crosses_at_closed_form_lag() {
        let period = 100.0;
        let values: Vec<f64> = (0..5000)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / period).cos())
            .collect();
        // cos(2 pi l / P) = 1/e  =>  l = P acos(1/e) / (2 pi) ~ 19.0
        let expected = period * (-1.0f64).exp().acos() / (2.0 * std::f64::consts::PI);
        let lag = select_delay_acf(&scalar(&values), 80).unwrap();
        assert!((lag as f64 - expected).abs() <= 1.0, "lag {lag} vs {expected}");
    }

    #[test]
    fn acf_constant_returns_max_lag() {
        assert_eq!(select_delay_acf(&scalar(&[3.0; 40]), 12).unwrap(), 12);
    }
}
