//! End-to-end comparisons: embedding, rank selection, DMD, alignment.

mod bench;
mod experiments;
mod pairwise;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::align::{self, pad_to_common_size, AlignmentResult, OptimizerConfig};
use crate::embedding::{
    hankel_embed, select_embedding_bic_joint, EmbeddingParams, HankelPair, TimeSeries, DEFAULT_MU_GRID,
    DEFAULT_TAU_GRID,
};
use crate::error::{Error, Result, Stage};
use crate::koopman::{DmdBasis, LinearDynamics};
use crate::rank::{self, Criterion, RankEstimate};

pub use bench::{benchmark_optimizers, convergence_analytics, ExperimentRecord, MethodOutcome};
pub use experiments::{
    compare_with, derive_seed, geometric_sweep, kwdsa_pairwise, separation_ratio, snr_sweep, topology_sweep,
    two_system_batch, ComparisonMethod, RingExperiment, TwoSystemBatch,
};
pub use pairwise::{mds_embed, pairwise_distances, DistanceMatrix, MissingEntry};

/// Rank selection applied to each Hankel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankSelection {
    #[default]
    Svht,
    Aic,
    Bic,
    Aicc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
    Angular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparisonConfig {
    /// Fixed embedding; `None` selects one jointly by BIC.
    pub embedding: Option<EmbeddingParams>,
    pub rank_method: RankSelection,
    /// Explicit DMD rank, bypassing the estimate.
    pub rank_override: Option<usize>,
    /// Upper bound on the estimated rank; ignored when an override is given.
    pub max_rank: Option<usize>,
    /// Drop channels that never change before embedding. Silenced units
    /// otherwise add zero singular values that drag the SVHT median down.
    pub drop_constant_channels: bool,
    pub optimizer: OptimizerConfig,
    pub metric: Metric,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        Self {
            embedding: None,
            rank_method: RankSelection::Svht,
            rank_override: None,
            max_rank: None,
            drop_constant_channels: true,
            optimizer: OptimizerConfig::default(),
            metric: Metric::Euclidean,
        }
    }
}

/// Wall time of each stage, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub embedding: f64,
    pub rank: f64,
    pub dmd: f64,
    pub alignment: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub alignment: AlignmentResult,
    pub embedding: EmbeddingParams,
    pub rank_x: RankEstimate,
    pub rank_y: RankEstimate,
    /// Rank both operators were fitted at.
    pub rank: usize,
    /// Set when both estimates were 0 and the rank was clamped to 1.
    pub rank_clamped: bool,
    pub timings: StageTimings,
}

impl Comparison {
    pub fn distance(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Euclidean => self.alignment.distance_euclidean,
            Metric::Angular => self.alignment.distance_angular,
        }
    }
}

/// A series embedded and decomposed once, reusable across comparisons.
#[derive(Debug, Clone)]
pub struct PreparedSeries {
    pub pair: HankelPair,
    pub basis: DmdBasis,
    pub rank: RankEstimate,
    pub embed_time: f64,
    pub rank_time: f64,
    pub svd_time: f64,
}

fn estimate_rank(basis: &DmdBasis, pair: &HankelPair, method: RankSelection) -> Result<RankEstimate> {
    let sv = basis.singular_values();
    let (rows, cols) = (pair.rows(), pair.cols());
    match method {
        RankSelection::Svht => rank::svht_unknown_noise(sv, rows, cols),
        RankSelection::Aic => rank::rank_by_information_criterion(sv, cols, rows, Criterion::Aic),
        RankSelection::Bic => rank::rank_by_information_criterion(sv, cols, rows, Criterion::Bic),
        RankSelection::Aicc => rank::rank_by_information_criterion(sv, cols, rows, Criterion::Aicc),
    }
}

pub fn prepare(series: &TimeSeries, params: EmbeddingParams, config: &ComparisonConfig) -> Result<PreparedSeries> {
    let t0 = Instant::now();
    let pair = if config.drop_constant_channels {
        series.drop_constant_channels().and_then(|s| hankel_embed(&s, params))
    } else {
        hankel_embed(series, params)
    }
    .map_err(|e| e.at(Stage::Embedding))?;
    let t1 = Instant::now();
    let basis = DmdBasis::new(&pair).map_err(|e| e.at(Stage::Dmd))?;
    let t2 = Instant::now();
    let rank = estimate_rank(&basis, &pair, config.rank_method).map_err(|e| e.at(Stage::Rank))?;
    let t3 = Instant::now();
    Ok(PreparedSeries {
        pair,
        basis,
        rank,
        embed_time: (t1 - t0).as_secs_f64(),
        svd_time: (t2 - t1).as_secs_f64(),
        rank_time: (t3 - t2).as_secs_f64(),
    })
}

/// Resolves the embedding shared by `series`.
pub fn resolve_embedding(series: &[TimeSeries], config: &ComparisonConfig) -> Result<EmbeddingParams> {
    match config.embedding {
        Some(p) => Ok(p),
        None => {
            select_embedding_bic_joint(series, &DEFAULT_TAU_GRID, &DEFAULT_MU_GRID).map_err(|e| e.at(Stage::Embedding))
        }
    }
}

/// Shared rank for a pair of prepared series: the override if given, else
/// the larger estimate (at least 1), capped by the available spectrum.
fn shared_rank(x: &PreparedSeries, y: &PreparedSeries, config: &ComparisonConfig) -> Result<(usize, bool)> {
    let cap = x.basis.singular_values().len().min(y.basis.singular_values().len());
    let (r, clamped) = match config.rank_override {
        Some(0) => return Err(Error::InvalidArgument("rank_override must be positive".into()).at(Stage::Rank)),
        Some(r) => (r, false),
        None => (rank::pair_rank(&x.rank, &y.rank), x.rank.rank == 0 && y.rank.rank == 0),
    };
    if config.rank_override.is_some() && r > cap {
        return Err(Error::RankTooLarge { rank: r, max: cap }.at(Stage::Rank));
    }
    let cap = match (config.rank_override, config.max_rank) {
        (None, Some(m)) => cap.min(m.max(1)),
        _ => cap,
    };
    Ok((r.min(cap), clamped))
}

fn fit(prepared: &PreparedSeries, r: usize) -> Result<LinearDynamics> {
    prepared.basis.truncate(r).map_err(|e| e.at(Stage::Dmd))
}

/// Compares two prepared series with the configured optimizer.
pub fn compare_prepared(x: &PreparedSeries, y: &PreparedSeries, config: &ComparisonConfig) -> Result<Comparison> {
    if x.pair.params != y.pair.params {
        return Err(
            Error::InvalidArgument("series were embedded with different parameters".into()).at(Stage::Embedding),
        );
    }
    let t0 = Instant::now();
    let (r, rank_clamped) = shared_rank(x, y, config)?;
    let mx = fit(x, r)?;
    let my = fit(y, r)?;
    let t1 = Instant::now();
    let (a, b) = pad_to_common_size(&mx.a_reduced, &my.a_reduced);
    let alignment = align::align(&a, &b, &config.optimizer).map_err(|e| e.at(Stage::Alignment))?;
    let t2 = Instant::now();
    let timings = StageTimings {
        embedding: x.embed_time + y.embed_time,
        rank: x.rank_time + y.rank_time,
        dmd: x.svd_time + y.svd_time + (t1 - t0).as_secs_f64(),
        alignment: (t2 - t1).as_secs_f64(),
        total: 0.0,
    };
    Ok(Comparison {
        alignment,
        embedding: x.pair.params,
        rank_x: x.rank,
        rank_y: y.rank,
        rank: r,
        rank_clamped,
        timings: StageTimings {
            total: timings.embedding + timings.rank + timings.dmd + timings.alignment,
            ..timings
        },
    })
}

/// Full pipeline: embed → rank → DMD → pad → align → distances.
pub fn compare(series_x: &TimeSeries, series_y: &TimeSeries, config: &ComparisonConfig) -> Result<Comparison> {
    let t0 = Instant::now();
    let params = resolve_embedding(&[series_x.clone(), series_y.clone()], config)?;
    let select_time = t0.elapsed().as_secs_f64();
    let x = prepare(series_x, params, config)?;
    let y = prepare(series_y, params, config)?;
    let mut out = compare_prepared(&x, &y, config)?;
    out.timings.embedding += select_time;
    out.timings.total += select_time;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::Method;
    use crate::systems::{lorenz_generate, LorenzSpec};

    fn lorenz(steps: usize) -> TimeSeries {
        lorenz_generate(&LorenzSpec {
            steps,
            ..LorenzSpec::default()
        })
        .unwrap()
    }

    fn fixed() -> ComparisonConfig {
        ComparisonConfig {
            embedding: Some(EmbeddingParams::new(2, 5).unwrap()),
            ..ComparisonConfig::default()
        }
    }

    #[test]
    fn self_comparison_is_zero() {
        let x = lorenz(800);
        for m in Method::ALL {
            let mut cfg = fixed();
            cfg.optimizer.method = m;
            let c = compare(&x, &x, &cfg).unwrap();
            assert!(c.alignment.distance_euclidean < 1e-6, "{m}");
            assert!(c.rank >= 1);
        }
    }

    #[test]
    fn errors_are_stage_tagged() {
        let short = TimeSeries::from_scalar(&[1.0, 2.0, 3.0], 1.0).unwrap();
        let err = compare(&short, &short, &fixed()).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Embedding));
        assert!(matches!(err.root(), Error::EmbeddingTooLong { .. }));

        let x = lorenz(300);
        let cfg = ComparisonConfig {
            rank_override: Some(1000),
            ..fixed()
        };
        let err = compare(&x, &x, &cfg).unwrap_err();
        assert_eq!(err.stage(), Some(Stage::Rank));
    }

    #[test]
    fn rank_override_is_used() {
        let x = lorenz(500);
        let cfg = ComparisonConfig {
            rank_override: Some(4),
            ..fixed()
        };
        let c = compare(&x, &x, &cfg).unwrap();
        assert_eq!(c.rank, 4);
        assert_eq!(c.alignment.transform_c.nrows(), 4);
    }
}
