use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::experiments::derive_seed;
use crate::align::{self, is_zero_distance, stop_iteration, OptimizerConfig};
use crate::error::{Error, Result};
use crate::systems::{spd_pair_generate, SpdPairSpec};

/// One row of a sweep or benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// Swept parameter value (matrix size, β, α, SNR, ...).
    pub param: f64,
    pub method: String,
    pub trial: usize,
    pub distance_euclidean: f64,
    pub distance_angular: f64,
    pub wall_time: f64,
    pub stop_iter: usize,
    pub ortho_residual: f64,
    pub zero_flag: bool,
    /// Set when the trial failed; numeric fields are NaN in that case.
    #[serde(default)]
    pub error: Option<String>,
    #[serde(skip)]
    pub loss_trace: Vec<f64>,
}

impl ExperimentRecord {
    pub fn failed(param: f64, method: impl Into<String>, trial: usize, error: &Error) -> Self {
        Self {
            param,
            method: method.into(),
            trial,
            distance_euclidean: f64::NAN,
            distance_angular: f64::NAN,
            wall_time: f64::NAN,
            stop_iter: 0,
            ortho_residual: f64::NAN,
            zero_flag: false,
            error: Some(error.to_string()),
            loss_trace: Vec::new(),
        }
    }

    pub fn from_alignment(param: f64, trial: usize, r: &align::AlignmentResult) -> Self {
        Self {
            param,
            method: r.method.name().to_string(),
            trial,
            distance_euclidean: r.distance_euclidean,
            distance_angular: r.distance_angular,
            wall_time: r.wall_time,
            stop_iter: r.stop_iteration,
            ortho_residual: r.ortho_residual,
            zero_flag: is_zero_distance(r.distance_euclidean),
            error: None,
            loss_trace: r.loss_trace.clone(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Aggregate of one method at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub param: f64,
    pub method: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_distance: f64,
    pub zero_rate: f64,
    pub mean_wall_time: f64,
}

impl MethodOutcome {
    /// Groups records by `(param, method)` in first-seen order.
    pub fn summarize(records: &[ExperimentRecord]) -> Vec<MethodOutcome> {
        let mut keys: Vec<(f64, String)> = Vec::new();
        for r in records {
            if !keys.iter().any(|(p, m)| *p == r.param && *m == r.method) {
                keys.push((r.param, r.method.clone()));
            }
        }
        keys.into_iter()
            .map(|(param, method)| {
                let group: Vec<&ExperimentRecord> = records
                    .iter()
                    .filter(|r| r.param == param && r.method == method)
                    .collect();
                let ok: Vec<&&ExperimentRecord> = group.iter().filter(|r| r.is_ok()).collect();
                let mean = |f: &dyn Fn(&ExperimentRecord) -> f64| {
                    if ok.is_empty() {
                        f64::NAN
                    } else {
                        ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                    }
                };
                MethodOutcome {
                    param,
                    trials: group.len(),
                    failures: group.len() - ok.len(),
                    mean_distance: mean(&|r| r.distance_euclidean),
                    zero_rate: mean(&|r| if r.zero_flag { 1.0 } else { 0.0 }),
                    mean_wall_time: mean(&|r| r.wall_time),
                    method,
                }
            })
            .collect()
    }
}

/// For every size and trial, generates an orthogonally similar SPD pair and
/// aligns it with each configuration. Every configuration sees the same pair
/// and the same optimizer seed. Records come back ordered by
/// `(size, trial, config)`.
pub fn benchmark_optimizers(
    sizes: &[usize],
    trials: usize,
    configs: &[OptimizerConfig],
    seed: u64,
) -> Result<Vec<ExperimentRecord>> {
    if sizes.is_empty() || trials == 0 || configs.is_empty() {
        return Err(Error::InvalidArgument(
            "sizes, trials and configs must be non-empty".into(),
        ));
    }
    for c in configs {
        c.validate()?;
    }
    let tasks: Vec<(usize, usize)> = sizes.iter().flat_map(|&n| (0..trials).map(move |t| (n, t))).collect();
    let records = tasks
        .par_iter()
        .flat_map_iter(|&(n, trial)| {
            let task_seed = derive_seed(seed, &[n as u64, trial as u64]);
            let pair = spd_pair_generate(&SpdPairSpec {
                size: n,
                seed: task_seed,
                ..SpdPairSpec::default()
            });
            configs
                .iter()
                .map(|cfg| {
                    let param = n as f64;
                    let pair = match &pair {
                        Ok(p) => p,
                        Err(e) => return ExperimentRecord::failed(param, cfg.method.name(), trial, e),
                    };
                    let cfg = OptimizerConfig {
                        seed: derive_seed(task_seed, &[cfg.seed]),
                        ..cfg.clone()
                    };
                    match align::align(&pair.a1, &pair.a2, &cfg) {
                        Ok(r) => ExperimentRecord::from_alignment(param, trial, &r),
                        Err(e) => ExperimentRecord::failed(param, cfg.method.name(), trial, &e),
                    }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(records)
}

/// Mean loss trace across runs (ragged traces padded with their final value)
/// and the iteration at which it flattens.
pub fn convergence_analytics(loss_traces: &[Vec<f64>]) -> Result<(Vec<f64>, usize)> {
    let traces: Vec<&Vec<f64>> = loss_traces.iter().filter(|t| !t.is_empty()).collect();
    if traces.is_empty() {
        return Err(Error::InvalidArgument("no non-empty loss traces".into()));
    }
    let len = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let mean: Vec<f64> = (0..len)
        .map(|k| {
            traces
                .iter()
                .map(|t| t.get(k).copied().unwrap_or(t[t.len() - 1]))
                .sum::<f64>()
                / traces.len() as f64
        })
        .collect();
    let stop = stop_iteration(&mean);
    Ok((mean, stop))
}
