use std::path::Path;

use dynsim_core::pipeline::{
    benchmark_optimizers, geometric_sweep, kwdsa_pairwise, mds_embed, pairwise_distances, resolve_embedding,
    separation_ratio, snr_sweep, topology_sweep, two_system_batch, Comparison, ComparisonMethod, DistanceMatrix,
    MethodOutcome, Metric,
};
use dynsim_core::systems::{
    add_noise, lorenz_generate, noise_scale_for_snr, random_projection, ring_attractor_simulate, two_system_generate,
};
use dynsim_core::{EmbeddingParams, Error as CoreError, ExperimentRecord, OptimizerConfig, RankEstimate, TimeSeries};
use serde::Serialize;

use crate::config::{self, BenchConfig, CompareConfig, GenerateConfig, Generator, MdsConfig, Sweep, SweepConfig};
use crate::error::{CliError, CliResult};
use crate::io;

pub struct Context<'a> {
    pub config: &'a Path,
    pub out: &'a Path,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Context<'_> {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.out.join(name)
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    artifact_version: &'static str,
    config_version: u32,
    seed: u64,
    samples: usize,
    channels: usize,
    dt: f64,
    spec: &'a GenerateConfig,
}

pub fn generate(ctx: &Context) -> CliResult<()> {
    let cfg: GenerateConfig = config::load(ctx.config)?;
    let seed = ctx.seed.unwrap_or(0);
    let gen = CliError::from_generation;
    let mut series = match &cfg.generator {
        Generator::Lorenz(spec) => lorenz_generate(spec).map_err(gen)?,
        Generator::Ring(spec) => ring_attractor_simulate(spec, seed).map_err(gen)?,
        Generator::TwoSystem(g) => two_system_generate(g.system, &g.spec).map_err(gen)?,
    };
    if let Some(dim) = cfg.projection {
        series = random_projection(&series, dim, seed).map_err(gen)?;
    }
    if let Some(noise) = &cfg.noise {
        let scale = match (noise.snr, noise.scale) {
            (Some(snr), _) => noise_scale_for_snr(&series, noise.kind, snr).map_err(gen)?,
            (None, Some(scale)) => scale,
            (None, None) => return Err(CliError::Input("noise: set either `snr` or `scale`".into())),
        };
        // offset so the noise stream differs from the projection stream
        series = add_noise(&series, noise.kind, scale, seed.wrapping_add(1))
            .map_err(gen)?
            .series;
    }
    io::write_series(&ctx.path("trajectory.csv"), &series)?;
    io::write_json(
        &ctx.path("metadata.json"),
        &Metadata {
            artifact_version: env!("CARGO_PKG_VERSION"),
            config_version: config::CONFIG_VERSION,
            seed,
            samples: series.len(),
            channels: series.channels(),
            dt: series.dt(),
            spec: &cfg,
        },
    )?;
    ctx.note(format!(
        "wrote {} samples x {} channels",
        series.len(),
        series.channels()
    ));
    Ok(())
}

#[derive(Serialize)]
struct CompareOutput<'a> {
    artifact_version: &'static str,
    method: String,
    metric: Metric,
    distance: f64,
    distance_euclidean: f64,
    distance_angular: f64,
    embedding: EmbeddingParams,
    rank: usize,
    rank_clamped: bool,
    rank_x: &'a RankEstimate,
    rank_y: &'a RankEstimate,
    iterations: usize,
    stop_iteration: usize,
    converged: bool,
    ortho_residual: f64,
    timings: dynsim_core::pipeline::StageTimings,
    loss_trace: &'a [f64],
}

#[derive(Serialize)]
struct DivergenceReport<'a> {
    error: String,
    iteration: usize,
    loss: f64,
    loss_trace: &'a [f64],
}

pub fn compare(ctx: &Context) -> CliResult<()> {
    let mut cfg: CompareConfig = config::load(ctx.config)?;
    if let Some(seed) = ctx.seed {
        cfg.comparison.optimizer.seed = seed;
    }
    let x = io::read_series(&config::resolve(ctx.config, &cfg.x))?;
    let y = io::read_series(&config::resolve(ctx.config, &cfg.y))?;
    let result = match dynsim_core::compare(&x, &y, &cfg.comparison) {
        Ok(r) => r,
        Err(e) => {
            if let CoreError::Divergence { iteration, loss, trace } = e.root() {
                let path = ctx.path("divergence.json");
                io::write_json(
                    &path,
                    &DivergenceReport {
                        error: e.to_string(),
                        iteration: *iteration,
                        loss: *loss,
                        loss_trace: trace,
                    },
                )?;
                ctx.note(format!("partial loss trace written to {}", path.display()));
            }
            return Err(CliError::from_pipeline(e));
        }
    };
    let metric = cfg.comparison.metric;
    io::write_json(&ctx.path("result.json"), &compare_output(&result, metric))?;
    ctx.note(format!("{} distance {}", metric_name(metric), result.distance(metric)));
    Ok(())
}

fn compare_output(r: &Comparison, metric: Metric) -> CompareOutput<'_> {
    let a = &r.alignment;
    CompareOutput {
        artifact_version: env!("CARGO_PKG_VERSION"),
        method: a.method.to_string(),
        metric,
        distance: r.distance(metric),
        distance_euclidean: a.distance_euclidean,
        distance_angular: a.distance_angular,
        embedding: r.embedding,
        rank: r.rank,
        rank_clamped: r.rank_clamped,
        rank_x: &r.rank_x,
        rank_y: &r.rank_y,
        iterations: a.iterations_run,
        stop_iteration: a.stop_iteration,
        converged: a.converged,
        ortho_residual: a.ortho_residual,
        timings: r.timings,
        loss_trace: &a.loss_trace,
    }
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Euclidean => "euclidean",
        Metric::Angular => "angular",
    }
}

fn write_records_and_summary(ctx: &Context, records: &[ExperimentRecord]) -> CliResult<()> {
    io::write_records(&ctx.path("sweep.csv"), records)?;
    let summary = MethodOutcome::summarize(records);
    io::write_summary(&ctx.path("summary.csv"), &summary)?;
    let failures = records.iter().filter(|r| !r.is_ok()).count();
    if failures > 0 {
        ctx.note(format!("{failures} of {} comparisons failed", records.len()));
    }
    ctx.note(format!("wrote {} records", records.len()));
    Ok(())
}

pub fn sweep(ctx: &Context) -> CliResult<()> {
    let cfg: SweepConfig = config::load(ctx.config)?;
    let input = CliError::from_generation;
    match cfg.sweep {
        Sweep::Geometric {
            grid,
            methods,
            mut ring,
        } => {
            ring.seed = ctx.seed.unwrap_or(ring.seed);
            let records = geometric_sweep(&ring, &grid, &methods).map_err(input)?;
            write_records_and_summary(ctx, &records)
        }
        Sweep::Topology {
            grid,
            methods,
            reference_alpha,
            mut ring,
        } => {
            ring.seed = ctx.seed.unwrap_or(ring.seed);
            let records = topology_sweep(&ring, reference_alpha, &grid, &methods).map_err(input)?;
            write_records_and_summary(ctx, &records)
        }
        Sweep::Snr {
            grid,
            methods,
            trials,
            noise,
            lorenz,
            comparison,
            kernel_rank,
        } => {
            let seed = ctx.seed.unwrap_or(comparison.optimizer.seed);
            let records =
                snr_sweep(&lorenz, noise, &grid, trials, &methods, &comparison, kernel_rank, seed).map_err(input)?;
            write_records_and_summary(ctx, &records)
        }
        Sweep::Size {
            grid,
            methods,
            trials,
            optimizer,
        } => {
            let records = run_benchmark(ctx, &grid, trials, &methods, &optimizer)?;
            write_records_and_summary(ctx, &records)
        }
        Sweep::TwoSystem {
            methods,
            mut batch,
            comparison,
            kernel_rank,
        } => {
            batch.seed = ctx.seed.unwrap_or(batch.seed);
            let (runs, labels) = two_system_batch(&batch).map_err(input)?;
            let mut rows = Vec::new();
            for m in &methods {
                let dm = match m {
                    ComparisonMethod::Dsa(method) => {
                        let cfg = dynsim_core::ComparisonConfig {
                            optimizer: OptimizerConfig {
                                method: *method,
                                ..comparison.optimizer.clone()
                            },
                            ..comparison.clone()
                        };
                        pairwise_distances(&runs, Some(labels.clone()), &cfg).map_err(CliError::from_pipeline)?
                    }
                    ComparisonMethod::Kwdsa => {
                        let params = resolve_embedding(&runs, &comparison).map_err(CliError::from_pipeline)?;
                        kwdsa_pairwise(&runs, labels.clone(), params, kernel_rank).map_err(CliError::from_pipeline)?
                    }
                    ComparisonMethod::Procrustes => {
                        return Err(CliError::Input(
                            "procrustes is not available for pairwise batches".into(),
                        ))
                    }
                };
                io::write_distance_matrix(&ctx.path(&format!("distances_{}.csv", m.name())), &dm)?;
                report_missing(ctx, &dm);
                rows.push((m.name(), separation_ratio(&dm)));
            }
            io::write_separation(&ctx.path("separation.csv"), &rows)?;
            for (name, ratio) in &rows {
                ctx.note(format!("{name}: between/within {ratio:.3}"));
            }
            Ok(())
        }
        Sweep::Pairwise {
            inputs,
            labels,
            comparison,
        } => {
            let runs = inputs
                .iter()
                .map(|p| io::read_series(&config::resolve(ctx.config, p)))
                .collect::<CliResult<Vec<TimeSeries>>>()?;
            let mut comparison = comparison;
            if let Some(seed) = ctx.seed {
                comparison.optimizer.seed = seed;
            }
            let dm = pairwise_distances(&runs, labels, &comparison).map_err(CliError::from_pipeline)?;
            io::write_distance_matrix(&ctx.path("distances.csv"), &dm)?;
            report_missing(ctx, &dm);
            Ok(())
        }
    }
}

fn report_missing(ctx: &Context, dm: &DistanceMatrix) {
    for m in &dm.missing {
        ctx.note(format!("{} vs {}: {}", dm.labels[m.i], dm.labels[m.j], m.reason));
    }
}

fn run_benchmark(
    ctx: &Context,
    sizes: &[usize],
    trials: usize,
    methods: &[dynsim_core::Method],
    optimizer: &OptimizerConfig,
) -> CliResult<Vec<ExperimentRecord>> {
    let configs: Vec<OptimizerConfig> = methods
        .iter()
        .map(|&method| OptimizerConfig {
            method,
            ..optimizer.clone()
        })
        .collect();
    let seed = ctx.seed.unwrap_or(optimizer.seed);
    benchmark_optimizers(sizes, trials, &configs, seed).map_err(CliError::from_generation)
}

pub fn bench(ctx: &Context) -> CliResult<()> {
    let cfg: BenchConfig = config::load(ctx.config)?;
    let records = run_benchmark(ctx, &cfg.sizes, cfg.trials, &cfg.methods, &cfg.optimizer)?;
    io::write_records(&ctx.path("records.csv"), &records)?;
    let summary = MethodOutcome::summarize(&records);
    io::write_summary(&ctx.path("summary.csv"), &summary)?;
    for o in &summary {
        ctx.note(format!(
            "n={} {:<9} zero rate {:.2}  mean wall {:.2e}s",
            o.param, o.method, o.zero_rate, o.mean_wall_time
        ));
    }
    Ok(())
}

pub fn mds(ctx: &Context) -> CliResult<()> {
    let cfg: MdsConfig = config::load(ctx.config)?;
    let dm = io::read_distance_matrix(&config::resolve(ctx.config, &cfg.input))?;
    let coords = mds_embed(&dm, cfg.dims).map_err(|e| CliError::Input(e.to_string()))?;
    io::write_coordinates(&ctx.path("coords.csv"), &dm.labels, &coords)?;
    ctx.note(format!("embedded {} points in {} dimensions", dm.len(), cfg.dims));
    Ok(())
}
