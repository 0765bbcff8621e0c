//! Versioned TOML configuration for every command.

use std::path::{Path, PathBuf};

use dynsim_core::pipeline::{ComparisonConfig, ComparisonMethod, RingExperiment, TwoSystemBatch};
use dynsim_core::systems::{LorenzSpec, NoiseKind, RingAttractorSpec, TwoSystem, TwoSystemSpec};
use dynsim_core::{Method, OptimizerConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u32>,
}

/// Reads `path`, checks the schema version and parses the rest.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let probe: VersionProbe = toml::from_str(&text).map_err(|e| CliError::io(path, e))?;
    match probe.version {
        Some(CONFIG_VERSION) => {}
        Some(v) => {
            return Err(CliError::Input(format!(
                "{}: unsupported config version {v} (expected {CONFIG_VERSION})",
                path.display()
            )))
        }
        None => return Err(CliError::Input(format!("{}: missing `version` field", path.display()))),
    }
    toml::from_str(&text).map_err(|e| CliError::io(path, e))
}

/// Resolves `p` against the directory holding the config file.
pub fn resolve(config_path: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config_path.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub version: u32,
    pub generator: Generator,
    /// Optional random projection to this many channels.
    #[serde(default)]
    pub projection: Option<usize>,
    #[serde(default)]
    pub noise: Option<NoiseConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    Lorenz(LorenzSpec),
    Ring(RingAttractorSpec),
    TwoSystem(TwoSystemGenerator),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoSystemGenerator {
    pub system: TwoSystem,
    #[serde(default)]
    pub spec: TwoSystemSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    /// Target signal-to-noise ratio; the scale is derived from it.
    #[serde(default)]
    pub snr: Option<f64>,
    /// Explicit noise scale, used when `snr` is absent.
    #[serde(default)]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub version: u32,
    pub x: PathBuf,
    pub y: PathBuf,
    #[serde(default)]
    pub comparison: ComparisonConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub version: u32,
    pub sweep: Sweep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    /// Sigmoid deformation of the ring network over `grid` (β values).
    Geometric {
        grid: Vec<f64>,
        methods: Vec<ComparisonMethod>,
        #[serde(default)]
        ring: RingExperiment,
    },
    /// Ring-to-line ablation over `grid` (α values).
    Topology {
        grid: Vec<f64>,
        methods: Vec<ComparisonMethod>,
        #[serde(default = "one")]
        reference_alpha: f64,
        #[serde(default)]
        ring: RingExperiment,
    },
    /// Independently noised Lorenz copies over `grid` (SNR values).
    Snr {
        grid: Vec<f64>,
        methods: Vec<ComparisonMethod>,
        #[serde(default = "default_trials")]
        trials: usize,
        noise: NoiseKind,
        #[serde(default)]
        lorenz: LorenzSpec,
        #[serde(default)]
        comparison: ComparisonConfig,
        #[serde(default = "default_kernel_rank")]
        kernel_rank: usize,
    },
    /// Optimizer benchmark on SPD pairs over `grid` (matrix sizes).
    Size {
        grid: Vec<usize>,
        methods: Vec<Method>,
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default)]
        optimizer: OptimizerConfig,
    },
    /// Pairwise distance matrices for a batch of systems A and B.
    TwoSystem {
        methods: Vec<ComparisonMethod>,
        #[serde(default)]
        batch: TwoSystemBatch,
        #[serde(default)]
        comparison: ComparisonConfig,
        #[serde(default = "default_kernel_rank")]
        kernel_rank: usize,
    },
    /// Pairwise distance matrix over trajectory CSV files.
    Pairwise {
        inputs: Vec<PathBuf>,
        #[serde(default)]
        labels: Option<Vec<String>>,
        #[serde(default)]
        comparison: ComparisonConfig,
    },
}

fn one() -> f64 {
    1.0
}

fn default_trials() -> usize {
    5
}

fn default_kernel_rank() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub version: u32,
    pub sizes: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    /// Settings shared by every method.
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

fn all_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdsConfig {
    pub version: u32,
    pub input: PathBuf,
    #[serde(default = "two")]
    pub dims: usize,
}

fn two() -> usize {
    2
}
