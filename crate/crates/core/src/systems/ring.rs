//! Two-population ring attractor network.
//!
//! Each population has `n` neurons with preferred angles `θ_i = 2πi/n`. The
//! connectivity from a neuron of population `P` is
//! `(J₀ + J₁ cos(θ_i − θ_j − σ_P δ)) / n` with `σ_L = −1`, `σ_R = +1`, so the
//! recurrent input factorises through the sums `Σφ`, `Σ cos θ φ`, `Σ sin θ φ`
//! of each population and one step costs `O(n)`. A drive `±γ b` that favours
//! one population moves the bump around the ring.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding::TimeSeries;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingAttractorSpec {
    pub n_neurons: usize,
    pub tau_membrane: f64,
    /// Resting input `A`.
    pub baseline_input: f64,
    /// Constant drive `b`.
    pub drive: f64,
    /// Drive coupling `γ`.
    pub coupling: f64,
    /// Standard deviation of the dynamic noise per unit time.
    pub noise_scale: f64,
    pub j0: f64,
    pub j1: f64,
    /// Connectivity offset `δ` in radians.
    pub offset: f64,
    /// Optional sigmoid deformation applied to the output.
    pub bump_beta: Option<f64>,
    /// Number of contiguous silenced neurons `c` (per population).
    pub ablate_count: usize,
    /// Interaction length `ℓ`; `None` means `n`.
    pub length_scale: Option<f64>,
    pub dt: f64,
    /// Output rows.
    pub samples: usize,
    /// Integration steps between recorded samples.
    pub record_every: usize,
    /// Integration steps discarded before recording.
    pub burn_in: usize,
    /// Angle at which the initial bump is seeded.
    pub initial_angle: f64,
}

impl Default for RingAttractorSpec {
    fn default() -> Self {
        Self {
            n_neurons: 150,
            tau_membrane: 0.1,
            baseline_input: 1.0,
            drive: 1.0,
            coupling: 0.05,
            noise_scale: 0.02,
            j0: -1.2,
            j1: 1.1,
            offset: 0.3,
            bump_beta: None,
            ablate_count: 0,
            length_scale: None,
            dt: 0.01,
            samples: 1000,
            record_every: 50,
            burn_in: 500,
            initial_angle: 0.0,
        }
    }
}

impl RingAttractorSpec {
    pub fn length_scale(&self) -> f64 {
        self.length_scale.unwrap_or(self.n_neurons as f64)
    }

    /// Ring-to-line parameter `α = 1 − c / ℓ`.
    pub fn alpha(&self) -> f64 {
        1.0 - self.ablate_count as f64 / self.length_scale()
    }

    /// Ablation count giving `α` as closely as possible.
    pub fn ablate_count_for_alpha(&self, alpha: f64) -> usize {
        ((1.0 - alpha) * self.length_scale()).round().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_neurons < 3 {
            return bad(format!("n_neurons must be at least 3, got {}", self.n_neurons));
        }
        if self.ablate_count >= self.n_neurons {
            return bad(format!(
                "ablate_count {} must be below n_neurons {}",
                self.ablate_count, self.n_neurons
            ));
        }
        for (name, v) in [("tau_membrane", self.tau_membrane), ("dt", self.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.noise_scale >= 0.0) {
            return bad(format!("noise_scale must be non-negative, got {}", self.noise_scale));
        }
        if let Some(b) = self.bump_beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("bump_beta must be positive, got {b}"));
            }
        }
        if !(self.length_scale() > 0.0) {
            return bad("length_scale must be positive".into());
        }
        if self.samples < 2 || self.record_every == 0 {
            return bad("samples must be at least 2 and record_every positive".into());
        }
        Ok(())
    }
}

/// Network size drawn uniformly from `100..=250`.
pub fn sample_network_size<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(100..=250)
}

/// Simulates the network and returns the mean synaptic activation of the two
/// populations per preferred angle (`samples x n`), optionally passed through
/// the sigmoid deformation.
pub fn ring_attractor_simulate(spec: &RingAttractorSpec, seed: u64) -> Result<TimeSeries> {
    spec.validate()?;
    let n = spec.n_neurons;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = theta.iter().map(|t| (t.cos(), t.sin())).unzip();
    // Silenced neurons sit at the end of the ring.
    let active: Vec<bool> = (0..n).map(|i| i < n - spec.ablate_count).collect();
    let delta = spec.offset;
    let signs = [-1.0, 1.0];
    // cos/sin of θ_i − σ_P δ for each population.
    let shifted: Vec<Vec<(f64, f64)>> = signs
        .iter()
        .map(|s| {
            theta
                .iter()
                .map(|t| ((t - s * delta).cos(), (t - s * delta).sin()))
                .collect()
        })
        .collect();

    let mut s: Vec<Vec<f64>> = (0..2)
        .map(|_| {
            (0..n)
                .map(|i| {
                    if !active[i] {
                        return 0.0;
                    }
                    0.5 * (theta[i] - spec.initial_angle).cos().max(0.0) + 0.01 * rng.random::<f64>()
                })
                .collect()
        })
        .collect();

    let inv_n = 1.0 / n as f64;
    let rate = spec.dt / spec.tau_membrane;
    let noise_sd = spec.noise_scale * spec.dt.sqrt();
    let total_steps = spec.burn_in + spec.samples * spec.record_every;
    let mut out = DMatrix::zeros(spec.samples, n);
    let mut row = 0;
    let mut input = vec![0.0; n];

    for step in 1..=total_steps {
        let mut mass = 0.0;
        let mut cs = [0.0; 2];
        let mut ss = [0.0; 2];
        for p in 0..2 {
            for i in 0..n {
                let phi = s[p][i].max(0.0);
                mass += phi;
                cs[p] += cos_t[i] * phi;
                ss[p] += sin_t[i] * phi;
            }
        }
        for i in 0..n {
            let mut acc = spec.j0 * mass;
            for p in 0..2 {
                let (c, sn) = shifted[p][i];
                acc += spec.j1 * (c * cs[p] + sn * ss[p]);
            }
            input[i] = acc * inv_n + spec.baseline_input;
        }
        for p in 0..2 {
            let drive = signs[p] * spec.coupling * spec.drive;
            for i in 0..n {
                if !active[i] {
                    continue;
                }
                let xi: f64 = StandardNormal.sample(&mut rng);
                s[p][i] += rate * (-s[p][i] + input[i] + drive) + noise_sd * xi;
            }
        }
        if step > spec.burn_in && (step - spec.burn_in).is_multiple_of(spec.record_every) {
            for i in 0..n {
                out[(row, i)] = 0.5 * (s[0][i] + s[1][i]);
            }
            row += 1;
        }
        if step % 1024 == 0 && s.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteBlowup { step });
        }
    }

    let last = out.row(spec.samples - 1);
    let rates: Vec<f64> = (0..n).filter(|&i| active[i]).map(|i| last[i].max(0.0)).collect();
    let hi = rates.iter().copied().fold(f64::MIN, f64::max);
    let lo = rates.iter().copied().fold(f64::MAX, f64::min);
    if !hi.is_finite() || hi - lo <= 1e-6 * (1.0 + hi.abs()) {
        return Err(Error::NoBump);
    }

    let series = TimeSeries::new(out, spec.dt * spec.record_every as f64)?;
    match spec.bump_beta {
        Some(beta) => sigmoid_deform(&series, beta),
        None => Ok(series),
    }
}

/// Simulates the network with `spec.ablate_count` silenced neurons and
/// returns the trajectory together with `α = 1 − c / ℓ`.
pub fn ring_to_line_ablate(spec: &RingAttractorSpec, seed: u64) -> Result<(TimeSeries, f64)> {
    let series = ring_attractor_simulate(spec, seed)?;
    Ok((series, spec.alpha()))
}

/// Elementwise `1 / (1 + exp(−β s))`.
pub fn sigmoid_deform(series: &TimeSeries, beta: f64) -> Result<TimeSeries> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    series.map(|s| 1.0 / (1.0 + (-beta * s).exp()))
}

/// Circular centre of mass of the rectified activity in one sample, in
/// `(−π, π]`.
pub fn bump_center(activity: &DVector<f64>) -> f64 {
    let n = activity.len();
    let (mut c, mut s) = (0.0, 0.0);
    for (i, v) in activity.iter().enumerate() {
        let w = v.max(0.0);
        let t = TAU * i as f64 / n as f64;
        c += w * t.cos();
        s += w * t.sin();
    }
    s.atan2(c)
}
