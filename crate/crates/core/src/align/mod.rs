//! Orthogonal alignment of linear operators, `min_{C ∈ O(n)} ‖A − C B Cᵀ‖_F`,
//! and the resulting Euclidean and angular dissimilarities.

mod loss;
mod optimize;
mod retraction;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};

pub use loss::{euclidean_gradient, landing_field, loss_and_gradient, riemannian_gradient};
pub use optimize::{align, landing_step, optimize_baseline_projected, optimize_landing, optimize_rim, optimize_ro};
pub use retraction::{retract, Retraction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Euclidean step followed by projection onto O(n) every iteration.
    #[serde(rename = "baseline", alias = "baseline_projected")]
    BaselineProjected,
    /// Gradient descent on the loss plus an orthogonality penalty.
    #[serde(rename = "ro", alias = "regularized_ro")]
    RegularizedRo,
    /// Riemannian gradient descent with a retraction.
    #[serde(rename = "rim", alias = "riemannian_rim")]
    RiemannianRim,
    /// Retraction-free landing iterations.
    #[serde(rename = "landing", alias = "landing_land")]
    LandingLand,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::BaselineProjected,
        Method::RegularizedRo,
        Method::RiemannianRim,
        Method::LandingLand,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::BaselineProjected => "baseline",
            Method::RegularizedRo => "ro",
            Method::RiemannianRim => "rim",
            Method::LandingLand => "landing",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" | "baseline_projected" => Ok(Method::BaselineProjected),
            "ro" | "regularized_ro" => Ok(Method::RegularizedRo),
            "rim" | "riemannian_rim" => Ok(Method::RiemannianRim),
            "landing" | "landing_land" => Ok(Method::LandingLand),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

/// Orthogonal group the final transform is projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    #[default]
    Orthogonal,
    Special,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub method: Method,
    pub learning_rate: f64,
    /// Orthogonality penalty weight (regularised method only).
    pub ortho_penalty: f64,
    /// Weight of the pull towards O(n) (landing only).
    pub landing_weight: f64,
    /// Retraction used by the Riemannian method.
    pub retraction: Retraction,
    pub max_iters: usize,
    pub grad_tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub group: Group,
    /// Halve the step size whenever a step would increase the objective.
    pub backtracking: bool,
    /// Factor applied to the step size after every accepted step (1 keeps it
    /// fixed apart from backtracking).
    pub step_growth: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::LandingLand,
            learning_rate: 0.01,
            ortho_penalty: 1.0,
            landing_weight: 1.0,
            retraction: Retraction::Polar,
            max_iters: 2000,
            grad_tolerance: 1e-8,
            restarts: 1,
            seed: 0,
            group: Group::Orthogonal,
            backtracking: true,
            step_growth: 1.2,
        }
    }
}

impl OptimizerConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.ortho_penalty >= 0.0 && self.ortho_penalty.is_finite()) {
            return bad(format!(
                "ortho_penalty must be non-negative, got {}",
                self.ortho_penalty
            ));
        }
        if !(self.landing_weight > 0.0 && self.landing_weight.is_finite()) {
            return bad(format!("landing_weight must be positive, got {}", self.landing_weight));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.grad_tolerance > 0.0) {
            return bad(format!("grad_tolerance must be positive, got {}", self.grad_tolerance));
        }
        if !(self.step_growth >= 1.0 && self.step_growth.is_finite()) {
            return bad(format!("step_growth must be at least 1, got {}", self.step_growth));
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub method: Method,
    pub transform_c: DMatrix<f64>,
    pub distance_euclidean: f64,
    pub distance_angular: f64,
    /// Objective value before the first step and after every accepted step.
    pub loss_trace: Vec<f64>,
    /// `‖CᵀC − I‖_F` of the final (projected) transform.
    pub ortho_residual: f64,
    /// Residual of the last iterate before the final projection.
    pub residual_before_projection: f64,
    /// Largest residual over all iterates of the selected run.
    pub max_iterate_residual: f64,
    pub iterations_run: usize,
    pub stop_iteration: usize,
    /// Whether the direction norm fell below the tolerance (or no step could
    /// decrease the objective) before `max_iters`.
    pub converged: bool,
    /// Seconds, covering all restarts and the final projection.
    pub wall_time: f64,
}

/// `‖A − C B Cᵀ‖_F`.
pub fn distance_euclidean(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<f64> {
    loss::check_square_pair(a, b)?;
    if c.shape() != a.shape() {
        return Err(shape_mismatch(a.shape(), c.shape()));
    }
    Ok((a - c * b * c.transpose()).norm())
}

/// `arccos(⟨A, C B Cᵀ⟩ / (‖A‖ ‖B‖))`, clamped into `[0, π]`.
pub fn distance_angular(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<f64> {
    loss::check_square_pair(a, b)?;
    if c.shape() != a.shape() {
        return Err(shape_mismatch(a.shape(), c.shape()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let inner = a.dot(&(c * b * c.transpose()));
    Ok((inner / (na * nb)).clamp(-1.0, 1.0).acos())
}

/// Distances below this are reported as zero.
pub const ZERO_THRESHOLD: f64 = 1e-3;

pub fn is_zero_distance(d: f64) -> bool {
    d < ZERO_THRESHOLD
}

/// Zero-pads both operators to the larger size as `[A 0; 0 0]`.
pub fn pad_to_common_size(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows().max(b.nrows());
    let pad = |m: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(n, n);
        out.view_mut((0, 0), m.shape()).copy_from(m);
        out
    };
    (pad(a), pad(b))
}

/// Flattening threshold on successive loss differences.
pub const FLAT_DELTA: f64 = 0.005;

/// First index `k` with `|trace[k] − trace[k−1]| < 0.005`, otherwise the index
/// with the smallest such difference. Traces shorter than two entries give 0.
pub fn stop_iteration(trace: &[f64]) -> usize {
    if trace.len() < 2 {
        return 0;
    }
    let deltas = trace.windows(2).map(|w| (w[1] - w[0]).abs());
    let mut best = (1, f64::INFINITY);
    for (i, d) in deltas.enumerate() {
        if d < FLAT_DELTA {
            return i + 1;
        }
        if d < best.1 {
            best = (i + 1, d);
        }
    }
    best.0
}
