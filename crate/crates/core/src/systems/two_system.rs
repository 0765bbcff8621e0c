//! Two planar systems whose linearisations at the origin share the spectrum
//! `{−α, −β}` but not the eigenvectors.
//!
//! A: `ẋ = −αx + εxy`, `ẏ = −βy − εx²`.
//! B: `ẋ = −μx + κy − εx²`, `ẏ = κx − μy − εy²` with `μ = (α+β)/2`,
//! `κ = (β−α)/2`.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use super::{check_dt_steps, integrate};
use crate::embedding::TimeSeries;
use crate::error::{Error, Result};

const BLOWUP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwoSystem {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoSystemSpec {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub x0: [f64; 2],
    pub dt: f64,
    pub steps: usize,
}

impl Default for TwoSystemSpec {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 2.0,
            epsilon: 0.5,
            x0: [0.5, 0.5],
            dt: 0.01,
            steps: 500,
        }
    }
}

impl TwoSystemSpec {
    pub fn mu(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    pub fn kappa(&self) -> f64 {
        0.5 * (self.beta - self.alpha)
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha and beta must be positive, got {} and {}",
                self.alpha, self.beta
            )));
        }
        if !self.epsilon.is_finite() || self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        check_dt_steps(self.dt, self.steps)
    }
}

fn vector_field(which: TwoSystem, spec: &TwoSystemSpec, s: &[f64; 2]) -> [f64; 2] {
    let [x, y] = *s;
    let e = spec.epsilon;
    match which {
        TwoSystem::A => [-spec.alpha * x + e * x * y, -spec.beta * y - e * x * x],
        TwoSystem::B => {
            let (mu, k) = (spec.mu(), spec.kappa());
            [-mu * x + k * y - e * x * x, k * x - mu * y - e * y * y]
        }
    }
}

/// Jacobian of the vector field at the origin.
pub fn two_system_jacobian(which: TwoSystem, spec: &TwoSystemSpec) -> Matrix2<f64> {
    match which {
        TwoSystem::A => Matrix2::new(-spec.alpha, 0.0, 0.0, -spec.beta),
        TwoSystem::B => {
            let (mu, k) = (spec.mu(), spec.kappa());
            Matrix2::new(-mu, k, k, -mu)
        }
    }
}

/// RK4 trajectory from `spec.x0` (`steps x 2`).
pub fn two_system_generate(which: TwoSystem, spec: &TwoSystemSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let data = integrate(|s| vector_field(which, spec, s), spec.x0, spec.dt, spec.steps, BLOWUP)?;
    TimeSeries::new(data, spec.dt)
}
