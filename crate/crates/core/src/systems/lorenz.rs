use serde::{Deserialize, Serialize};

use super::{check_dt_steps, integrate};
use crate::embedding::TimeSeries;
use crate::error::Result;

/// States beyond this magnitude count as a blow-up.
const BLOWUP: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzSpec {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub x0: [f64; 3],
    pub dt: f64,
    /// Number of output samples, including the initial state.
    pub steps: usize,
}

impl Default for LorenzSpec {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            x0: [0.0, 1.0, 1.05],
            dt: 0.01,
            steps: 10_000,
        }
    }
}

pub fn lorenz_derivative(spec: &LorenzSpec, s: &[f64; 3]) -> [f64; 3] {
    let [x, y, z] = *s;
    [spec.sigma * (y - x), x * (spec.rho - z) - y, x * y - spec.beta * z]
}

/// RK4 trajectory, one row per sample (`steps x 3`).
pub fn lorenz_generate(spec: &LorenzSpec) -> Result<TimeSeries> {
    check_dt_steps(spec.dt, spec.steps)?;
    let data = integrate(|s| lorenz_derivative(spec, s), spec.x0, spec.dt, spec.steps, BLOWUP)?;
    TimeSeries::new(data, spec.dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_at_default_start() {
        let spec = LorenzSpec::default();
        let d = lorenz_derivative(&spec, &spec.x0);
        assert!((d[0] - 10.0).abs() < 1e-12);
        assert!((d[1] + 1.0).abs() < 1e-12);
        assert!((d[2] + 2.8).abs() < 1e-12);
    }

    #[test]
    fn subcritical_decays_to_origin() {
        let spec = LorenzSpec {
            rho: 0.5,
            steps: 20_000,
            ..LorenzSpec::default()
        };
        let s = lorenz_generate(&spec).unwrap();
        assert!(s.sample(s.len() - 1).norm() < 1e-3);
    }

    #[test]
    fn default_stays_on_attractor() {
        let s = lorenz_generate(&LorenzSpec::default()).unwrap();
        assert_eq!(s.data().shape(), (10_000, 3));
        for row in s.data().row_iter() {
            assert!(row[0].abs() < 30.0 && row[1].abs() < 30.0 && row[2] < 60.0);
        }
    }

    #[test]
    fn rejects_bad_dt() {
        let spec = LorenzSpec {
            dt: 0.0,
            ..LorenzSpec::default()
        };
        assert!(lorenz_generate(&spec).is_err());
    }
}
