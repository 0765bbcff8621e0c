use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{self, Objective};
use super::retraction::retract_or_polar;
use super::{distance_angular, stop_iteration, AlignmentResult, Group, Method, OptimizerConfig};
use crate::error::{Error, Result};
use crate::linalg;

/// Objective values above this abort the run.
const DIVERGENCE_LOSS: f64 = 1e12;
/// Step-size halvings tried before an iteration is declared stationary.
const MAX_HALVINGS: usize = 50;

/// Solves the alignment with the method named in `config`.
pub fn align(a: &DMatrix<f64>, b: &DMatrix<f64>, config: &OptimizerConfig) -> Result<AlignmentResult> {
    run(a, b, config, config.method)
}

pub fn optimize_baseline_projected(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    config: &OptimizerConfig,
) -> Result<AlignmentResult> {
    run(a, b, config, Method::BaselineProjected)
}

pub fn optimize_ro(a: &DMatrix<f64>, b: &DMatrix<f64>, config: &OptimizerConfig) -> Result<AlignmentResult> {
    run(a, b, config, Method::RegularizedRo)
}

pub fn optimize_rim(a: &DMatrix<f64>, b: &DMatrix<f64>, config: &OptimizerConfig) -> Result<AlignmentResult> {
    run(a, b, config, Method::RiemannianRim)
}

pub fn optimize_landing(a: &DMatrix<f64>, b: &DMatrix<f64>, config: &OptimizerConfig) -> Result<AlignmentResult> {
    run(a, b, config, Method::LandingLand)
}

/// One landing update `C − η (skew(G Cᵀ) C + λ_L (C Cᵀ − I) C)` without
/// backtracking.
pub fn landing_step(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    learning_rate: f64,
    landing_weight: f64,
) -> Result<DMatrix<f64>> {
    let g = loss::euclidean_gradient(a, b, c)?;
    Ok(c - loss::landing_field(&g, c, landing_weight) * learning_rate)
}

struct Run {
    c: DMatrix<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    max_residual: f64,
}

/// Search direction at `c` and the norm used for the stopping test.
fn direction(obj: &Objective, cfg: &OptimizerConfig, method: Method, c: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let (_, g) = obj.loss_and_grad(c);
    match method {
        Method::BaselineProjected => {
            let norm = loss::riemannian_gradient(&g, c).norm();
            (g, norm)
        }
        Method::RegularizedRo => {
            let d = g + loss::ortho_penalty_grad(c) * cfg.ortho_penalty;
            let norm = d.norm();
            (d, norm)
        }
        Method::RiemannianRim => {
            let d = loss::riemannian_gradient(&g, c);
            let norm = d.norm();
            (d, norm)
        }
        Method::LandingLand => {
            let d = loss::landing_field(&g, c, cfg.landing_weight);
            let norm = d.norm();
            (d, norm)
        }
    }
}

fn step(cfg: &OptimizerConfig, method: Method, c: &DMatrix<f64>, dir: &DMatrix<f64>, eta: f64) -> Result<DMatrix<f64>> {
    match method {
        Method::BaselineProjected => linalg::polar_factor(&(c - dir * eta), false),
        Method::RegularizedRo | Method::LandingLand => Ok(c - dir * eta),
        Method::RiemannianRim => retract_or_polar(c, &(dir * -eta), cfg.retraction),
    }
}

/// `(merit used for backtracking, value recorded in the trace)`.
fn evaluate(obj: &Objective, cfg: &OptimizerConfig, method: Method, c: &DMatrix<f64>) -> (f64, f64) {
    let f = obj.loss(c);
    match method {
        Method::BaselineProjected | Method::RiemannianRim => (f, f),
        Method::RegularizedRo => {
            let v = f + cfg.ortho_penalty * loss::ortho_penalty(c);
            (v, v)
        }
        Method::LandingLand => (f + cfg.landing_weight * loss::landing_potential(c), f),
    }
}

fn single_run(obj: &Objective, cfg: &OptimizerConfig, method: Method, c0: DMatrix<f64>) -> Result<Run> {
    let mut c = c0;
    let mut eta = cfg.learning_rate;
    let (mut merit, value) = evaluate(obj, cfg, method, &c);
    let mut trace = vec![value];
    let mut max_residual = linalg::ortho_residual(&c);
    let mut converged = false;
    let mut iterations = 0;

    let diverged = |iteration: usize, loss: f64, trace: &[f64]| Error::Divergence {
        iteration,
        loss,
        trace: trace.to_vec(),
    };
    if !value.is_finite() || value > DIVERGENCE_LOSS {
        return Err(diverged(0, value, &trace));
    }

    while iterations < cfg.max_iters {
        let (dir, norm) = direction(obj, cfg, method, &c);
        if norm < cfg.grad_tolerance {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = step(cfg, method, &c, &dir, eta)?;
            let (m, v) = evaluate(obj, cfg, method, &cand);
            if !cfg.backtracking || m <= merit {
                accepted = Some((cand, m, v));
                break;
            }
            eta *= 0.5;
        }
        let Some((cand, m, v)) = accepted else {
            // No step size decreases the objective: stationary to precision.
            converged = true;
            break;
        };
        c = cand;
        merit = m;
        eta *= cfg.step_growth;
        trace.push(v);
        iterations += 1;
        max_residual = max_residual.max(linalg::ortho_residual(&c));
        if !v.is_finite() || v > DIVERGENCE_LOSS {
            return Err(diverged(iterations, v, &trace));
        }
    }
    Ok(Run {
        c,
        trace,
        iterations,
        converged,
        max_residual,
    })
}

/// Starting point of restart `k`: the identity first, then Haar-random
/// orthogonal matrices. For O(n) the determinant sign alternates so that both
/// components of the group are visited.
fn initial_point(n: usize, k: usize, group: Group, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    let mut q = linalg::haar_orthogonal(n, rng);
    let want_negative = group == Group::Orthogonal && k % 2 == 1;
    if (q.determinant() < 0.0) != want_negative {
        q.column_mut(n - 1).neg_mut();
    }
    q
}

fn run(a: &DMatrix<f64>, b: &DMatrix<f64>, cfg: &OptimizerConfig, method: Method) -> Result<AlignmentResult> {
    loss::check_square_pair(a, b)?;
    cfg.validate()?;
    let start = Instant::now();
    let obj = Objective::new(a, b);
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut best: Option<(f64, DMatrix<f64>, f64, Run)> = None;
    for k in 0..cfg.restarts {
        let c0 = initial_point(n, k, cfg.group, &mut rng);
        let run = single_run(&obj, cfg, method, c0)?;
        let before = linalg::ortho_residual(&run.c);
        let projected = linalg::polar_factor(&run.c, cfg.group == Group::Special)?;
        let f = obj.loss(&projected);
        if best.as_ref().is_none_or(|(bf, ..)| f < *bf) {
            best = Some((f, projected, before, run));
        }
    }
    let (f, c, before, run) = best.expect("at least one restart");
    let distance_angular = distance_angular(a, b, &c)?;
    let wall_time = start.elapsed().as_secs_f64();
    Ok(AlignmentResult {
        method,
        distance_euclidean: f.sqrt(),
        distance_angular,
        ortho_residual: linalg::ortho_residual(&c),
        transform_c: c,
        stop_iteration: stop_iteration(&run.trace),
        loss_trace: run.trace,
        residual_before_projection: before,
        max_iterate_residual: run.max_residual,
        iterations_run: run.iterations,
        converged: run.converged,
        wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_inputs_stay_at_identity() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, -0.3, 0.5, 0.1, 0.0, 0.4, 0.9]);
        for m in Method::ALL {
            let res = align(&a, &a, &OptimizerConfig::with_method(m)).unwrap();
            assert!(res.distance_euclidean < 1e-12, "{m}");
            assert_eq!(res.iterations_run, 0);
            assert!((&res.transform_c - DMatrix::<f64>::identity(3, 3)).amax() < 1e-12);
        }
    }

    #[test]
    fn divergence_without_backtracking() {
        let a = DMatrix::from_row_slice(2, 2, &[50.0, 3.0, 3.0, -20.0]);
        let b = DMatrix::from_row_slice(2, 2, &[-20.0, 1.0, 1.0, 50.0]);
        let cfg = OptimizerConfig {
            method: Method::RegularizedRo,
            learning_rate: 10.0,
            backtracking: false,
            ..OptimizerConfig::default()
        };
        match align(&a, &b, &cfg) {
            Err(Error::Divergence { trace, .. }) => assert!(!trace.is_empty()),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn restarts_alternate_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for k in 1..6 {
            let q = initial_point(4, k, Group::Orthogonal, &mut rng);
            let det = q.determinant();
            assert!(if k % 2 == 1 { det < 0.0 } else { det > 0.0 });
            let s = initial_point(4, k, Group::Special, &mut rng);
            assert!(s.determinant() > 0.0);
        }
    }
}
