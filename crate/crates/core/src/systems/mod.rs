//! Seeded generators for the benchmark systems and observation models.

mod lorenz;
mod noise;
mod ring;
mod spd;
mod two_system;

pub use lorenz::{lorenz_derivative, lorenz_generate, LorenzSpec};
pub use noise::{
    add_noise, noise_scale_for_snr, random_projection, random_projection_orthogonal, NoiseKind, NoisySeries,
};
pub use ring::{
    bump_center, ring_attractor_simulate, ring_to_line_ablate, sample_network_size, sigmoid_deform, RingAttractorSpec,
};
pub use spd::{spd_pair_generate, SpdPair, SpdPairSpec};
pub use two_system::{two_system_generate, two_system_jacobian, TwoSystem, TwoSystemSpec};

/// One classical fourth-order Runge–Kutta step of `ẋ = f(x)`.
pub(crate) fn rk4_step<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], x: &[f64; N], h: f64) -> [f64; N] {
    let add = |a: &[f64; N], k: &[f64; N], s: f64| -> [f64; N] {
        let mut out = *a;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = f(x);
    let k2 = f(&add(x, &k1, h / 2.0));
    let k3 = f(&add(x, &k2, h / 2.0));
    let k4 = f(&add(x, &k3, h));
    let mut out = *x;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `steps - 1` RK4 steps from `x0`; row 0 is `x0`. Fails when a
/// state component exceeds `bound` in magnitude or stops being finite.
pub(crate) fn integrate<const N: usize>(
    f: impl Fn(&[f64; N]) -> [f64; N],
    x0: [f64; N],
    dt: f64,
    steps: usize,
    bound: f64,
) -> crate::Result<nalgebra::DMatrix<f64>> {
    let mut out = nalgebra::DMatrix::zeros(steps, N);
    let mut x = x0;
    for t in 0..steps {
        if t > 0 {
            x = rk4_step(&f, &x, dt);
        }
        if x.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(crate::Error::NonFiniteBlowup { step: t });
        }
        for i in 0..N {
            out[(t, i)] = x[i];
        }
    }
    Ok(out)
}

pub(crate) fn check_dt_steps(dt: f64, steps: usize) -> crate::Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(crate::Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    if steps < 2 {
        return Err(crate::Error::InvalidArgument(format!(
            "steps must be at least 2, got {steps}"
        )));
    }
    Ok(())
}
