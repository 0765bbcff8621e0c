//! Deterministic inputs shared by the benchmarks.

use dynsim_core::systems::{add_noise, lorenz_generate, spd_pair_generate, LorenzSpec, NoiseKind, SpdPairSpec};
use dynsim_core::TimeSeries;
use nalgebra::DMatrix;

/// Orthogonally similar SPD matrices of size `n`.
pub fn spd_pair(n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let pair = spd_pair_generate(&SpdPairSpec {
        size: n,
        seed,
        ..SpdPairSpec::default()
    })
    .expect("valid SPD spec");
    (pair.a1, pair.a2)
}

/// Two independently noised copies of a Lorenz trajectory with `steps` samples.
pub fn lorenz_pair(steps: usize) -> (TimeSeries, TimeSeries) {
    let clean = lorenz_generate(&LorenzSpec {
        steps,
        ..LorenzSpec::default()
    })
    .expect("valid Lorenz spec");
    let noisy = |seed| {
        add_noise(&clean, NoiseKind::Isotropic, 0.1, seed)
            .expect("valid noise")
            .series
    };
    (noisy(1), noisy(2))
}
