mod common;

use common::{gaussian, rng};
use dynsim_core::align::{align, retract, Method, OptimizerConfig, Retraction};
use dynsim_core::linalg::{haar_orthogonal, ortho_residual, skew};
use dynsim_core::pipeline::{pairwise_distances, ComparisonConfig};
use dynsim_core::rank::svht_rank_of;
use dynsim_core::systems::{
    add_noise, lorenz_generate, two_system_generate, LorenzSpec, NoiseKind, TwoSystem, TwoSystemSpec,
};
use dynsim_core::{compare, EmbeddingParams, TimeSeries};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn low_rank_plus_noise(m: usize, n: usize, r: usize, seed: u64) -> DMatrix<f64> {
    let mut g = rng(seed);
    let u = haar_orthogonal(m, &mut g).columns(0, r).into_owned();
    let v = haar_orthogonal(n, &mut g).columns(0, r).into_owned();
    let s = DMatrix::from_fn(r, r, |i, j| if i == j { 100.0 * (r - i) as f64 } else { 0.0 });
    u * s * v.transpose() + gaussian(m, n, &mut g)
}

fn noisy_lorenz(steps: usize, seed: u64) -> TimeSeries {
    let clean = lorenz_generate(&LorenzSpec {
        steps,
        ..LorenzSpec::default()
    })
    .unwrap();
    add_noise(&clean, NoiseKind::Isotropic, 0.05, seed).unwrap().series
}

fn fixed_embedding(mu: usize) -> ComparisonConfig {
    ComparisonConfig {
        embedding: Some(EmbeddingParams {
            delay_tau: 1,
            num_delays_mu: mu,
        }),
        ..ComparisonConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn svht_recovers_planted_rank(r in 1usize..6, seed in 0u64..1000) {
        let est = svht_rank_of(&low_rank_plus_noise(80, 50, r, seed)).unwrap();
        prop_assert_eq!(est.rank, r);
    }

    #[test]
    fn svht_rank_ignores_scale_and_transpose(r in 1usize..6, scale in 1e-3f64..1e3, seed in 0u64..1000) {
        let m = low_rank_plus_noise(60, 40, r, seed);
        let base = svht_rank_of(&m).unwrap().rank;
        prop_assert_eq!(svht_rank_of(&(&m * scale)).unwrap().rank, base);
        prop_assert_eq!(svht_rank_of(&m.transpose()).unwrap().rank, base);
    }

    #[test]
    fn retractions_agree_with_the_step_to_first_order(n in 2usize..7, seed in 0u64..1000) {
        let mut g = rng(seed);
        let c = haar_orthogonal(n, &mut g);
        let xi = skew(&gaussian(n, n, &mut g)) * &c;
        let scale = xi.norm_squared();
        for kind in [Retraction::Polar, Retraction::Qr, Retraction::Cayley] {
            for t in [1e-2, 1e-3] {
                let r = retract(&c, &(&xi * t), kind).unwrap();
                prop_assert!(ortho_residual(&r) < 1e-10);
                let err = (&r - (&c + &xi * t)).norm();
                prop_assert!(err <= 2.0 * t * t * scale, "{kind:?} t={t}: {err:e}");
            }
        }
    }

    #[test]
    fn aligned_transforms_are_orthogonal(n in 2usize..6, seed in 0u64..1000) {
        let mut g = rng(seed);
        let a = gaussian(n, n, &mut g);
        let b = gaussian(n, n, &mut g);
        for method in Method::ALL {
            let r = align(&a, &b, &OptimizerConfig { seed, ..OptimizerConfig::with_method(method) }).unwrap();
            prop_assert!(r.ortho_residual < 1e-10);
            let direct = (&a - &r.transform_c * &b * r.transform_c.transpose()).norm();
            prop_assert!((direct - r.distance_euclidean).abs() < 1e-9);
            prop_assert!((0.0..=std::f64::consts::PI).contains(&r.distance_angular));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn distance_ignores_channel_order(seed in 0u64..1000, perm in Just(vec![0usize, 1, 2]).prop_shuffle()) {
        let x = noisy_lorenz(1500, seed);
        let y = x.permute_channels(&perm).unwrap();
        let r = compare(&x, &y, &fixed_embedding(8)).unwrap();
        prop_assert!(r.alignment.distance_euclidean < 1e-6, "{}", r.alignment.distance_euclidean);
    }
}

#[test]
fn self_comparison_vanishes_for_generated_systems() {
    let lorenz = noisy_lorenz(2000, 3);
    let a = two_system_generate(TwoSystem::A, &TwoSystemSpec::default()).unwrap();
    let b = two_system_generate(TwoSystem::B, &TwoSystemSpec::default()).unwrap();
    for (name, series, mu) in [("lorenz", &lorenz, 8), ("A", &a, 5), ("B", &b, 5)] {
        for method in Method::ALL {
            let config = ComparisonConfig {
                optimizer: OptimizerConfig::with_method(method),
                ..fixed_embedding(mu)
            };
            let r = compare(series, series, &config).unwrap();
            assert!(
                r.alignment.distance_euclidean < 1e-6,
                "{name} {method}: {}",
                r.alignment.distance_euclidean
            );
        }
    }
}

#[test]
fn pairwise_matrix_is_symmetric_with_zero_diagonal() {
    let runs: Vec<TimeSeries> = (0..3).map(|s| noisy_lorenz(1200, s)).collect();
    let dm = pairwise_distances(&runs, None, &fixed_embedding(6)).unwrap();
    assert!(dm.is_complete());
    for i in 0..3 {
        assert_eq!(dm.values[(i, i)], 0.0);
        for j in 0..3 {
            assert_eq!(dm.values[(i, j)], dm.values[(j, i)]);
            assert!(dm.values[(i, j)] >= 0.0);
        }
    }
}
