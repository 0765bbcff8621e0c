//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    use rand_distr::StandardNormal;
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Minimum of `‖A − C B Cᵀ‖_F` over 4096 rotation angles, each with and
/// without a reflection, for 2x2 inputs.
pub fn brute_force_n2(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    const GRID: usize = 4096;
    let a = Matrix2::new(a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let b = Matrix2::new(b[(0, 0)], b[(0, 1)], b[(1, 0)], b[(1, 1)]);
    let reflect = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    let step = std::f64::consts::TAU / GRID as f64;
    let mut best = f64::INFINITY;
    for flip in [false, true] {
        let cost = |t: f64| {
            let r = Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos());
            let c = if flip { r * reflect } else { r };
            (a - c * b * c.transpose()).norm()
        };
        let (mut arg, mut low) = (0.0, f64::INFINITY);
        for k in 0..GRID {
            let t = step * k as f64;
            let v = cost(t);
            if v < low {
                (arg, low) = (t, v);
            }
        }
        // golden-section polish inside the bracketing grid cells
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (arg - step, arg + step);
        for _ in 0..80 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if cost(m1) < cost(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        best = best.min(low).min(cost(0.5 * (lo + hi)));
    }
    best
}

/// Central finite-difference gradient of a scalar function of a matrix.
pub fn fd_gradient(f: impl Fn(&DMatrix<f64>) -> f64, c: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(c.nrows(), c.ncols());
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            let mut plus = c.clone();
            let mut minus = c.clone();
            plus[(i, j)] += h;
            minus[(i, j)] -= h;
            g[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
    }
    g
}

/// Power sums `tr(M^k)` for `k = 1..=n`; two matrices share a spectrum iff
/// these agree (Newton's identities).
pub fn power_traces(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut p = m.clone();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(p.trace());
        p = &p * m;
    }
    out
}

/// Wasserstein-2 between equal-size clouds by enumerating permutations.
pub fn wasserstein_by_permutation(a: &[Complex64], b: &[Complex64]) -> f64 {
    let n = a.len().max(b.len());
    let pad = |v: &[Complex64]| {
        let mut v = v.to_vec();
        v.resize(n, Complex64::new(0.0, 0.0));
        v
    };
    let (a, b) = (pad(a), pad(b));
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permutations(&mut perm, 0, &mut |p| {
        let cost: f64 = p.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm_sqr()).sum();
        best = best.min(cost);
    });
    (best / n as f64).sqrt()
}

fn permutations(v: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permutations(v, k + 1, visit);
        v.swap(k, i);
    }
}

pub fn random_cloud(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Complex64> {
    let n = rng.random_range(1..=max_len);
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}
