use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpdPairSpec {
    pub size: usize,
    /// Lower bound on the spectrum.
    pub lambda_min: f64,
    pub seed: u64,
}

impl Default for SpdPairSpec {
    fn default() -> Self {
        Self {
            size: 8,
            lambda_min: 0.1,
            seed: 0,
        }
    }
}

/// Orthogonally similar SPD matrices: `a1 = q_true a2 q_trueᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdPair {
    pub a1: DMatrix<f64>,
    pub a2: DMatrix<f64>,
    pub q_true: DMatrix<f64>,
}

pub fn spd_pair_generate(spec: &SpdPairSpec) -> Result<SpdPair> {
    if spec.size == 0 {
        return Err(Error::InvalidArgument("size must be positive".into()));
    }
    if !(spec.lambda_min > 0.0 && spec.lambda_min.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda_min must be positive, got {}",
            spec.lambda_min
        )));
    }
    let n = spec.size;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let g = linalg::gaussian_matrix(n, n, &mut rng);
    let s = linalg::sym(&g);
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 10_000).ok_or(Error::EigenFailure)?;
    let w = DVector::from_iterator(n, eig.eigenvalues.iter().map(|v| v.abs() + spec.lambda_min));
    let u = eig.eigenvectors;
    let a2 = linalg::sym(&(&u * DMatrix::from_diagonal(&w) * u.transpose()));
    let q_true = linalg::qr_orthogonal(&linalg::gaussian_matrix(n, n, &mut rng));
    let a1 = linalg::sym(&(&q_true * &a2 * q_true.transpose()));
    Ok(SpdPair { a1, a2, q_true })
}
