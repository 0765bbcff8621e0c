//! Retractions onto the orthogonal group.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retraction {
    /// Orthogonal polar factor of `C + Δ`.
    #[default]
    Polar,
    /// Orthogonal QR factor of `C + Δ` with positive `R` diagonal.
    Qr,
    /// `C (I − S/2)⁻¹ (I + S/2)` with `S = skew(Cᵀ Δ)`.
    Cayley,
}

/// Maps the tangent step `delta` at orthogonal `c` back onto O(n).
pub fn retract(c: &DMatrix<f64>, delta: &DMatrix<f64>, kind: Retraction) -> Result<DMatrix<f64>> {
    match kind {
        Retraction::Polar => linalg::polar_factor(&(c + delta), false),
        Retraction::Qr => Ok(linalg::qr_orthogonal(&(c + delta))),
        Retraction::Cayley => cayley(c, delta),
    }
}

/// Like [`retract`], but a singular Cayley system falls back to the polar
/// retraction.
pub(crate) fn retract_or_polar(c: &DMatrix<f64>, delta: &DMatrix<f64>, kind: Retraction) -> Result<DMatrix<f64>> {
    match retract(c, delta, kind) {
        Err(Error::RetractionSingular) => retract(c, delta, Retraction::Polar),
        other => other,
    }
}

fn cayley(c: &DMatrix<f64>, delta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = c.ncols();
    let s = linalg::skew(&(c.transpose() * delta));
    let id = DMatrix::<f64>::identity(n, n);
    let lhs = &id - &s * 0.5;
    let rhs = &id + &s * 0.5;
    let solved = lhs.lu().solve(&rhs).ok_or(Error::RetractionSingular)?;
    if !linalg::all_finite(&solved) {
        return Err(Error::RetractionSingular);
    }
    Ok(c * solved)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_step_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = linalg::haar_orthogonal(4, &mut rng);
        let zero = DMatrix::zeros(4, 4);
        for kind in [Retraction::Polar, Retraction::Qr, Retraction::Cayley] {
            let out = retract(&c, &zero, kind).unwrap();
            assert!((&out - &c).amax() < 1e-12, "{kind:?}");
        }
    }
}
