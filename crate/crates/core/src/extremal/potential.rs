//! Ricci potential and the Futaki invariant of a deformed structure.
//!
//! The potential solves `Delta psi = s0 - s` with zero mean. In `sigma` the
//! equation reads `(V psi')' = -(mu' / (2 w_0)) (s0 - s)`; regularity at
//! `sigma = 0` fixes `V psi' = Q(sigma) = -(1/(2 w_0)) int_0^sigma mu' (s0 - s)`,
//! and `Q(1) = 0` because `s0` is the volume mean.
//!
//! With this normalisation `int <grad f, grad psi> dmu = -int f (s - s0) dmu`.

use serde::Serialize;

use super::chebyshev::{lobatto_nodes, ChebSeries};
use super::profile::BasicFunction;
use super::reduced::{integrate_sigma, Reduced};
use crate::error::{Error, Result};
use crate::futaki::FutakiInput;
use crate::sphere::Weight;

const POTENTIAL_NODES: usize = 128;
const POTENTIAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciPotentialGrid {
    pub sigma_nodes: Vec<f64>,
    pub psi: Vec<f64>,
    /// `max |Delta psi - (s0 - s)|` over the nodes.
    pub residual: f64,
    #[serde(skip)]
    series: ChebSeries,
}

impl RicciPotentialGrid {
    pub fn psi_at(&self, sigma: f64) -> f64 {
        self.series.eval(sigma)
    }

    pub fn series(&self) -> &ChebSeries {
        &self.series
    }
}

pub fn ricci_potential(w: &Weight, phi: &dyn BasicFunction) -> Result<RicciPotentialGrid> {
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    let w0 = red.w0;
    let s0 = red.s0();
    let nodes = lobatto_nodes(POTENTIAL_NODES);
    let geo: Vec<_> = nodes.iter().map(|&s| red.geometry(phi, s)).collect();
    let source: Vec<f64> = geo.iter().map(|g| g.m1.value() * (s0 - g.s())).collect();
    let q = {
        let mut int = ChebSeries::from_lobatto_values(&source).integral();
        int.coeffs.iter_mut().for_each(|c| *c *= -0.5 / w0);
        int
    };
    let last = nodes.len() - 1;
    let dpsi: Vec<f64> = nodes
        .iter()
        .zip(&geo)
        .enumerate()
        .map(|(j, (&s, g))| {
            if j == 0 || j == last {
                // L'Hopital: Q' / V' at the fixed-point sets.
                let dq = -0.5 / w0 * source[j];
                dq / g.v.derivative(1)
            } else {
                q.eval(s) / g.v.value()
            }
        })
        .collect();
    let mut series = ChebSeries::from_lobatto_values(&dpsi).integral();
    let mean = integrate_sigma(96, |s| series.eval(s) * red.geometry(phi, s).density())?
        / integrate_sigma(96, |s| red.geometry(phi, s).density())?;
    series.coeffs[0] -= mean;

    let d1 = series.derivative();
    let d2 = d1.derivative();
    let residual = nodes
        .iter()
        .zip(&geo)
        .map(|(&s, g)| {
            let lap = -2.0 * w0 / g.m1.value() * (g.v.derivative(1) * d1.eval(s) + g.v.value() * d2.eval(s));
            (lap - (s0 - g.s())).abs()
        })
        .fold(0.0, f64::max);
    if !(residual < POTENTIAL_TOL) {
        return Err(Error::Solver(format!("Ricci potential residual {residual:e}")));
    }
    let psi = nodes.iter().map(|&s| series.eval(s)).collect();
    Ok(RicciPotentialGrid { sigma_nodes: nodes, psi, residual, series })
}

/// `eta~(X_b)` as a function of `sigma`: `b_1 / w_1 + (b_0 - b_1 w_0 / w_1) 2 mu`.
fn potential_coefficients(red: &Reduced, b: &FutakiInput) -> Result<(f64, f64)> {
    if b.b.len() != 2 {
        return Err(Error::WeightArity { expected: 2, got: b.b.len() });
    }
    Ok((b.b[1] / red.w1, b.b[0] - b.b[1] * red.w0 / red.w1))
}

/// `F(X_b) = int <grad f_b, grad psi> dmu`, `f_b = eta~(X_b)`.
pub fn futaki_via_potential(w: &Weight, b: &FutakiInput, phi: &dyn BasicFunction) -> Result<f64> {
    let red = Reduced::new(w)?;
    let (_, slope) = potential_coefficients(&red, b)?;
    let psi = ricci_potential(w, phi)?;
    let dpsi = psi.series().derivative();
    let w0 = red.w0;
    let v = integrate_sigma(96, |s| {
        let g = red.geometry(phi, s);
        let df = slope * 2.0 * g.m1.value();
        // <grad f, grad psi> dmu = 2 w0 V f' psi' / mu' * 2 w0 mu' d sigma
        4.0 * w0 * w0 * g.v.value() * df * dpsi.eval(s)
    })?;
    Ok(red.measure_constant() * v)
}

/// `-int f_b (s - s0) dmu` directly.
pub fn futaki_direct(w: &Weight, b: &FutakiInput, phi: &dyn BasicFunction) -> Result<f64> {
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    let (offset, slope) = potential_coefficients(&red, b)?;
    let s0 = red.s0();
    let v = integrate_sigma(96, |s| {
        let g = red.geometry(phi, s);
        let f = offset + slope * 2.0 * g.mu.value();
        f * (g.s() - s0) * g.density()
    })?;
    Ok(-red.measure_constant() * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::profile::BasicProfile;
    use crate::futaki::futaki_closed;
    use std::f64::consts::PI;

    #[test]
    fn round_potential_vanishes() {
        let g = ricci_potential(&Weight::standard(1), &BasicProfile::zero(8)).unwrap();
        assert!(g.psi.iter().all(|p| p.abs() < 1e-10));
    }

    #[test]
    fn potential_residual_and_mean() {
        let w = Weight::new(vec![1.0, 2.0]).unwrap();
        let phi = BasicProfile::new(vec![0.05, 0.0, 0.01]).unwrap();
        let g = ricci_potential(&w, &phi).unwrap();
        assert!(g.residual < 1e-6);
        let red = Reduced::new(&w).unwrap();
        let mean = integrate_sigma(96, |s| g.psi_at(s) * red.geometry(&phi, s).density()).unwrap();
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn futaki_from_potential_matches_closed_form() {
        let w = Weight::new(vec![1.0, 2.0]).unwrap();
        let b = FutakiInput::basis(1, 0);
        let zero = BasicProfile::zero(8);
        let f = futaki_via_potential(&w, &b, &zero).unwrap();
        assert!((f + 2.0 * PI * PI).abs() < 1e-3 * 2.0 * PI * PI, "{f}");
        let direct = futaki_direct(&w, &b, &zero).unwrap();
        assert!((direct - futaki_closed(&w, &b).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn futaki_is_invariant_under_deformation() {
        let w = Weight::new(vec![1.0, 2.0]).unwrap();
        let b = FutakiInput::basis(1, 0);
        let f0 = futaki_via_potential(&w, &b, &BasicProfile::zero(8)).unwrap();
        let phi = BasicProfile::single(8, 1, 0.05).unwrap();
        let f1 = futaki_via_potential(&w, &b, &phi).unwrap();
        assert!((f1 - f0).abs() < 1e-2 * f0.abs());
    }

    #[test]
    fn reeb_direction_gives_zero() {
        let w = Weight::new(vec![1.0, 2.0]).unwrap();
        let b = FutakiInput { b: vec![1.0, 2.0] };
        let f = futaki_via_potential(&w, &b, &BasicProfile::single(8, 2, 0.01).unwrap()).unwrap();
        assert!(f.abs() < 1e-8);
    }
}
