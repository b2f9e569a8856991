//! Exact reduction of torus-invariant transverse Kähler geometry on S^3
//! to the moment coordinate `sigma = w_0 r_0 / D`.
//!
//! For `w = (w_0, w_1)` put `beta = w_1 / w_0 - 1` and
//! `V(sigma) = sigma (1 - sigma) (1 + beta sigma) / w_0`. A basic potential
//! `phi(sigma)` deforms the moment map of `H_0` (in units where
//! `eta(H_0) = 2 mu`) to
//!
//! ```text
//! mu = sigma / (2 w_0) + w_0 V phi'
//! ```
//!
//! and every transverse quantity follows from `mu' = d mu / d sigma` and the
//! norm `Vt = 2 w_0 V mu'`:
//!
//! ```text
//! d eta~        = R d eta_w,            R = 2 w_0 mu'
//! dmu           = 2 pi^2 / (w_0 w_1) R d sigma
//! s^T           = -(1 / mu') (Vt' / mu')'
//! Delta f       = -(2 w_0 / mu') (V f')'          (positive Laplacian)
//! <grad f, grad g> = 2 w_0 V f' g' / mu'
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;

use super::jet::Jet;
use super::profile::BasicFunction;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, pairwise_sum};
use crate::sphere::{SpherePoint, Weight};

/// Number of sample points used for the admissibility scan.
const ADMISSIBILITY_GRID: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduced {
    pub w0: f64,
    pub w1: f64,
}

impl Reduced {
    pub fn new(w: &Weight) -> Result<Self> {
        if w.n() != 1 {
            return Err(Error::UnsupportedDimension { expected: 1, got: w.n() });
        }
        Ok(Reduced { w0: w.entries()[0], w1: w.entries()[1] })
    }

    pub fn v(&self, s: Jet) -> Jet {
        let beta = self.w1 / self.w0 - 1.0;
        (s * (-s + 1.0) * (s * beta + 1.0)).scale(1.0 / self.w0)
    }

    /// `dmu / (R d sigma)`.
    pub fn measure_constant(&self) -> f64 {
        2.0 * PI * PI / (self.w0 * self.w1)
    }

    /// Volume mean of `s_g`, `2(2W - 1)`.
    pub fn s0(&self) -> f64 {
        2.0 * (2.0 * (self.w0 + self.w1) - 1.0)
    }

    pub fn geometry(&self, phi: &dyn BasicFunction, sigma: f64) -> Geometry {
        let s = Jet::variable(sigma);
        let v = self.v(s);
        let mu = s.scale(0.5 / self.w0) + v * phi.jet(sigma).deriv() * self.w0;
        let m1 = mu.deriv();
        let vt = v * m1 * (2.0 * self.w0);
        let st = -((vt.deriv() / m1).deriv() / m1);
        Geometry { sigma, w0: self.w0, v, mu, m1, vt, st }
    }

    /// Positivity of the deformed transverse form on a dense grid.
    pub fn check_admissible(&self, phi: &dyn BasicFunction) -> Result<()> {
        for i in 0..=ADMISSIBILITY_GRID {
            let sigma = i as f64 / ADMISSIBILITY_GRID as f64;
            let density = self.geometry(phi, sigma).density();
            if !(density > 0.0) {
                return Err(Error::NotPositive { sigma, density });
            }
        }
        Ok(())
    }

    /// `int_0^1 f(sigma) d sigma` by Gauss–Legendre, nodes in parallel.
    pub fn integrate<F>(&self, order: usize, f: F) -> Result<f64>
    where
        F: Fn(f64) -> f64 + Sync,
    {
        integrate_sigma(order, f)
    }

    /// A point of S^3 with the given `sigma` (and fixed generic phases).
    pub fn sphere_point(&self, sigma: f64) -> SpherePoint {
        let r0 = sigma * self.w1 / (self.w0 * (1.0 - sigma) + sigma * self.w1);
        let r1 = 1.0 - r0;
        let (a, b) = (0.3f64, 1.1f64);
        SpherePoint {
            x: vec![r0.sqrt() * a.cos(), r1.max(0.0).sqrt() * b.cos()],
            y: vec![r0.sqrt() * a.sin(), r1.max(0.0).sqrt() * b.sin()],
        }
    }
}

pub(crate) fn integrate_sigma<F>(order: usize, f: F) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    if order < 2 {
        return Err(Error::InvalidQuadrature(format!("gauss order {order} < 2")));
    }
    let (x, w) = gauss_legendre(order);
    let terms: Vec<f64> = x.par_iter().zip(w.par_iter()).map(|(&s, &wt)| wt * f(s)).collect();
    if let Some(bad) = terms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("sigma = {}", x[bad])));
    }
    Ok(pairwise_sum(&terms))
}

/// Jets of the reduced geometry at one value of `sigma`.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    pub sigma: f64,
    pub w0: f64,
    pub v: Jet,
    /// Deformed moment coordinate.
    pub mu: Jet,
    /// `mu'`.
    pub m1: Jet,
    pub vt: Jet,
    /// Transverse scalar curvature.
    pub st: Jet,
}

impl Geometry {
    /// `R = d eta~ / d eta_w`.
    pub fn density(&self) -> f64 {
        2.0 * self.w0 * self.m1.value()
    }

    /// `s_g = s^T - 2`.
    pub fn s(&self) -> f64 {
        self.st.value() - 2.0
    }

    pub fn laplacian(&self, f: Jet) -> Jet {
        -((self.v * f.deriv()).deriv() / self.m1).scale(2.0 * self.w0)
    }

    pub fn gradient_pairing(&self, f: Jet, g: Jet) -> f64 {
        2.0 * self.w0 * self.v.value() * f.derivative(1) * g.derivative(1) / self.m1.value()
    }

    /// `(rho^T, i dd^c f) = -(s^T / 4) Delta f`.
    pub fn ricci_pairing(&self, f: Jet) -> f64 {
        -0.25 * self.st.value() * self.laplacian(f).value()
    }

    /// `(d s^T) contracted with the gradient of f`, i.e. `<grad s, grad f> / 2`.
    pub fn scalar_gradient_pairing(&self, f: Jet) -> f64 {
        0.5 * self.gradient_pairing(self.st, f)
    }

    /// Lichnerowicz operator
    /// `(1/4)(Delta^2 f + 4 (rho^T, i dd^c f) + 2 (d s^T) . grad f)`.
    pub fn lichnerowicz(&self, f: Jet) -> f64 {
        let lap = self.laplacian(f);
        let bilap = self.laplacian(lap).value();
        0.25 * (bilap + 4.0 * self.ricci_pairing(f) + 2.0 * self.scalar_gradient_pairing(f))
    }

    /// Second derivative in the deformed moment coordinate.
    pub fn hessian_mu(&self, f: Jet) -> f64 {
        ((f.deriv() / self.m1).deriv() / self.m1).value()
    }

    /// Pointwise integrand of the Lichnerowicz form,
    /// `(1/4) Vt^2 f_{mu mu} g_{mu mu}`; integrating it against `dmu` gives
    /// `int g L f dmu`.
    pub fn lichnerowicz_form(&self, f: Jet, g: Jet) -> f64 {
        0.25 * self.vt.value().powi(2) * self.hessian_mu(f) * self.hessian_mu(g)
    }

    /// First-order change of `s_g` along `phi + t dir`.
    pub fn scalar_variation(&self, dir: Jet) -> f64 {
        let lap = self.laplacian(dir);
        -(0.5 * self.laplacian(lap).value() + 2.0 * self.ricci_pairing(dir))
    }

    /// First-order relative change of the volume density along `phi + t dir`.
    pub fn volume_variation(&self, dir: Jet) -> f64 {
        -0.5 * self.laplacian(dir).value()
    }
}
