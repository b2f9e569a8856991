//! Ambient realisation of a deformed structure `eta~ = eta_w + d^c phi`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::profile::BasicFunction;
use super::reduced::Reduced;
use crate::conventions::KAPPA;
use crate::curvature::{curvature_fd_with, FdOptions};
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, pairwise_sum, QuadratureSpec};
use crate::sphere::{SpherePoint, Weight};
use crate::structure::{sasaki_metric, ContactFrame};

/// Sign of `d^c phi = D_C * d phi o Phi_w`. With it `d eta~ = R d eta_w` and
/// `R = 1 + 2 w_0^2 (V phi')'`, the normalisation of `omega + i dd^c phi`.
pub const DC_SIGN: f64 = -1.0;

#[derive(Debug, Clone)]
pub struct DeformedFrame {
    pub frame: ContactFrame,
    /// Transverse Ricci form as an ambient antisymmetric matrix.
    pub rho_t: DMatrix<f64>,
    pub s_t: f64,
    pub sigma: f64,
    /// `R = d eta~ / d eta_w`.
    pub density: f64,
}

impl DeformedFrame {
    /// `s_g = s^T - 2`.
    pub fn s(&self) -> f64 {
        self.s_t - 2.0
    }
}

/// `sigma = w_0 r_0 / (w_0 r_0 + w_1 r_1)`.
pub fn sigma_coordinate(w: &Weight, p: &SpherePoint) -> Result<f64> {
    if w.n() != 1 || p.n() != 1 {
        return Err(Error::UnsupportedDimension { expected: 1, got: w.n().max(p.n()) });
    }
    let r = p.radii();
    Ok(w.entries()[0] * r[0] / w.pairing(&r))
}

/// Ambient covector `d sigma`, restricted to the tangent space.
pub fn sigma_differential(w: &Weight, p: &SpherePoint) -> DVector<f64> {
    let a = p.ambient();
    let r = p.radii();
    let d = w.pairing(&r);
    let w0 = w.entries()[0];
    let mut dr0 = DVector::zeros(a.len());
    dr0[0] = 2.0 * a[0];
    dr0[1] = 2.0 * a[1];
    let dd = a.component_mul(&w.ambient_diagonal()) * 2.0;
    let raw = (dr0 * d - dd * r[0]) * (w0 / (d * d));
    let normal = raw.dot(&a);
    raw - a * normal
}

pub fn deformed_structure(w: &Weight, phi: &dyn BasicFunction, p: &SpherePoint) -> Result<DeformedFrame> {
    let red = Reduced::new(w)?;
    let sigma = sigma_coordinate(w, p)?;
    let geo = red.geometry(phi, sigma);
    let density = geo.density();
    if !(density > 0.0) {
        return Err(Error::NotPositive { sigma, density });
    }
    let base = sasaki_metric(w, p)?;
    let dphi = sigma_differential(w, p) * phi.jet(sigma).derivative(1);
    let dc_phi = base.phi.transpose() * dphi * DC_SIGN;
    let eta = &base.eta + &dc_phi;
    let shift = base.phi.transpose() * &dc_phi;
    let phi_t = &base.phi - &base.xi * shift.transpose();
    let deta = &base.deta * density;
    let s_t = geo.st.value();
    let rho_t = &deta * (0.5 * s_t * KAPPA);
    let frame = ContactFrame::assemble(p.clone(), eta, base.xi.clone(), phi_t, deta, base.d);
    Ok(DeformedFrame { frame, rho_t, s_t, sigma, density })
}

/// `E = int s^2 dmu` with `s` from finite-difference curvature of the
/// ambient deformed metric at Gauss nodes in `sigma`.
pub fn energy_fd(w: &Weight, phi: &dyn BasicFunction, spec: &QuadratureSpec, fd: FdOptions) -> Result<f64> {
    spec.validate()?;
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    let (x, wt) = gauss_legendre(spec.order);
    let terms: Vec<f64> = x
        .par_iter()
        .zip(wt.par_iter())
        .map(|(&sigma, &weight)| {
            let p = red.sphere_point(sigma);
            let c = curvature_fd_with(|q| Ok(deformed_structure(w, phi, q)?.frame.g), &p, fd)?;
            Ok(weight * c.s * c.s * red.geometry(phi, sigma).density())
        })
        .collect::<Result<_>>()?;
    Ok(red.measure_constant() * pairwise_sum(&terms))
}
