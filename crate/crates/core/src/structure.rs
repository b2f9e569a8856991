//! Weighted Sasakian structures `(xi_w, eta_w, Phi_w, g_w)` on S^{2n+1}.
//!
//! All tensors are ambient `(2n+2)`-dimensional objects. Covectors and
//! bilinear forms are only meaningful on tangent vectors; `g` is stored with
//! the tangent projector applied on both sides.

use nalgebra::{DMatrix, DVector};

use crate::conventions::CONVENTIONS;
use crate::error::{Error, Result};
use crate::sphere::{complex_structure, orthonormal_tangent_basis, tangent_projector, SpherePoint, Weight};

/// Structure tensors of a Sasakian structure at one point.
#[derive(Debug, Clone)]
pub struct ContactFrame {
    pub point: SpherePoint,
    pub eta: DVector<f64>,
    pub xi: DVector<f64>,
    pub phi: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub deta: DMatrix<f64>,
    /// `D = eta(xi_w) = sum w_k r_k` for the underlying weight.
    pub d: f64,
}

/// Worst-case residuals of the contact-metric identities over an orthonormal
/// tangent basis.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FrameResiduals {
    pub eta_xi: f64,
    pub phi_squared: f64,
    pub phi_xi: f64,
    pub eta_phi: f64,
    pub compatibility: f64,
    pub tkf: f64,
    /// Smallest eigenvalue of `g` on the tangent space (must be positive).
    pub min_eigenvalue: f64,
}

impl FrameResiduals {
    /// Neutral element for [`FrameResiduals::merge`].
    pub const EMPTY: FrameResiduals = FrameResiduals {
        eta_xi: 0.0,
        phi_squared: 0.0,
        phi_xi: 0.0,
        eta_phi: 0.0,
        compatibility: 0.0,
        tkf: 0.0,
        min_eigenvalue: f64::INFINITY,
    };

    pub fn worst(&self) -> f64 {
        [self.eta_xi, self.phi_squared, self.phi_xi, self.eta_phi, self.compatibility, self.tkf]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn merge(self, other: FrameResiduals) -> FrameResiduals {
        FrameResiduals {
            eta_xi: self.eta_xi.max(other.eta_xi),
            phi_squared: self.phi_squared.max(other.phi_squared),
            phi_xi: self.phi_xi.max(other.phi_xi),
            eta_phi: self.eta_phi.max(other.eta_phi),
            compatibility: self.compatibility.max(other.compatibility),
            tkf: self.tkf.max(other.tkf),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }
}

impl ContactFrame {
    pub(crate) fn assemble(
        point: SpherePoint,
        eta: DVector<f64>,
        xi: DVector<f64>,
        phi: DMatrix<f64>,
        deta: DMatrix<f64>,
        d: f64,
    ) -> ContactFrame {
        let proj = tangent_projector(&point);
        let raw = &deta * &phi * CONVENTIONS.kappa + &eta * eta.transpose();
        let g = &proj * (&raw + raw.transpose()) * 0.5 * &proj;
        ContactFrame { point, eta, xi, phi, g, deta, d }
    }

    pub fn n(&self) -> usize {
        self.point.n()
    }

    pub fn metric(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        x.dot(&(&self.g * y))
    }

    /// Checks every contact-metric identity on an orthonormal tangent basis.
    pub fn residuals(&self) -> FrameResiduals {
        let e = orthonormal_tangent_basis(&self.point);
        let m = e.ncols();
        let eta_e = e.transpose() * &self.eta;
        let phi_e = &self.phi * &e;

        let eta_xi = (self.eta.dot(&self.xi) - 1.0).abs();
        // Phi^2 X = -X + eta(X) xi
        let phi_squared = (&self.phi * &phi_e + &e - &self.xi * eta_e.transpose()).amax();
        let phi_xi = (&self.phi * &self.xi).amax();
        let eta_phi = (phi_e.transpose() * &self.eta).amax();
        let g_e = e.transpose() * &self.g * &e;
        let compat = phi_e.transpose() * &self.g * &phi_e - &g_e + &eta_e * eta_e.transpose();
        let tkf = phi_e.transpose() * &self.g * &e - e.transpose() * &self.deta * &e * CONVENTIONS.kappa;
        let sym = (&g_e + g_e.transpose()) * 0.5;
        let min_eigenvalue = sym.symmetric_eigenvalues().min();
        debug_assert_eq!(m, 2 * self.n() + 1);
        FrameResiduals {
            eta_xi,
            phi_squared,
            phi_xi,
            eta_phi,
            compatibility: compat.amax(),
            tkf: tkf.amax(),
            min_eigenvalue,
        }
    }

    /// Riemannian volume density relative to the round metric,
    /// `sqrt(det g)` on an orthonormal round tangent basis.
    pub fn volume_density(&self) -> f64 {
        let e = orthonormal_tangent_basis(&self.point);
        (e.transpose() * &self.g * &e).determinant().sqrt()
    }

    /// `(1/n!) eta ^ (kappa d eta)^n` on the same basis, via the Pfaffian
    /// of the bordered antisymmetric matrix `[[0, eta^T], [-eta, kappa d eta]]`.
    pub fn contact_volume_density(&self) -> f64 {
        let e = orthonormal_tangent_basis(&self.point);
        let m = e.ncols();
        let eta_e = e.transpose() * &self.eta;
        let omega = e.transpose() * &self.deta * &e * CONVENTIONS.kappa;
        let mut bordered = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            bordered[(0, i + 1)] = eta_e[i];
            bordered[(i + 1, 0)] = -eta_e[i];
        }
        bordered.view_mut((1, 1), (m, m)).copy_from(&omega);
        bordered.determinant().abs().sqrt()
    }
}

/// The standard contact form `eta = sum (y_k dx_k - x_k dy_k)` as an ambient
/// covector; numerically equal to the standard Reeb field.
pub fn standard_eta(p: &SpherePoint) -> DVector<f64> {
    let a = p.ambient();
    -(complex_structure(a.len()) * a)
}

/// `xi_w = sum_k w_k H_k`, `H_k = y_k d/dx_k - x_k d/dy_k`.
pub fn reeb_field(w: &Weight, p: &SpherePoint) -> Result<DVector<f64>> {
    check_pair(w, p)?;
    Ok(standard_eta(p).component_mul(&w.ambient_diagonal()))
}

/// `eta_w = eta / D`.
pub fn contact_form(w: &Weight, p: &SpherePoint) -> Result<DVector<f64>> {
    check_pair(w, p)?;
    Ok(standard_eta(p) / w.pairing(&p.radii()))
}

/// The standard transverse complex structure: `j_sign * i` on the contact
/// distribution of the round structure, zero on the normal and on `xi_0`.
pub fn standard_phi(p: &SpherePoint) -> DMatrix<f64> {
    let a = p.ambient();
    let dim = a.len();
    let j = complex_structure(dim);
    let xi0 = -(&j * &a);
    let pd = DMatrix::identity(dim, dim) - &a * a.transpose() - &xi0 * xi0.transpose();
    &pd * j * &pd * CONVENTIONS.j_sign
}

/// `Phi_w = Phi_0 - Phi_0(xi_w) (x) eta_w`.
pub fn phi_tensor(w: &Weight, p: &SpherePoint) -> Result<DMatrix<f64>> {
    let xi = reeb_field(w, p)?;
    let eta_w = contact_form(w, p)?;
    let phi0 = standard_phi(p);
    let phi0_xi = &phi0 * xi;
    Ok(phi0 - phi0_xi * eta_w.transpose())
}

/// `d eta_w = d eta / D - dD ^ eta / D^2`, in closed form.
pub fn weighted_deta(w: &Weight, p: &SpherePoint) -> DMatrix<f64> {
    let a = p.ambient();
    let dim = a.len();
    let d = w.pairing(&p.radii());
    let deta = complex_structure(dim) * 2.0;
    let eta = standard_eta(p);
    let dd = a.component_mul(&w.ambient_diagonal()) * 2.0;
    let wedge = &dd * eta.transpose() - &eta * dd.transpose();
    deta / d - wedge / (d * d)
}

/// Full weighted Sasakian frame, `g_w = kappa d eta_w(., Phi_w .) + eta_w (x) eta_w`.
pub fn sasaki_metric(w: &Weight, p: &SpherePoint) -> Result<ContactFrame> {
    let xi = reeb_field(w, p)?;
    let eta = contact_form(w, p)?;
    let phi = phi_tensor(w, p)?;
    let deta = weighted_deta(w, p);
    let d = w.pairing(&p.radii());
    Ok(ContactFrame::assemble(p.clone(), eta, xi, phi, deta, d))
}

/// Transverse homothety: `xi_a = xi / a`, `eta_a = a eta`, `Phi_a = Phi`,
/// `g_a = a g + (a^2 - a) eta (x) eta`.
pub fn homothety_frame(w: &Weight, a: f64, p: &SpherePoint) -> Result<ContactFrame> {
    let base = sasaki_metric(w, p)?;
    scale_frame(&base, a)
}

pub fn scale_frame(base: &ContactFrame, a: f64) -> Result<ContactFrame> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidScale(a));
    }
    let proj = tangent_projector(&base.point);
    let g = &base.g * a + &proj * (&base.eta * base.eta.transpose()) * &proj * (a * a - a);
    Ok(ContactFrame {
        point: base.point.clone(),
        eta: &base.eta * a,
        xi: &base.xi / a,
        phi: base.phi.clone(),
        g,
        deta: &base.deta * a,
        d: base.d,
    })
}

/// Membership in the Sasaki cone `R_+^{n+1}` of the standard CR structure.
pub fn is_positive_reeb(w: &[f64]) -> bool {
    !w.is_empty() && w.iter().all(|&v| v.is_finite() && v > 1e-12)
}

fn check_pair(w: &Weight, p: &SpherePoint) -> Result<()> {
    if w.n() != p.n() {
        return Err(Error::WeightArity { expected: p.n() + 1, got: w.n() + 1 });
    }
    Ok(())
}
