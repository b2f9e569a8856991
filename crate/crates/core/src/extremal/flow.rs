//! Descent of `E` over cosine profiles.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::profile::{BasicFunction, BasicProfile, DEFAULT_PROFILE_LEN, MAX_PROFILE_LEN};
use super::reduced::{integrate_sigma, Reduced};
use super::variational::energy_unchecked;
use crate::curvature::scalar_closed;
use crate::error::{Error, Result};
use crate::sphere::Weight;

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientMethod {
    /// `dE/dc_k = -4 int s L(cos(k pi sigma)) dmu`, evaluated in the
    /// symmetric form `-int Vt^2 s_{mu mu} (e_k)_{mu mu} dmu`.
    FirstVariation,
    /// Central differences of `E` in coefficient space.
    CentralDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    /// Initial trial step of the line search.
    pub step: f64,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub gradient: GradientMethod,
    /// Step for finite differences in coefficient space.
    pub fd_step: f64,
    pub quad_order: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            step: 1.0,
            tol: 1e-4,
            max_iter: 500,
            k: DEFAULT_PROFILE_LEN,
            gradient: GradientMethod::CentralDifference,
            fd_step: 1e-6,
            quad_order: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub energies: Vec<f64>,
    pub grad_norms: Vec<f64>,
    #[serde(rename = "final")]
    pub final_profile: BasicProfile,
    pub iterations: usize,
    pub converged: bool,
    /// `|s - pi s| / |s|` in `L^2(dmu)`, `pi` the projection onto `span{1, mu}`.
    pub extremal_residual: f64,
    pub baseline_energy: f64,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchStagnation,
}

struct Objective<'a> {
    red: Reduced,
    cfg: &'a FlowConfig,
}

impl Objective<'_> {
    /// `None` outside the admissible set.
    fn energy(&self, c: &[f64]) -> Result<Option<f64>> {
        let p = BasicProfile { coeffs: c.to_vec() };
        if self.red.check_admissible(&p).is_err() {
            return Ok(None);
        }
        energy_unchecked(&self.red, &p, self.cfg.quad_order).map(Some)
    }

    fn gradient(&self, c: &[f64]) -> Result<DVector<f64>> {
        match self.cfg.gradient {
            GradientMethod::FirstVariation => self.gradient_exact(c),
            GradientMethod::CentralDifference => self.gradient_fd(c),
        }
    }

    fn gradient_exact(&self, c: &[f64]) -> Result<DVector<f64>> {
        let p = BasicProfile { coeffs: c.to_vec() };
        let k = c.len();
        let basis: Vec<BasicProfile> = (1..=k).map(|j| BasicProfile::single(k, j, 1.0)).collect::<Result<_>>()?;
        let mut g = DVector::zeros(k);
        for (j, e) in basis.iter().enumerate() {
            let v = integrate_sigma(self.cfg.quad_order, |s| {
                let geo = self.red.geometry(&p, s);
                geo.vt.value().powi(2) * geo.hessian_mu(geo.st) * geo.hessian_mu(e.jet(s)) * geo.density()
            })?;
            g[j] = -self.red.measure_constant() * v;
        }
        Ok(g)
    }

    /// Central differences with one Richardson step. The third derivative
    /// along mode k grows like (k pi)^12, so the plain O(h^2) stencil is
    /// off by O(1) on the top modes even at h = 1e-6.
    fn gradient_fd(&self, c: &[f64]) -> Result<DVector<f64>> {
        let h = self.cfg.fd_step;
        let mut g = DVector::zeros(c.len());
        for j in 0..c.len() {
            let coarse = self.central(c, j, h)?;
            let fine = self.central(c, j, h / 2.0)?;
            g[j] = (4.0 * fine - coarse) / 3.0;
        }
        Ok(g)
    }

    fn central(&self, c: &[f64], j: usize, h: f64) -> Result<f64> {
        let mut up = c.to_vec();
        up[j] += h;
        let mut dn = c.to_vec();
        dn[j] -= h;
        match (self.energy(&up)?, self.energy(&dn)?) {
            (Some(a), Some(b)) => Ok((a - b) / (2.0 * h)),
            _ => Err(Error::Solver("gradient stencil leaves the admissible set".into())),
        }
    }

    /// Central differences of the gradient, symmetrised.
    fn hessian(&self, c: &[f64]) -> Result<DMatrix<f64>> {
        let k = c.len();
        let h = 1e-6;
        let mut hess = DMatrix::zeros(k, k);
        for j in 0..k {
            let mut up = c.to_vec();
            up[j] += h;
            let mut dn = c.to_vec();
            dn[j] -= h;
            let col = (self.gradient_exact(&up)? - self.gradient_exact(&dn)?) / (2.0 * h);
            hess.set_column(j, &col);
        }
        Ok((&hess + hess.transpose()) * 0.5)
    }
}

/// Newton-type direction with eigenvalues of the Hessian replaced by their
/// absolute values and floored relative to the largest.
fn preconditioned_direction(hess: DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let eig = hess.symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (top * 1e-10).max(f64::MIN_POSITIVE);
    let coords = eig.eigenvectors.transpose() * g;
    let scaled = DVector::from_iterator(
        coords.len(),
        coords.iter().zip(eig.eigenvalues.iter()).map(|(c, l)| c / l.abs().max(floor)),
    );
    -(eig.eigenvectors * scaled)
}

/// Descent of `E` from `phi0` in the span of `cos(k pi sigma)`, `k <= K`.
/// Search directions are preconditioned by the (clamped) Hessian; steps are
/// accepted by an Armijo backtracking search.
pub fn run_flow(w: &Weight, phi0: &BasicProfile, cfg: &FlowConfig) -> Result<FlowReport> {
    if cfg.k == 0 || cfg.k > MAX_PROFILE_LEN {
        return Err(Error::ProfileTooLong(cfg.k));
    }
    if !(cfg.tol > 0.0 && cfg.step > 0.0) {
        return Err(Error::Solver(format!("invalid flow tolerances: tol {} step {}", cfg.tol, cfg.step)));
    }
    let red = Reduced::new(w)?;
    let start = phi0.resized(cfg.k)?;
    red.check_admissible(&start)?;
    let obj = Objective { red, cfg };
    let baseline_energy = energy_unchecked(&red, &BasicProfile::zero(cfg.k), cfg.quad_order)?;

    let mut c: Vec<f64> = start.coeffs;
    let mut e = obj.energy(&c)?.ok_or(Error::NotPositive { sigma: f64::NAN, density: 0.0 })?;
    let mut g = obj.gradient(&c)?;
    let mut energies = vec![e];
    let mut grad_norms = vec![g.amax()];
    let mut iterations = 0;
    let stop_reason = loop {
        if g.amax() < cfg.tol {
            break StopReason::Converged;
        }
        if iterations >= cfg.max_iter {
            break StopReason::MaxIterations;
        }
        let d = preconditioned_direction(obj.hessian(&c)?, &g);
        let slope = g.dot(&d);
        let mut alpha = cfg.step;
        let accepted = loop {
            let trial: Vec<f64> = c.iter().zip(d.iter()).map(|(ci, di)| ci + alpha * di).collect();
            if let Some(et) = obj.energy(&trial)? {
                if et <= e + ARMIJO_C * alpha * slope {
                    break Some((trial, et));
                }
            }
            alpha *= 0.5;
            if alpha < MIN_STEP {
                break None;
            }
        };
        let Some((trial, et)) = accepted else {
            break StopReason::LineSearchStagnation;
        };
        c = trial;
        e = et;
        g = obj.gradient(&c)?;
        energies.push(e);
        grad_norms.push(g.amax());
        iterations += 1;
    };
    let final_profile = BasicProfile { coeffs: c };
    let extremal_residual = extremal_residual(&red, &final_profile, cfg.quad_order)?;
    Ok(FlowReport {
        energies,
        grad_norms,
        final_profile,
        iterations,
        converged: stop_reason == StopReason::Converged,
        extremal_residual,
        baseline_energy,
        stop_reason,
    })
}

/// Relative `L^2` distance of `s` from the holomorphy potentials `{1, mu}`.
pub fn extremal_residual(red: &Reduced, phi: &dyn BasicFunction, order: usize) -> Result<f64> {
    let moments = |f: &(dyn Fn(f64, &super::reduced::Geometry) -> f64 + Sync)| {
        integrate_sigma(order, |s| {
            let g = red.geometry(phi, s);
            f(s, &g) * g.density()
        })
    };
    let m00 = moments(&|_, _| 1.0)?;
    let m01 = moments(&|_, g| g.mu.value())?;
    let m11 = moments(&|_, g| g.mu.value().powi(2))?;
    let b0 = moments(&|_, g| g.s())?;
    let b1 = moments(&|_, g| g.s() * g.mu.value())?;
    let ss = moments(&|_, g| g.s().powi(2))?;
    let det = m00 * m11 - m01 * m01;
    let a0 = (b0 * m11 - b1 * m01) / det;
    let a1 = (b1 * m00 - b0 * m01) / det;
    let rest = moments(&|_, g| (g.s() - a0 - a1 * g.mu.value()).powi(2))?;
    Ok((rest / ss).max(0.0).sqrt())
}

/// Profile curves as CSV with columns
/// `sigma,phi,s_deformed,s_closed_baseline`, 17 significant digits.
pub fn profile_csv(w: &Weight, phi: &BasicProfile, rows: usize) -> Result<String> {
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    if rows < 2 {
        return Err(Error::InvalidQuadrature(format!("{rows} profile rows")));
    }
    let mut out = String::from("sigma,phi,s_deformed,s_closed_baseline\n");
    for i in 0..rows {
        let sigma = i as f64 / (rows - 1) as f64;
        let g = red.geometry(phi, sigma);
        let baseline = scalar_closed(w, &red.sphere_point(sigma)).s;
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", sigma, phi.value(sigma), g.s(), baseline)
            .expect("writing to a String cannot fail");
    }
    Ok(out)
}
