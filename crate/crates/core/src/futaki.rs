//! Sasaki–Futaki invariant of `(xi_w, J)` on torus directions, and the
//! classification of Sasaki-cone points.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curvature::{einstein_residuals, scalar_from_radii, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::quadrature::{factorial, integrate_invariant, integrate_mc, integrate_orthant, QuadratureMethod, QuadratureSpec};
use crate::sphere::{random_sphere_point, Weight};

/// Coefficients of `X_b = sum_j b_j H_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FutakiInput {
    pub b: Vec<f64>,
}

impl FutakiInput {
    pub fn new(b: Vec<f64>) -> Result<Self> {
        if let Some(bad) = b.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("futaki direction entry {bad}")));
        }
        Ok(FutakiInput { b })
    }

    pub fn basis(n: usize, j: usize) -> Self {
        let mut b = vec![0.0; n + 1];
        b[j] = 1.0;
        FutakiInput { b }
    }

    fn check(&self, w: &Weight) -> Result<()> {
        if self.b.len() != w.n() + 1 {
            return Err(Error::WeightArity { expected: w.n() + 1, got: self.b.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FutakiMethod {
    Closed,
    /// Orthant integral in the affine chart `z_0 = 1`.
    Chart,
    /// `-int f (s - s0) dmu` with `f = eta_w(X_b)` on the sphere.
    Sphere,
}

/// `A_j = W - (n+1) w_j`.
pub fn a_coefficients(w: &Weight) -> Vec<f64> {
    let total = w.total();
    let m = (w.n() + 1) as f64;
    w.entries().iter().map(|wj| total - m * wj).collect()
}

pub fn futaki_closed(w: &Weight, b: &FutakiInput) -> Result<f64> {
    b.check(w)?;
    let n = w.n();
    let a = a_coefficients(w);
    let a_sum: f64 = a.iter().sum();
    let mut diag = 0.0;
    let mut off = 0.0;
    for (i, (bi, wi)) in b.b.iter().zip(w.entries()).enumerate() {
        let ratio = bi / wi;
        diag += ratio * a[i];
        off += ratio * (a_sum - a[i]);
    }
    let pre = -16.0 * PI.powi(n as i32 + 1) / factorial(n + 1);
    Ok(pre * (diag + 0.5 * off) / w.product())
}

pub fn futaki_numeric(w: &Weight, b: &FutakiInput, method: FutakiMethod, spec: &QuadratureSpec) -> Result<f64> {
    b.check(w)?;
    match method {
        FutakiMethod::Closed => futaki_closed(w, b),
        FutakiMethod::Chart => futaki_chart(w, b, spec.order),
        FutakiMethod::Sphere => futaki_sphere(w, b, spec),
    }
}

fn futaki_chart(w: &Weight, b: &FutakiInput, order: usize) -> Result<f64> {
    let n = w.n();
    let e = w.entries();
    let a = a_coefficients(w);
    let integrand = |x: &[f64]| {
        let mut lin_b = b.b[0];
        let mut lin_a = e[0] * a[0];
        let mut den = e[0];
        for (j, xj) in x.iter().enumerate() {
            lin_b += b.b[j + 1] * xj;
            lin_a += e[j + 1] * a[j + 1] * xj;
            den += e[j + 1] * xj;
        }
        lin_b * lin_a / den.powi(n as i32 + 3)
    };
    let inner = integrate_orthant(n, integrand, order)?;
    Ok(-8.0 * (n as f64 + 2.0) * PI.powi(n as i32 + 1) * inner)
}

fn futaki_sphere(w: &Weight, b: &FutakiInput, spec: &QuadratureSpec) -> Result<f64> {
    let integrand = |r: &[f64]| {
        let f = b.b.iter().zip(r).map(|(bj, rj)| bj * rj).sum::<f64>() / w.pairing(r);
        f * scalar_from_radii(w, r).s_minus_s0
    };
    let value = match spec.method {
        QuadratureMethod::SimplexGauss => integrate_invariant(w, integrand, spec)?,
        QuadratureMethod::SphereMc => integrate_mc(w, |p| integrand(&p.radii()), spec)?.value,
    };
    Ok(-value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifyReport {
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub csc: bool,
    pub einstein: bool,
    pub futaki_norm: f64,
    /// `max |Ric - 2n g|` of the scaled structure at a fixed sample point.
    pub einstein_residual: f64,
}

const EINSTEIN_FD_TOL: f64 = 5e-4;

/// CSC iff all `A_j` vanish (relative to `W`). Einstein iff CSC and the
/// scale folded with `w = l (1, ..., 1)`, namely `a / l`, equals 1; the
/// finite-difference Einstein residual must agree.
pub fn classify(w: &Weight, a: f64) -> Result<ClassifyReport> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidScale(a));
    }
    let coeffs = a_coefficients(w);
    let tol = 1e-10 * w.total();
    let csc = coeffs.iter().all(|v| v.abs() < tol);
    let n = w.n();
    let futaki_norm = (0..=n)
        .map(|j| futaki_closed(w, &FutakiInput::basis(n, j)).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let p = random_sphere_point(n, 0)?;
    let einstein_residual = einstein_residuals(w, a, &p, DEFAULT_STEP)?.einstein_res;
    let folded = a / w.entries()[0];
    let algebraic = csc && (folded - 1.0).abs() < 1e-10;
    Ok(ClassifyReport {
        a: coeffs,
        csc,
        einstein: algebraic && einstein_residual < EINSTEIN_FD_TOL,
        futaki_norm,
        einstein_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> Weight {
        Weight::new(v.to_vec()).unwrap()
    }

    #[test]
    fn spot_values() {
        let f = futaki_closed(&w(&[1.0, 2.0]), &FutakiInput::basis(1, 0)).unwrap();
        assert!((f + 2.0 * PI * PI).abs() < 1e-12);
        let g = futaki_closed(&w(&[1.0, 2.0]), &FutakiInput::basis(1, 1)).unwrap();
        assert!((g - PI * PI).abs() < 1e-12);
        assert_eq!(futaki_closed(&w(&[1.0, 1.0]), &FutakiInput::basis(1, 0)).unwrap(), 0.0);
    }

    #[test]
    fn reeb_direction_is_unobstructed() {
        for v in [[1.0, 2.0, 3.0], [0.5, 0.7, 2.9]] {
            let wt = w(&v);
            let f = futaki_closed(&wt, &FutakiInput { b: v.to_vec() }).unwrap();
            assert!(f.abs() < 1e-12, "{f}");
        }
    }

    #[test]
    fn three_routes_agree() {
        let spec = QuadratureSpec::gauss(64);
        for v in [[1.0, 2.0], [0.5, 3.0], [2.5, 1.5]] {
            let wt = w(&v);
            for j in 0..2 {
                let b = FutakiInput::basis(1, j);
                let c = futaki_closed(&wt, &b).unwrap();
                let ch = futaki_numeric(&wt, &b, FutakiMethod::Chart, &spec).unwrap();
                let sp = futaki_numeric(&wt, &b, FutakiMethod::Sphere, &spec).unwrap();
                assert!((ch - c).abs() < 1e-4 * c.abs(), "{v:?} {j}: {c} {ch}");
                assert!((sp - c).abs() < 1e-4 * c.abs(), "{v:?} {j}: {c} {sp}");
            }
        }
    }

    #[test]
    fn n2_routes_agree() {
        let spec = QuadratureSpec::gauss(128);
        let wt = w(&[1.0, 1.5, 2.0]);
        for j in 0..3 {
            let b = FutakiInput::basis(2, j);
            let c = futaki_closed(&wt, &b).unwrap();
            let ch = futaki_numeric(&wt, &b, FutakiMethod::Chart, &spec).unwrap();
            let sp = futaki_numeric(&wt, &b, FutakiMethod::Sphere, &spec).unwrap();
            // b = e_1 sits on a zero of F for these weights.
            let tol = 1e-4 * c.abs() + 1e-7;
            assert!((ch - c).abs() < tol, "{j}: {c} {ch}");
            assert!((sp - c).abs() < tol, "{j}: {c} {sp}");
        }
    }

    #[test]
    fn monte_carlo_sphere_route() {
        let wt = w(&[1.0, 2.0]);
        let b = FutakiInput::basis(1, 0);
        let mc = futaki_numeric(&wt, &b, FutakiMethod::Sphere, &QuadratureSpec::monte_carlo(400_000, 1)).unwrap();
        assert!((mc + 2.0 * PI * PI).abs() < 0.05 * 2.0 * PI * PI, "{mc}");
    }

    #[test]
    fn scaling_in_the_weights() {
        let wt = w(&[1.0, 2.0]);
        let b = FutakiInput::basis(1, 0);
        let spec = QuadratureSpec::gauss(64);
        for c in [0.5, 3.0] {
            let scaled = wt.scaled(c).unwrap();
            let ratio = futaki_numeric(&scaled, &b, FutakiMethod::Sphere, &spec).unwrap()
                / futaki_numeric(&wt, &b, FutakiMethod::Sphere, &spec).unwrap();
            assert!((ratio - c.powi(-2)).abs() < 1e-8, "{ratio}");
        }
    }

    #[test]
    fn classification() {
        let r = classify(&w(&[1.0, 1.0, 1.0]), 1.0).unwrap();
        assert!(r.csc && r.einstein);
        assert!(r.einstein_residual < 5e-4);
        let r = classify(&w(&[1.0, 2.0]), 1.0).unwrap();
        assert!(!r.csc && !r.einstein);
        assert!(r.futaki_norm > 1.0);
        let r = classify(&w(&[2.0, 2.0]), 1.0).unwrap();
        assert!(r.csc && !r.einstein);
        assert!(r.einstein_residual > 1e-2);
        let r = classify(&w(&[2.0, 2.0]), 2.0).unwrap();
        assert!(r.einstein);
        assert_eq!(r.a.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn arity_mismatch() {
        assert!(futaki_closed(&w(&[1.0, 2.0]), &FutakiInput::basis(2, 0)).is_err());
        assert!(FutakiInput::new(vec![f64::NAN]).is_err());
    }
}
