//! Energy, Lichnerowicz operator and the variational identities.

use nalgebra::DMatrix;
use serde::Serialize;

use super::chebyshev::{lobatto_nodes, ChebSeries};
use super::profile::{BasicFunction, ChebFunction, Shifted};
use super::reduced::{integrate_sigma, Reduced};
use crate::error::{Error, Result};
use crate::quadrature::{QuadratureMethod, QuadratureSpec};
use crate::sphere::Weight;

/// Coefficient chopping threshold for grid functions.
const CHOP: f64 = 1e-13;
/// Output change tolerated when the top quarter of the spectrum is dropped.
const RESOLUTION_TOL: f64 = 0.1;

fn sigma_order(spec: &QuadratureSpec) -> Result<usize> {
    spec.validate()?;
    if spec.method != QuadratureMethod::SimplexGauss {
        return Err(Error::InvalidQuadrature("sigma integrals need simplex-gauss".into()));
    }
    Ok(spec.order)
}

/// `E = int s_g^2 dmu` for the deformation by `phi`.
pub fn energy(w: &Weight, phi: &dyn BasicFunction, spec: &QuadratureSpec) -> Result<f64> {
    let order = sigma_order(spec)?;
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    energy_unchecked(&red, phi, order)
}

pub(crate) fn energy_unchecked(red: &Reduced, phi: &dyn BasicFunction, order: usize) -> Result<f64> {
    let v = integrate_sigma(order, |s| {
        let g = red.geometry(phi, s);
        g.s().powi(2) * g.density()
    })?;
    Ok(red.measure_constant() * v)
}

/// Values of a basic function at Chebyshev–Lobatto nodes in `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    pub sigma: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn sample(n: usize, f: impl Fn(f64) -> f64) -> Self {
        let sigma = lobatto_nodes(n);
        let values = sigma.iter().map(|&s| f(s)).collect();
        GridFunction { sigma, values }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::Resolution(1.0));
        }
        Ok(GridFunction { sigma: lobatto_nodes(values.len() - 1), values })
    }

    fn check_nodes(&self) -> Result<()> {
        let expect = lobatto_nodes(self.values.len().saturating_sub(1));
        if self.sigma.len() != self.values.len() || self.sigma.iter().zip(&expect).any(|(a, b)| (a - b).abs() > 1e-14) {
            return Err(Error::InvalidQuadrature("grid is not Chebyshev–Lobatto".into()));
        }
        Ok(())
    }

    pub fn series(&self) -> ChebSeries {
        let mut s = ChebSeries::from_lobatto_values(&self.values);
        s.chop(CHOP);
        s
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `L f` on the nodes of `f`, with `f` interpolated spectrally. Fails with
/// [`Error::Resolution`] when dropping the top quarter of the Chebyshev
/// coefficients changes the output by more than 10% of its norm.
pub fn lichnerowicz_apply(w: &Weight, phi: &dyn BasicFunction, f: &GridFunction) -> Result<GridFunction> {
    f.check_nodes()?;
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    let series = f.series();
    let keep = (3 * series.coeffs.len()).div_ceil(4);
    let full = ChebFunction::new(&series);
    let trunc = ChebFunction::new(&series.truncated(keep));
    let apply = |g: &ChebFunction| -> Vec<f64> {
        f.sigma.iter().map(|&s| red.geometry(phi, s).lichnerowicz(g.jet(s))).collect()
    };
    let out = apply(&full);
    let rough = apply(&trunc);
    let norm = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let noise = out.iter().zip(&rough).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if noise > RESOLUTION_TOL * norm {
        return Err(Error::Resolution(noise / norm));
    }
    Ok(GridFunction { sigma: f.sigma.clone(), values: out })
}

/// `int g L f dmu` for grid functions, through their interpolants.
pub fn lichnerowicz_pairing(w: &Weight, phi: &dyn BasicFunction, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    let red = Reduced::new(w)?;
    let lf = ChebFunction::new(&lichnerowicz_apply(w, phi, f)?.series());
    let gf = ChebFunction::new(&g.series());
    let v = integrate_sigma(2 * f.values.len().max(g.values.len()), |s| {
        gf.value(s) * lf.value(s) * red.geometry(phi, s).density()
    })?;
    Ok(red.measure_constant() * v)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    /// Generalised eigenvalues of `(B, M)`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below `threshold`.
    pub kernel_dim: usize,
    pub threshold: f64,
}

impl KernelReport {
    /// First eigenvalue above the kernel.
    pub fn gap(&self) -> Option<f64> {
        self.eigenvalues.get(self.kernel_dim).copied()
    }
}

/// Chebyshev basis `T_k(2 sigma - 1)`, `k = 0..=degree`.
pub fn chebyshev_basis(degree: usize) -> Vec<ChebFunction> {
    (0..=degree)
        .map(|k| {
            let mut coeffs = vec![0.0; degree + 1];
            coeffs[k] = 1.0;
            ChebFunction::new(&ChebSeries { coeffs })
        })
        .collect()
}

/// Gram matrices `B_ij = int f_i L f_j dmu` and `M_ij = int f_i f_j dmu`
/// on `basis`.
pub fn lichnerowicz_gram(
    w: &Weight,
    phi: &dyn BasicFunction,
    basis: &[ChebFunction],
    order: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    let m = basis.len();
    let c = red.measure_constant();
    let mut b = DMatrix::zeros(m, m);
    let mut mass = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let bij = integrate_sigma(order, |s| {
                let g = red.geometry(phi, s);
                g.lichnerowicz_form(basis[i].jet(s), basis[j].jet(s)) * g.density()
            })?;
            let mij = integrate_sigma(order, |s| {
                basis[i].value(s) * basis[j].value(s) * red.geometry(phi, s).density()
            })?;
            b[(i, j)] = c * bij;
            b[(j, i)] = c * bij;
            mass[(i, j)] = c * mij;
            mass[(j, i)] = c * mij;
        }
    }
    Ok((b, mass))
}

/// Spectrum of `L` on polynomials of degree `<= degree` in `sigma`,
/// mass-orthonormalised.
pub fn lichnerowicz_kernel(w: &Weight, phi: &dyn BasicFunction, degree: usize, threshold: f64) -> Result<KernelReport> {
    let basis = chebyshev_basis(degree);
    let (b, mass) = lichnerowicz_gram(w, phi, &basis, 96)?;
    let chol = mass.cholesky().ok_or_else(|| Error::Solver("mass matrix not positive".into()))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::Solver("singular Cholesky factor".into()))?;
    let a = &linv * b * linv.transpose();
    let sym = (&a + a.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let kernel_dim = eigenvalues.iter().filter(|&&e| e < threshold).count();
    Ok(KernelReport { eigenvalues, kernel_dim, threshold })
}

/// `-4 int s_g L(dir) dmu`, the analytic derivative of `E` along `dir`.
pub fn energy_derivative(w: &Weight, phi: &dyn BasicFunction, dir: &dyn BasicFunction, order: usize) -> Result<f64> {
    let red = Reduced::new(w)?;
    let v = integrate_sigma(order, |s| {
        let g = red.geometry(phi, s);
        g.s() * g.lichnerowicz(dir.jet(s)) * g.density()
    })?;
    Ok(-4.0 * red.measure_constant() * v)
}

pub const VARIATION_STEPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstVariation {
    /// Central difference at the smallest step.
    pub fd_derivative: f64,
    pub analytic: f64,
    pub rel_err: f64,
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    /// Observed order in `t`; `None` when every error is at roundoff.
    pub order: Option<f64>,
}

impl FirstVariation {
    pub fn order_at_least(&self, p: f64) -> bool {
        self.order.is_none_or(|o| o >= p)
    }
}

/// Smallest observed convergence order over consecutive steps, skipping
/// pairs whose finer error already sits below `floor`.
pub fn observed_order(steps: &[f64], errors: &[f64], floor: f64) -> Option<f64> {
    steps
        .windows(2)
        .zip(errors.windows(2))
        .filter(|(_, e)| e[1] > floor)
        .map(|(t, e)| (e[0] / e[1]).ln() / (t[0] / t[1]).ln())
        .reduce(f64::min)
}

pub fn first_variation_check(
    w: &Weight,
    phi: &dyn BasicFunction,
    dir: &dyn BasicFunction,
    spec: &QuadratureSpec,
) -> Result<FirstVariation> {
    let order = sigma_order(spec)?;
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    let analytic = energy_derivative(w, phi, dir, order)?;
    let mut fds = Vec::new();
    let mut e0 = 0.0f64;
    for &t in &VARIATION_STEPS {
        let plus = Shifted { base: phi, dir, t };
        let minus = Shifted { base: phi, dir, t: -t };
        red.check_admissible(&plus)?;
        red.check_admissible(&minus)?;
        let ep = energy_unchecked(&red, &plus, order)?;
        let em = energy_unchecked(&red, &minus, order)?;
        e0 = e0.max(ep.abs());
        fds.push((ep - em) / (2.0 * t));
    }
    let errors: Vec<f64> = fds.iter().map(|f| (f - analytic).abs()).collect();
    let t_min = VARIATION_STEPS[VARIATION_STEPS.len() - 1];
    let floor = 1e3 * f64::EPSILON * e0 / t_min;
    let order = observed_order(&VARIATION_STEPS, &errors, floor);
    let fd_derivative = fds[fds.len() - 1];
    let err = errors[errors.len() - 1];
    let rel_err = if err == 0.0 { 0.0 } else { err / analytic.abs() };
    Ok(FirstVariation { fd_derivative, analytic, rel_err, steps: VARIATION_STEPS.to_vec(), errors, order })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionReport {
    pub steps: Vec<f64>,
    /// `max_sigma |(dmu_t - dmu_{-t}) / (2t dmu) + Delta dir / 2|`.
    pub volume_errors: Vec<f64>,
    /// `max_sigma |(s_t - s_{-t}) / 2t + Delta^2 dir / 2 + 2 (rho, i dd^c dir)|`.
    pub scalar_errors: Vec<f64>,
    pub volume_order: Option<f64>,
    pub scalar_order: Option<f64>,
    /// Magnitudes the errors are measured against.
    pub volume_scale: f64,
    pub scalar_scale: f64,
}

impl ExpansionReport {
    /// Relative errors at the smallest step.
    pub fn relative_errors(&self) -> (f64, f64) {
        let last = self.steps.len() - 1;
        (self.volume_errors[last] / self.volume_scale, self.scalar_errors[last] / self.scalar_scale)
    }
}

/// Pointwise first-order expansions of `dmu` and `s` on a Lobatto grid.
pub fn expansion_check(w: &Weight, phi: &dyn BasicFunction, dir: &dyn BasicFunction, nodes: usize) -> Result<ExpansionReport> {
    let red = Reduced::new(w)?;
    red.check_admissible(phi)?;
    let grid = lobatto_nodes(nodes);
    let mut volume_errors = Vec::new();
    let mut scalar_errors = Vec::new();
    let mut vol_scale = 0.0f64;
    let mut s_scale = 0.0f64;
    for &t in &VARIATION_STEPS {
        let plus = Shifted { base: phi, dir, t };
        let minus = Shifted { base: phi, dir, t: -t };
        red.check_admissible(&plus)?;
        red.check_admissible(&minus)?;
        let (mut ve, mut se) = (0.0f64, 0.0f64);
        for &s in &grid {
            let g = red.geometry(phi, s);
            let gp = red.geometry(&plus, s);
            let gm = red.geometry(&minus, s);
            let dvol = (gp.density() - gm.density()) / (2.0 * t * g.density());
            let ds = (gp.s() - gm.s()) / (2.0 * t);
            let vol_pred = g.volume_variation(dir.jet(s));
            let s_pred = g.scalar_variation(dir.jet(s));
            vol_scale = vol_scale.max(vol_pred.abs()).max(g.density());
            s_scale = s_scale.max(s_pred.abs()).max(g.s().abs());
            ve = ve.max((dvol - vol_pred).abs());
            se = se.max((ds - s_pred).abs());
        }
        volume_errors.push(ve);
        scalar_errors.push(se);
    }
    let t_min = VARIATION_STEPS[VARIATION_STEPS.len() - 1];
    let floor = |scale: f64| 1e3 * f64::EPSILON * scale / t_min;
    Ok(ExpansionReport {
        steps: VARIATION_STEPS.to_vec(),
        volume_order: observed_order(&VARIATION_STEPS, &volume_errors, floor(vol_scale)),
        scalar_order: observed_order(&VARIATION_STEPS, &scalar_errors, floor(s_scale)),
        volume_errors,
        scalar_errors,
        volume_scale: vol_scale,
        scalar_scale: s_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::profile::{BasicProfile, MomentCoordinate};
    use std::f64::consts::PI;

    fn w12() -> Weight {
        Weight::new(vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn round_energy() {
        let e = energy(&Weight::standard(1), &BasicProfile::zero(8), &QuadratureSpec::gauss(64)).unwrap();
        assert!((e - 72.0 * PI * PI).abs() < 1e-9 * e);
    }

    #[test]
    fn weighted_baseline_energy_matches_closed_form_quadrature() {
        let w = w12();
        let closed = crate::quadrature::integrate_invariant(
            &w,
            |r| crate::curvature::scalar_from_radii(&w, r).s.powi(2),
            &QuadratureSpec::gauss(64),
        )
        .unwrap();
        let e = energy(&w, &BasicProfile::zero(8), &QuadratureSpec::gauss(64)).unwrap();
        assert!((e - closed).abs() < 1e-10 * closed);
    }

    #[test]
    fn constants_and_moment_coordinate_are_annihilated() {
        let w = w12();
        let zero = BasicProfile::zero(8);
        let one = lichnerowicz_apply(&w, &zero, &GridFunction::sample(32, |_| 1.0)).unwrap();
        assert!(one.sup_norm() < 1e-10);
        let sig = lichnerowicz_apply(&w, &zero, &GridFunction::sample(32, |s| s)).unwrap();
        assert!(sig.sup_norm() < 1e-3);
    }

    #[test]
    fn unresolved_grid_is_flagged() {
        let w = w12();
        let noisy = GridFunction::sample(16, |s| (40.0 * s).sin());
        assert!(matches!(lichnerowicz_apply(&w, &BasicProfile::zero(1), &noisy), Err(Error::Resolution(_))));
    }

    #[test]
    fn kernel_at_baseline() {
        let rep = lichnerowicz_kernel(&w12(), &BasicProfile::zero(8), 8, 1e-6).unwrap();
        assert_eq!(rep.kernel_dim, 2, "{rep:?}");
        assert!(rep.gap().unwrap() > 1e-3);
        assert!(rep.eigenvalues[0] > -1e-8);
    }

    #[test]
    fn first_variation_along_a_cosine() {
        let w = w12();
        let dir = BasicProfile::new(vec![0.3, -0.2, 0.1]).unwrap();
        let fv = first_variation_check(&w, &BasicProfile::single(8, 1, 0.05).unwrap(), &dir, &QuadratureSpec::gauss(64)).unwrap();
        assert!(fv.rel_err < 1e-2, "{fv:?}");
        assert!(fv.order_at_least(1.9), "{fv:?}");
    }

    #[test]
    fn first_variation_trivial_directions() {
        let w = w12();
        let zero = BasicProfile::zero(8);
        let spec = QuadratureSpec::gauss(64);
        let fv = first_variation_check(&w, &zero, &BasicProfile::zero(8), &spec).unwrap();
        assert_eq!(fv.fd_derivative, 0.0);
        assert_eq!(fv.analytic, 0.0);
        let e = energy(&w, &zero, &spec).unwrap();
        let fv = first_variation_check(&w, &zero, &MomentCoordinate, &spec).unwrap();
        assert!(fv.analytic.abs() < 1e-9 * e && fv.fd_derivative.abs() < 1e-7 * e, "{fv:?}");
    }

    #[test]
    fn expansions_are_second_order() {
        let w = w12();
        let rep = expansion_check(&w, &BasicProfile::zero(8), &BasicProfile::new(vec![0.2, 0.1]).unwrap(), 32).unwrap();
        assert!(rep.volume_order.is_none_or(|o| o >= 1.9), "{rep:?}");
        assert!(rep.scalar_order.is_some_and(|o| o >= 1.9), "{rep:?}");
    }
}
