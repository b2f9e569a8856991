//! Finite-difference Ricci curvature in graph charts, and the closed-form
//! scalar curvature of the weighted structures.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sphere::{graph_chart, ChartCoords, SpherePoint, Weight, CHART_RADIUS};
use crate::structure::homothety_frame;

pub const DEFAULT_STEP: f64 = 1e-3;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub h: f64,
    /// Combine steps `h` and `h/2` as `(4 R(h/2) - R(h)) / 3`.
    pub richardson: bool,
}

impl FdOptions {
    pub fn step(h: f64) -> Self {
        FdOptions { h, richardson: false }
    }
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions::step(DEFAULT_STEP)
    }
}

/// Ricci tensor and scalar curvature at one point, in the graph chart of
/// that point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureData {
    pub ric: DMatrix<f64>,
    pub s: f64,
    pub chart: ChartCoords,
    pub h: f64,
    /// Chart metric at the evaluation point.
    pub metric: DMatrix<f64>,
}

impl CurvatureData {
    /// `Ric(X, Y)` for ambient tangent vectors.
    pub fn ricci(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let xc = self.chart.components(x);
        let yc = self.chart.components(y);
        xc.dot(&(&self.ric * yc))
    }

    /// Chart components of an ambient covector.
    pub fn pullback(&self, covector: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.chart.jacobian()?.transpose() * covector)
    }
}

fn chart_metric<F>(field: &F, chart: &ChartCoords, u: &DVector<f64>) -> Result<DMatrix<f64>>
where
    F: Fn(&SpherePoint) -> Result<DMatrix<f64>>,
{
    let c = chart.at(u.clone());
    let g = field(&c.to_point()?)?;
    let jac = c.jacobian()?;
    Ok(jac.transpose() * g * jac)
}

fn check_condition(g: &DMatrix<f64>) -> Result<()> {
    let eig = g.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 0.0 || !lo.is_finite() {
        return Err(Error::SingularMetric(f64::INFINITY));
    }
    if hi / lo > MAX_CONDITION {
        return Err(Error::SingularMetric(hi / lo));
    }
    Ok(())
}

/// `Gamma[a][(b, c)]` at `u`, with first derivatives of the metric by
/// central differences.
fn christoffel<F>(field: &F, chart: &ChartCoords, u: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>>
where
    F: Fn(&SpherePoint) -> Result<DMatrix<f64>>,
{
    let m = u.len();
    let g = chart_metric(field, chart, u)?;
    check_condition(&g)?;
    let ginv = g.clone().try_inverse().ok_or(Error::SingularMetric(f64::INFINITY))?;
    let mut dg = Vec::with_capacity(m);
    for j in 0..m {
        let mut up = u.clone();
        up[j] += h;
        let mut dn = u.clone();
        dn[j] -= h;
        dg.push((chart_metric(field, chart, &up)? - chart_metric(field, chart, &dn)?) / (2.0 * h));
    }
    // lowered[d][(b, c)] = 1/2 (d_b G_dc + d_c G_db - d_d G_bc)
    let lowered: Vec<DMatrix<f64>> = (0..m)
        .map(|d| DMatrix::from_fn(m, m, |b, c| 0.5 * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)])))
        .collect();
    Ok((0..m)
        .map(|a| {
            let mut out = DMatrix::zeros(m, m);
            for (d, low) in lowered.iter().enumerate() {
                out += low * ginv[(a, d)];
            }
            out
        })
        .collect())
}

fn ricci_at_step<F>(field: &F, chart: &ChartCoords, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&SpherePoint) -> Result<DMatrix<f64>> + Sync,
{
    let m = chart.dim();
    let u = &chart.u;
    // Stencil: centre, then u +- h e_k for each k.
    let offsets: Vec<DVector<f64>> = std::iter::once(u.clone())
        .chain((0..m).flat_map(|k| {
            [1.0, -1.0].into_iter().map(move |s| {
                let mut v = u.clone();
                v[k] += s * h;
                v
            })
        }))
        .collect();
    let gammas: Vec<Vec<DMatrix<f64>>> = offsets
        .par_iter()
        .map(|v| christoffel(field, chart, v, h))
        .collect::<Result<_>>()?;
    let gamma = &gammas[0];
    // dgamma[k][a] = d_k Gamma^a
    let dgamma: Vec<Vec<DMatrix<f64>>> = (0..m)
        .map(|k| (0..m).map(|a| (&gammas[1 + 2 * k][a] - &gammas[2 + 2 * k][a]) / (2.0 * h)).collect())
        .collect();
    // Ric_bd = d_a G^a_db - d_d G^a_ab + G^a_ae G^e_db - G^a_de G^e_ab
    let ric = DMatrix::from_fn(m, m, |b, d| {
        let mut r = 0.0;
        for a in 0..m {
            r += dgamma[a][a][(d, b)] - dgamma[d][a][(a, b)];
            for e in 0..m {
                r += gamma[a][(a, e)] * gamma[e][(d, b)] - gamma[a][(d, e)] * gamma[e][(a, b)];
            }
        }
        r
    });
    Ok((&ric + ric.transpose()) * 0.5)
}

/// Ricci and scalar curvature of the ambient metric field `metric_field` at
/// `at`. The field maps a sphere point to a `(2n+2)`-square matrix whose
/// restriction to tangent vectors is the metric.
pub fn curvature_fd<F>(metric_field: F, at: &SpherePoint, h: f64) -> Result<CurvatureData>
where
    F: Fn(&SpherePoint) -> Result<DMatrix<f64>> + Sync,
{
    curvature_fd_with(metric_field, at, FdOptions::step(h))
}

pub fn curvature_fd_with<F>(metric_field: F, at: &SpherePoint, opts: FdOptions) -> Result<CurvatureData>
where
    F: Fn(&SpherePoint) -> Result<DMatrix<f64>> + Sync,
{
    let h = opts.h;
    if !(1e-5..=1e-2).contains(&h) {
        return Err(Error::InvalidStep(h));
    }
    let chart = graph_chart(at)?;
    // Farthest stencil point sits at sqrt(2) * 2h from the centre.
    let reach = 2.0 * std::f64::consts::SQRT_2 * h;
    if reach > CHART_RADIUS {
        return Err(Error::ChartBall(reach));
    }
    let margin = chart.u.norm() + reach;
    if margin >= 1.0 {
        return Err(Error::ChartBall(margin));
    }
    let metric = chart_metric(&metric_field, &chart, &chart.u)?;
    check_condition(&metric)?;
    let ric = if opts.richardson {
        let coarse = ricci_at_step(&metric_field, &chart, h)?;
        let fine = ricci_at_step(&metric_field, &chart, 0.5 * h)?;
        (fine * 4.0 - coarse) / 3.0
    } else {
        ricci_at_step(&metric_field, &chart, h)?
    };
    let ginv = metric.clone().try_inverse().ok_or(Error::SingularMetric(f64::INFINITY))?;
    let s = (&ginv * &ric).trace();
    if !s.is_finite() {
        return Err(Error::NonFinite("scalar curvature".into()));
    }
    Ok(CurvatureData { ric, s, chart, h, metric })
}

/// Closed-form scalar curvatures of `g_w` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarReport {
    pub s_transverse: f64,
    pub s: f64,
    pub s_minus_s0: f64,
    pub s0: f64,
}

/// `s^T = 4(n+1) sum_j w_j (2W - (n+2) w_j) r_j / D`, `s = s^T - 2n`,
/// `s0 = 2n(2W - 1)` and `s - s0 = 4(n+2) sum_j w_j (W - (n+1) w_j) r_j / D`.
pub fn scalar_closed(w: &Weight, p: &SpherePoint) -> ScalarReport {
    scalar_from_radii(w, &p.radii())
}

pub fn scalar_from_radii(w: &Weight, r: &[f64]) -> ScalarReport {
    let n = w.n() as f64;
    let total = w.total();
    let d = w.pairing(r);
    let e = w.entries();
    let st: f64 = e.iter().zip(r).map(|(wj, rj)| wj * (2.0 * total - (n + 2.0) * wj) * rj).sum();
    let diff: f64 = e.iter().zip(r).map(|(wj, rj)| wj * (total - (n + 1.0) * wj) * rj).sum();
    let s_transverse = 4.0 * (n + 1.0) * st / d;
    ScalarReport {
        s_transverse,
        s: s_transverse - 2.0 * n,
        s_minus_s0: 4.0 * (n + 2.0) * diff / d,
        s0: mean_scalar(w),
    }
}

/// Volume mean of the scalar curvature, `2n(2W - 1)`.
pub fn mean_scalar(w: &Weight) -> f64 {
    2.0 * w.n() as f64 * (2.0 * w.total() - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaEinstein {
    pub lambda: f64,
    pub nu: f64,
    pub res: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EinsteinReport {
    /// `max |Ric - 2n g|` over chart components.
    pub einstein_res: f64,
    pub eta_einstein: EtaEinstein,
    /// `max_X |Ric(X, xi) - 2n eta(X)|` over chart coordinate vectors.
    pub reeb_res: f64,
}

/// Einstein and eta-Einstein residuals of the homothety-scaled structure
/// `(w, a)` at `p`. The eta-Einstein fit imposes `lambda + nu = 2n`.
pub fn einstein_residuals(w: &Weight, a: f64, p: &SpherePoint, h: f64) -> Result<EinsteinReport> {
    let frame = homothety_frame(w, a, p)?;
    let data = curvature_fd(|q| Ok(homothety_frame(w, a, q)?.g), p, h)?;
    let two_n = 2.0 * w.n() as f64;
    let g = &data.metric;
    let eta = data.pullback(&frame.eta)?;
    let xi = data.chart.components(&frame.xi);

    let einstein_res = (&data.ric - g * two_n).amax();
    let reeb_res = (&data.ric * xi - &eta * two_n).amax();
    let etaeta = &eta * eta.transpose();
    let lhs = &data.ric - &etaeta * two_n;
    let basis = g - &etaeta;
    let lambda = lhs.dot(&basis) / basis.norm_squared();
    let res = (lhs - basis * lambda).amax();
    Ok(EinsteinReport {
        einstein_res,
        eta_einstein: EtaEinstein { lambda, nu: two_n - lambda, res },
        reeb_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::random_sphere_point;
    use crate::structure::sasaki_metric;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn metric_of(w: &Weight) -> impl Fn(&SpherePoint) -> Result<DMatrix<f64>> + Sync + '_ {
        move |q| Ok(sasaki_metric(w, q)?.g)
    }

    #[test]
    fn round_three_sphere_is_einstein() {
        let w = Weight::standard(1);
        for seed in 0..5 {
            let p = random_sphere_point(1, seed).unwrap();
            let c = curvature_fd(metric_of(&w), &p, 1e-3).unwrap();
            assert!((&c.ric - &c.metric * 2.0).amax() < 5e-4);
            assert!((c.s - 6.0).abs() < 5e-3);
            assert!((&c.ric - c.ric.transpose()).amax() < 1e-9);
        }
    }

    #[test]
    fn round_five_sphere_scalar() {
        let w = Weight::standard(2);
        let p = random_sphere_point(2, 11).unwrap();
        let c = curvature_fd(metric_of(&w), &p, 1e-3).unwrap();
        assert!((c.s - 20.0).abs() < 5e-3, "{}", c.s);
    }

    #[test]
    fn weighted_scalar_matches_closed_form() {
        let w = Weight::new(vec![1.0, 2.0]).unwrap();
        for seed in 0..5 {
            let p = random_sphere_point(1, 100 + seed).unwrap();
            let c = curvature_fd(metric_of(&w), &p, 1e-3).unwrap();
            let closed = scalar_closed(&w, &p);
            assert!((c.s - closed.s).abs() / closed.s.abs() < 1e-3, "{} vs {}", c.s, closed.s);
        }
    }

    #[test]
    fn richardson_beats_plain_central() {
        let w = Weight::new(vec![1.0, 2.5]).unwrap();
        let p = random_sphere_point(1, 5).unwrap();
        let exact = scalar_closed(&w, &p).s;
        let plain = curvature_fd(metric_of(&w), &p, 4e-3).unwrap().s;
        let rich = curvature_fd_with(metric_of(&w), &p, FdOptions { h: 4e-3, richardson: true }).unwrap().s;
        assert!((rich - exact).abs() < 0.1 * (plain - exact).abs());
    }

    #[test]
    fn step_outside_range_is_rejected() {
        let w = Weight::standard(1);
        let p = random_sphere_point(1, 0).unwrap();
        assert!(matches!(curvature_fd(metric_of(&w), &p, 1e-6), Err(Error::InvalidStep(_))));
        assert!(matches!(curvature_fd(metric_of(&w), &p, 0.5), Err(Error::InvalidStep(_))));
    }

    #[test]
    fn singular_metric_is_rejected() {
        let p = random_sphere_point(1, 0).unwrap();
        let flat = |_: &SpherePoint| Ok(DMatrix::zeros(4, 4));
        assert!(matches!(curvature_fd(flat, &p, 1e-3), Err(Error::SingularMetric(_))));
    }

    #[test]
    fn closed_form_spot_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=3 {
            for l in [0.5, 1.0, 2.7] {
                let w = Weight::new(vec![l; n + 1]).unwrap();
                let p = crate::sphere::sample_sphere(n, &mut rng);
                let r = scalar_closed(&w, &p);
                let nf = n as f64;
                assert!((r.s_transverse - 4.0 * (nf + 1.0) * nf * l).abs() < 1e-12 * r.s_transverse);
            }
            let r = scalar_closed(&Weight::standard(n), &crate::sphere::sample_sphere(n, &mut rng));
            assert!(r.s_minus_s0.abs() < 1e-12);
        }
        assert_eq!(mean_scalar(&Weight::standard(1)), 6.0);
        assert_eq!(mean_scalar(&Weight::standard(2)), 20.0);
        assert_eq!(mean_scalar(&Weight::new(vec![1.0, 2.0]).unwrap()), 10.0);
    }

    #[test]
    fn closed_forms_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let n = rng.random_range(1..=3);
            let w = Weight::new((0..=n).map(|_| rng.random_range(0.5..3.0)).collect()).unwrap();
            let p = crate::sphere::sample_sphere(n, &mut rng);
            let r = scalar_closed(&w, &p);
            assert_eq!(r.s, r.s_transverse - 2.0 * n as f64);
            assert!((r.s - r.s0 - r.s_minus_s0).abs() < 1e-12 * r.s_transverse.abs().max(1.0));
        }
    }

    #[test]
    fn reeb_direction_ricci() {
        let w = Weight::new(vec![1.3, 0.7]).unwrap();
        let p = random_sphere_point(1, 21).unwrap();
        let rep = einstein_residuals(&w, 1.0, &p, 1e-3).unwrap();
        assert!(rep.reeb_res < 5e-4, "{rep:?}");
        assert!(rep.einstein_res > 1e-2);
    }

    #[test]
    fn homogeneous_weights_are_eta_einstein() {
        for l in [0.5, 1.0, 2.0] {
            let w = Weight::new(vec![l, l]).unwrap();
            let p = random_sphere_point(1, 3).unwrap();
            let rep = einstein_residuals(&w, 1.0, &p, 1e-3).unwrap();
            assert!((rep.eta_einstein.lambda - (4.0 * l - 2.0)).abs() < 5e-4, "{rep:?}");
            assert!(rep.eta_einstein.res < 5e-4);
        }
    }

    #[test]
    fn homothety_scaling_of_scalar_curvature() {
        let w = Weight::new(vec![1.0, 1.8]).unwrap();
        let p = random_sphere_point(1, 8).unwrap();
        let base = curvature_fd(metric_of(&w), &p, 1e-3).unwrap().s;
        for a in [0.6, 1.7] {
            let scaled = curvature_fd(|q| Ok(homothety_frame(&w, a, q)?.g), &p, 1e-3).unwrap().s;
            let expect = (base + 2.0) / a;
            assert!(((scaled + 2.0) - expect).abs() / expect.abs() < 1e-3);
        }
    }

    #[test]
    fn second_order_convergence() {
        let w = Weight::new(vec![1.0, 2.3]).unwrap();
        let p = random_sphere_point(1, 2).unwrap();
        let exact = scalar_closed(&w, &p).s;
        let e1 = (curvature_fd(metric_of(&w), &p, 4e-3).unwrap().s - exact).abs();
        let e2 = (curvature_fd(metric_of(&w), &p, 2e-3).unwrap().s - exact).abs();
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
