//! Integration against `dmu_{g_w}` on the sphere.
//!
//! Two facts reduce torus-invariant integrals to the simplex:
//!
//! * `dmu_{g_w} = D^{-(n+1)} dmu_round`, because
//!   `eta_w ^ (d eta_w)^n = eta ^ (d eta)^n / D^{n+1}` (the `dD ^ eta` term dies
//!   against `eta`);
//! * for `F` depending only on `r_k = |z_k|^2`,
//!   `int_S F dmu_round = 2 pi^{n+1} int_{Delta_n} F dr_1 ... dr_n`, since
//!   `z_k = sqrt(r_k) e^{i theta_k}` gives `dmu_round = 2^{-n} dr dtheta` on the
//!   sphere and the `n+1` angles contribute `(2 pi)^{n+1}`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{sample_sphere, SpherePoint, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureMethod {
    SimplexGauss,
    SphereMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    /// Gauss nodes per axis, or Monte Carlo sample count.
    pub order: usize,
    pub seed: u64,
}

impl QuadratureSpec {
    pub fn gauss(order: usize) -> Self {
        QuadratureSpec { method: QuadratureMethod::SimplexGauss, order, seed: 0 }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        QuadratureSpec { method: QuadratureMethod::SphereMc, order: samples, seed }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            QuadratureMethod::SimplexGauss if self.order < 2 => {
                Err(Error::InvalidQuadrature(format!("gauss order {} < 2", self.order)))
            }
            QuadratureMethod::SphereMc if self.order < 1000 => {
                Err(Error::InvalidQuadrature(format!("{} samples < 1000", self.order)))
            }
            _ => Ok(()),
        }
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::gauss(64)
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let m = order;
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m.
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        dp = if d != 0.0 { d } else { dp };
        let wgt = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * wgt;
        weights[m - 1 - i] = 0.5 * wgt;
    }
    (nodes, weights)
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Tensor Gauss rule on the simplex `{r in R_+^{n+1} : sum r = 1}` via the
/// collapsed (Duffy) map. Returns points `r` and weights for `dr_1 ... dr_n`.
pub fn simplex_rule(n: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    let (t, wt) = gauss_legendre(order);
    let total = order.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut r = vec![0.0; n + 1];
        let mut remaining = 1.0;
        let mut weight = 1.0;
        for (axis, &i) in idx.iter().enumerate() {
            // Jacobian of r_k = t_k prod_{j<k} (1 - t_j).
            r[axis + 1] = remaining * t[i];
            weight *= wt[i] * remaining;
            remaining *= 1.0 - t[i];
        }
        r[0] = remaining;
        out.push((r, weight));
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < order {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

/// `int_{S^{2n+1}} f(r(z)) dmu_{g_w}` for torus-invariant `f`, by tensor
/// Gauss–Legendre on the simplex.
pub fn integrate_invariant<F>(w: &Weight, f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    if spec.method != QuadratureMethod::SimplexGauss {
        return Err(Error::InvalidQuadrature("integrate_invariant needs simplex-gauss".into()));
    }
    let n = w.n();
    let rule = simplex_rule(n, spec.order);
    let power = -(n as i32 + 1);
    let terms: Vec<f64> = rule
        .par_iter()
        .map(|(r, wt)| wt * f(r) * w.pairing(r).powi(power))
        .collect();
    if let Some(bad) = terms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("simplex node {:?}", rule[bad].0)));
    }
    Ok(2.0 * PI.powi(n as i32 + 1) * pairwise_sum(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

const MC_CHUNK: usize = 1 << 14;

/// Uniform-sampling Monte Carlo estimate of `int f dmu_{g_w}`. Chunk `c` draws
/// from ChaCha stream `c`, so results do not depend on the thread count.
pub fn integrate_mc<F>(w: &Weight, f: F, spec: &QuadratureSpec) -> Result<McEstimate>
where
    F: Fn(&SpherePoint) -> f64 + Sync,
{
    spec.validate()?;
    if spec.method != QuadratureMethod::SphereMc {
        return Err(Error::InvalidQuadrature("integrate_mc needs sphere-mc".into()));
    }
    let n = w.n();
    let samples = spec.order;
    let chunks = samples.div_ceil(MC_CHUNK);
    let power = -(n as i32 + 1);
    let values: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(c as u64);
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            (0..len)
                .map(|_| {
                    let p = sample_sphere(n, &mut rng);
                    f(&p) * w.pairing(&p.radii()).powi(power)
                })
                .collect()
        })
        .collect();
    let values: Vec<f64> = values.into_iter().flatten().collect();
    let mean = pairwise_sum(&values) / samples as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (samples as f64 - 1.0);
    let vol = round_volume(n);
    Ok(McEstimate { value: vol * mean, stderr: vol * (var / samples as f64).sqrt() })
}

/// Volume of the round unit sphere S^{2n+1}, `2 pi^{n+1} / n!`.
pub fn round_volume(n: usize) -> f64 {
    2.0 * PI.powi(n as i32 + 1) / factorial(n)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeReport {
    pub closed: f64,
    pub numeric: f64,
}

impl VolumeReport {
    pub fn relative_error(&self) -> f64 {
        (self.closed - self.numeric).abs() / self.closed
    }
}

/// `mu_{g_w}(S^{2n+1}) = 2 pi^{n+1} / (n! prod w_j)`, with its quadrature check.
pub fn volume_closed(w: &Weight) -> f64 {
    round_volume(w.n()) / w.product()
}

pub fn volume(w: &Weight) -> Result<VolumeReport> {
    volume_with(w, &QuadratureSpec::gauss(64))
}

pub fn volume_with(w: &Weight, spec: &QuadratureSpec) -> Result<VolumeReport> {
    Ok(VolumeReport { closed: volume_closed(w), numeric: integrate_invariant(w, |_| 1.0, spec)? })
}

/// `int_{R_+^n} f(x) dx` via `x = u / (1 - u)` on each axis and tensor
/// Gauss–Legendre in `u` (graded towards `u = 1` when `n >= 2`).
pub fn integrate_orthant<F>(n: usize, integrand: F, order: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if order < 2 {
        return Err(Error::InvalidQuadrature(format!("orthant order {order} < 2")));
    }
    let (v, wv) = gauss_legendre(order);
    // For n >= 2 the joint tail at the far corner of the unit cube is
    // singular of degree 1 - n in (1 - u); grading u = 1 - (1 - v)^p with
    // p = n + 2 makes it vanish to second order.
    let p = if n == 1 { 1 } else { n as i32 + 2 };
    // Keep the complement 1 - u exactly; u itself rounds to 1 near the corner.
    let (gap, wu): (Vec<f64>, Vec<f64>) = v
        .iter()
        .zip(&wv)
        .map(|(&v, &w)| ((1.0 - v).powi(p), w * p as f64 * (1.0 - v).powi(p - 1)))
        .unzip();
    let total = order.pow(n as u32);
    let terms: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut x = vec![0.0; n];
            let mut weight = 1.0;
            for xi in x.iter_mut().rev() {
                let i = rem % order;
                rem /= order;
                let s = gap[i];
                *xi = (1.0 - s) / s;
                weight *= wu[i] / (s * s);
            }
            weight * integrand(&x)
        })
        .collect();
    if let Some(bad) = terms.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("orthant node {bad}")));
    }
    Ok(pairwise_sum(&terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for k in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-15, "k={k}");
        }
    }

    #[test]
    fn simplex_rule_has_the_right_area() {
        for n in 1..=3 {
            let rule = simplex_rule(n, 6);
            let area: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((area - 1.0 / factorial(n)).abs() < 1e-14, "n={n}");
            for (r, _) in &rule {
                assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-14);
                assert!(r.iter().all(|&v| v > 0.0));
            }
        }
        // int r_1 r_2 over the 2-simplex is 1/24.
        let q: f64 = simplex_rule(2, 4).iter().map(|(r, w)| w * r[1] * r[2]).sum();
        assert!((q - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn volume_spot_values() {
        let round3 = volume(&Weight::standard(1)).unwrap();
        assert!((round3.numeric - 2.0 * PI * PI).abs() < 1e-12);
        let w12 = Weight::new(vec![1.0, 2.0]).unwrap();
        let v = integrate_invariant(&w12, |_| 1.0, &QuadratureSpec::gauss(32)).unwrap();
        // 2 pi^2 int_0^1 (2 - r)^{-2} dr = pi^2
        assert!((v - PI * PI).abs() < 1e-10);
        let round5 = volume(&Weight::standard(2)).unwrap();
        assert!((round5.closed - PI.powi(3)).abs() < 1e-12);
        assert!(round5.relative_error() < 1e-12);
        let w22 = volume(&Weight::new(vec![2.0, 2.0]).unwrap()).unwrap();
        assert!((w22.closed - PI * PI / 2.0).abs() < 1e-12 && w22.relative_error() < 1e-8);
        let w13 = volume(&Weight::new(vec![1.0, 3.0]).unwrap()).unwrap();
        assert!((w13.closed - 2.0 * PI * PI / 3.0).abs() < 1e-12 && w13.relative_error() < 1e-8);
    }

    #[test]
    fn orthant_exponential() {
        let v = integrate_orthant(1, |x| (-x[0]).exp(), 64).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "{v}");
        let v2 = integrate_orthant(2, |x| (-x[0] - x[1]).exp(), 48).unwrap();
        assert!((v2 - 1.0).abs() < 1e-10, "{v2}");
    }

    #[test]
    fn orthant_inner_futaki_integral() {
        // int_0^inf (1 - 2x)/(1 + 2x)^4 dx = 1/12 (antiderivative oracle).
        let v = integrate_orthant(1, |x| (1.0 - 2.0 * x[0]) / (1.0 + 2.0 * x[0]).powi(4), 64).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn orthant_reports_non_finite() {
        assert!(matches!(integrate_orthant(1, |x| 1.0 / (x[0] - x[0]), 8), Err(Error::NonFinite(_))));
    }

    #[test]
    fn mc_is_seed_deterministic_and_close() {
        let w = Weight::standard(1);
        let spec = QuadratureSpec::monte_carlo(200_000, 3);
        let a = integrate_mc(&w, |_| 1.0, &spec).unwrap();
        let b = integrate_mc(&w, |_| 1.0, &spec).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        // f = 1 on the round sphere has zero variance.
        assert!((a.value - 2.0 * PI * PI).abs() < 1e-9);
        let w12 = Weight::new(vec![1.0, 2.0]).unwrap();
        let c = integrate_mc(&w12, |_| 1.0, &spec).unwrap();
        assert!((c.value - PI * PI).abs() < 4.0 * c.stderr, "{c:?}");
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::gauss(1).validate().is_err());
        assert!(QuadratureSpec::monte_carlo(999, 0).validate().is_err());
        assert!(QuadratureSpec::monte_carlo(1000, 0).validate().is_ok());
    }
}
