//! Chebyshev series on `[0, 1]` in the variable `x = 2 sigma - 1`.

use std::f64::consts::PI;

/// Chebyshev–Lobatto nodes `sigma_j = (1 - cos(j pi / n)) / 2`, increasing.
pub fn lobatto_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|j| 0.5 * (1.0 - (j as f64 * PI / n as f64).cos())).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChebSeries {
    pub coeffs: Vec<f64>,
}

impl ChebSeries {
    /// Interpolant through values at [`lobatto_nodes`].
    pub fn from_lobatto_values(values: &[f64]) -> Self {
        let n = values.len() - 1;
        let nf = n as f64;
        let coeffs = (0..=n)
            .map(|k| {
                let mut acc = 0.0;
                for (j, v) in values.iter().enumerate() {
                    // x_j = -cos(j pi / n) = cos((n - j) pi / n)
                    let t = ((k * (n - j)) as f64 * PI / nf).cos();
                    let half = if j == 0 || j == n { 0.5 } else { 1.0 };
                    acc += half * v * t;
                }
                let scale = if k == 0 || k == n { 1.0 / nf } else { 2.0 / nf };
                scale * acc
            })
            .collect();
        ChebSeries { coeffs }
    }

    pub fn eval(&self, sigma: f64) -> f64 {
        let x = 2.0 * sigma - 1.0;
        let (mut b1, mut b2) = (0.0, 0.0);
        for &a in self.coeffs.iter().skip(1).rev() {
            let b0 = a + 2.0 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        self.coeffs.first().copied().unwrap_or(0.0) + x * b1 - b2
    }

    /// `d/d sigma`.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n <= 1 {
            return ChebSeries { coeffs: vec![0.0] };
        }
        let a = &self.coeffs;
        let mut c = vec![0.0; n + 1];
        for k in (1..n).rev() {
            c[k - 1] = c[k + 1] + 2.0 * k as f64 * a[k];
        }
        c[0] *= 0.5;
        c.truncate(n - 1);
        // dx / d sigma = 2
        c.iter_mut().for_each(|v| *v *= 2.0);
        ChebSeries { coeffs: c }
    }

    /// Antiderivative in `sigma` vanishing at `sigma = 0`.
    pub fn integral(&self) -> Self {
        let n = self.coeffs.len();
        let a = |k: usize| self.coeffs.get(k).copied().unwrap_or(0.0);
        let mut c = vec![0.0; n + 1];
        c[1] = a(0) - 0.5 * a(2);
        for (k, ck) in c.iter_mut().enumerate().skip(2) {
            *ck = (a(k - 1) - a(k + 1)) / (2.0 * k as f64);
        }
        // d sigma = dx / 2
        c.iter_mut().for_each(|v| *v *= 0.5);
        let mut out = ChebSeries { coeffs: c };
        let at0 = out.eval(0.0);
        out.coeffs[0] -= at0;
        out
    }

    /// Zero out coefficients below `tol * max |a_k|`.
    pub fn chop(&mut self, tol: f64) {
        let scale = self.coeffs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for v in &mut self.coeffs {
            if v.abs() < tol * scale {
                *v = 0.0;
            }
        }
    }

    /// Same series with every coefficient of index `>= keep` dropped.
    pub fn truncated(&self, keep: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.iter_mut().skip(keep).for_each(|v| *v = 0.0);
        ChebSeries { coeffs }
    }

    /// The series and its first `order` derivatives.
    pub fn derivative_tower(&self, order: usize) -> Vec<ChebSeries> {
        let mut out = vec![self.clone()];
        for _ in 0..order {
            let next = out.last().expect("non-empty").derivative();
            out.push(next);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_polynomials() {
        let nodes = lobatto_nodes(8);
        let f = |s: f64| 3.0 * s.powi(3) - s + 0.5;
        let c = ChebSeries::from_lobatto_values(&nodes.iter().map(|&s| f(s)).collect::<Vec<_>>());
        for s in [0.0, 0.13, 0.5, 0.97, 1.0] {
            assert!((c.eval(s) - f(s)).abs() < 1e-14);
            assert!((c.derivative().eval(s) - (9.0 * s * s - 1.0)).abs() < 1e-13);
            assert!((c.integral().eval(s) - (0.75 * s.powi(4) - 0.5 * s * s + 0.5 * s)).abs() < 1e-14);
        }
        assert!(c.coeffs[4..].iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn spectral_accuracy_for_cosines() {
        let nodes = lobatto_nodes(64);
        let a = 5.0 * PI;
        let c = ChebSeries::from_lobatto_values(&nodes.iter().map(|&s| (a * s).cos()).collect::<Vec<_>>());
        let tower = c.derivative_tower(2);
        for s in [0.0, 0.21, 0.77, 1.0] {
            assert!((tower[0].eval(s) - (a * s).cos()).abs() < 1e-13);
            let e2 = (tower[2].eval(s) + a * a * (a * s).cos()).abs();
            assert!(e2 < 1e-9 * a * a, "{s} {e2:e}");
        }
    }
}
