//! Truncated Taylor series in one variable.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const JET_LEN: usize = 12;

/// Taylor coefficients `a_k = f^(k)(s0) / k!`. `valid` counts how many
/// leading coefficients are exact; it shrinks under differentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; JET_LEN],
    valid: usize,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = v;
        Jet { c, valid: JET_LEN }
    }

    /// The identity function expanded at `s0`.
    pub fn variable(s0: f64) -> Self {
        let mut j = Jet::constant(s0);
        j.c[1] = 1.0;
        j
    }

    /// From derivative values `f(s0), f'(s0), ...`.
    pub fn from_derivatives(d: &[f64]) -> Self {
        let mut c = [0.0; JET_LEN];
        let mut fact = 1.0;
        let valid = d.len().min(JET_LEN);
        for (k, dk) in d.iter().take(JET_LEN).enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            c[k] = dk / fact;
        }
        Jet { c, valid }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        assert!(k < self.valid, "jet derivative {k} beyond valid order {}", self.valid);
        self.c[k] * (1..=k).map(|i| i as f64).product::<f64>()
    }

    pub fn valid(&self) -> usize {
        self.valid
    }

    pub fn deriv(&self) -> Jet {
        let mut c = [0.0; JET_LEN];
        for k in 0..JET_LEN - 1 {
            c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Jet { c, valid: self.valid.saturating_sub(1) }
    }

    pub fn scale(&self, a: f64) -> Jet {
        let mut out = *self;
        out.c.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn recip(&self) -> Jet {
        Jet::constant(1.0) / *self
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(a, b)| *a += b);
        Jet { c, valid: self.valid.min(o.valid) }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for i in 0..JET_LEN {
            for j in 0..JET_LEN - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c, valid: self.valid.min(o.valid) }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut q = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= o.c[j] * q[k - j];
            }
            q[k] = acc / o.c[0];
        }
        Jet { c: q, valid: self.valid.min(o.valid) }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, v: f64) -> Jet {
        let mut out = self;
        out.c[0] += v;
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.scale(v)
    }
}
