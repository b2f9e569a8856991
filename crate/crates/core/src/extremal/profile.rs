//! Torus-invariant basic functions of the moment coordinate `sigma`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use super::chebyshev::ChebSeries;
use super::jet::{Jet, JET_LEN};
use crate::error::{Error, Result};

pub const MAX_PROFILE_LEN: usize = 16;
pub const DEFAULT_PROFILE_LEN: usize = 8;

/// A basic function on the sphere, given through `sigma`.
pub trait BasicFunction: Sync {
    /// Taylor jet in `sigma` at `sigma`.
    fn jet(&self, sigma: f64) -> Jet;

    fn value(&self, sigma: f64) -> f64 {
        self.jet(sigma).value()
    }
}

/// `phi(sigma) = sum_{k=1..K} c_k cos(k pi sigma)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicProfile {
    pub coeffs: Vec<f64>,
}

impl BasicProfile {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > MAX_PROFILE_LEN {
            return Err(Error::ProfileTooLong(coeffs.len()));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("profile coefficient {bad}")));
        }
        Ok(BasicProfile { coeffs })
    }

    pub fn zero(k: usize) -> Self {
        BasicProfile { coeffs: vec![0.0; k] }
    }

    /// `amp * cos(k pi sigma)` padded to `len` coefficients.
    pub fn single(len: usize, k: usize, amp: f64) -> Result<Self> {
        let mut coeffs = vec![0.0; len.max(k)];
        coeffs[k - 1] = amp;
        BasicProfile::new(coeffs)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn resized(&self, len: usize) -> Result<Self> {
        let mut coeffs = self.coeffs.clone();
        if coeffs[len.min(coeffs.len())..].iter().any(|&c| c != 0.0) {
            return Err(Error::ProfileTooLong(coeffs.len()));
        }
        coeffs.resize(len, 0.0);
        BasicProfile::new(coeffs)
    }

    pub fn axpy(&self, t: f64, dir: &BasicProfile) -> BasicProfile {
        let len = self.len().max(dir.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        BasicProfile { coeffs: (0..len).map(|i| get(&self.coeffs, i) + t * get(&dir.coeffs, i)).collect() }
    }
}

impl BasicFunction for BasicProfile {
    fn jet(&self, sigma: f64) -> Jet {
        let mut d = [0.0; JET_LEN];
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let a = (i + 1) as f64 * PI;
            let mut pow = 1.0;
            for (m, dm) in d.iter_mut().enumerate() {
                *dm += c * pow * (a * sigma + m as f64 * FRAC_PI_2).cos();
                pow *= a;
            }
        }
        Jet::from_derivatives(&d)
    }
}

/// The moment coordinate `sigma` itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentCoordinate;

impl BasicFunction for MomentCoordinate {
    fn jet(&self, sigma: f64) -> Jet {
        Jet::variable(sigma)
    }
}

/// `base + t * dir`.
pub struct Shifted<'a> {
    pub base: &'a dyn BasicFunction,
    pub dir: &'a dyn BasicFunction,
    pub t: f64,
}

impl BasicFunction for Shifted<'_> {
    fn jet(&self, sigma: f64) -> Jet {
        self.base.jet(sigma) + self.dir.jet(sigma) * self.t
    }
}

/// A Chebyshev series with its derivatives precomputed.
#[derive(Debug, Clone)]
pub struct ChebFunction {
    tower: Vec<ChebSeries>,
}

impl ChebFunction {
    pub fn new(series: &ChebSeries) -> Self {
        ChebFunction { tower: series.derivative_tower(JET_LEN - 1) }
    }
}

impl BasicFunction for ChebFunction {
    fn jet(&self, sigma: f64) -> Jet {
        let d: Vec<f64> = self.tower.iter().map(|s| s.eval(sigma)).collect();
        Jet::from_derivatives(&d)
    }
}
