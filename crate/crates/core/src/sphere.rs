//! The unit sphere S^{2n+1} in C^{n+1}: points, tangent vectors, weights and
//! the graph-chart atlas used by every finite-difference kernel.
//!
//! Ambient vectors are stored interleaved, `(x_0, y_0, x_1, y_1, ...)`, so that
//! multiplication by `i` is block diagonal.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit-norm constraint.
pub const SPHERE_TOL: f64 = 1e-12;

/// A point of the Sasaki cone of the standard sphere: a positive weight
/// vector `w = (w_0, ..., w_n)` identifying the Reeb field `sum w_k H_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    entries: Vec<f64>,
}

impl Weight {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::InvalidDimension(entries.len().saturating_sub(1)));
        }
        for (index, &value) in entries.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::NonPositiveWeight { index, value });
            }
        }
        Ok(Weight { entries })
    }

    /// Weight with an arity check against the complex dimension `n`.
    pub fn with_dimension(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(n));
        }
        if entries.len() != n + 1 {
            return Err(Error::WeightArity { expected: n + 1, got: entries.len() });
        }
        Weight::new(entries)
    }

    /// The standard Reeb field `(1, ..., 1)`.
    pub fn standard(n: usize) -> Self {
        Weight { entries: vec![1.0; n + 1] }
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Complex transverse dimension.
    pub fn n(&self) -> usize {
        self.entries.len() - 1
    }

    /// `W = sum_k w_k`.
    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn product(&self) -> f64 {
        self.entries.iter().product()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Weight::new(self.entries.iter().map(|w| c * w).collect())
    }

    /// `D = eta(xi_w) = sum_k w_k r_k` at radii `r`.
    pub fn pairing(&self, radii: &[f64]) -> f64 {
        self.entries.iter().zip(radii).map(|(w, r)| w * r).sum()
    }

    /// Diagonal ambient matrix repeating each weight on its `(x_k, y_k)` block.
    pub(crate) fn ambient_diagonal(&self) -> DVector<f64> {
        DVector::from_iterator(
            2 * self.entries.len(),
            self.entries.iter().flat_map(|&w| [w, w]),
        )
    }
}

/// A unit vector of R^{2n+2} = C^{n+1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl SpherePoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::WeightArity { expected: x.len(), got: y.len() });
        }
        if x.len() < 2 {
            return Err(Error::InvalidDimension(x.len().saturating_sub(1)));
        }
        let norm2: f64 = x.iter().chain(&y).map(|v| v * v).sum();
        if (norm2 - 1.0).abs() > SPHERE_TOL {
            return Err(Error::OffSphere(norm2));
        }
        Ok(SpherePoint { x, y })
    }

    /// Builds a point from an interleaved ambient vector, normalising it.
    pub fn from_ambient(v: &DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) || v.len() % 2 != 0 {
            return Err(Error::OffSphere(norm * norm));
        }
        let m = v.len() / 2;
        let x = (0..m).map(|k| v[2 * k] / norm).collect();
        let y = (0..m).map(|k| v[2 * k + 1] / norm).collect();
        Ok(SpherePoint { x, y })
    }

    /// The point with `|z_k|^2 = r_k` and all phases zero.
    pub fn from_radii(radii: &[f64]) -> Result<Self> {
        let x: Vec<f64> = radii.iter().map(|r| r.max(0.0).sqrt()).collect();
        let y = vec![0.0; radii.len()];
        SpherePoint::new(x, y)
    }

    pub fn n(&self) -> usize {
        self.x.len() - 1
    }

    /// Real dimension of the ambient space, `2n + 2`.
    pub fn ambient_dim(&self) -> usize {
        2 * self.x.len()
    }

    pub fn ambient(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.ambient_dim(),
            self.x.iter().zip(&self.y).flat_map(|(&a, &b)| [a, b]),
        )
    }

    /// `r_k = |z_k|^2`.
    pub fn radii(&self) -> Vec<f64> {
        self.x.iter().zip(&self.y).map(|(a, b)| a * a + b * b).collect()
    }
}

/// A vector tangent to the sphere at some base point, in ambient components.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub v: DVector<f64>,
}

impl TangentVector {
    /// Projects an arbitrary ambient vector onto `T_p S`.
    pub fn project(p: &SpherePoint, v: &DVector<f64>) -> Self {
        TangentVector { v: tangent_projector(p) * v }
    }

    /// Residual of the tangency condition `<v, p>`.
    pub fn tangency(&self, p: &SpherePoint) -> f64 {
        self.v.dot(&p.ambient())
    }
}

/// Multiplication by `i` on interleaved coordinates: `(x, y) -> (-y, x)`.
pub fn complex_structure(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for k in 0..dim / 2 {
        j[(2 * k, 2 * k + 1)] = -1.0;
        j[(2 * k + 1, 2 * k)] = 1.0;
    }
    j
}

/// Orthogonal projector `I - p p^T` onto the tangent space.
pub fn tangent_projector(p: &SpherePoint) -> DMatrix<f64> {
    let a = p.ambient();
    DMatrix::identity(a.len(), a.len()) - &a * a.transpose()
}

/// Orthonormal basis of `T_p S` (columns), built from a Householder reflection
/// that sends `p` to a coordinate axis.
pub fn orthonormal_tangent_basis(p: &SpherePoint) -> DMatrix<f64> {
    let a = p.ambient();
    let dim = a.len();
    let k = a.iamax();
    let mut v = a.clone();
    v[k] += a[k].signum();
    let vv = v.dot(&v);
    let h = DMatrix::identity(dim, dim) - (&v * v.transpose()) * (2.0 / vv);
    // Column k of h is -sign(a_k) p; the others span p^perp.
    let cols: Vec<usize> = (0..dim).filter(|&c| c != k).collect();
    h.select_columns(cols.iter())
}

/// Uniform point on S^{2n+1}: a normalised standard-normal sample in R^{2n+2}.
pub fn random_sphere_point(n: usize, seed: u64) -> Result<SpherePoint> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_sphere(n, &mut rng))
}

pub(crate) fn sample_sphere<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> SpherePoint {
    loop {
        let v = DVector::from_iterator(2 * n + 2, (0..2 * n + 2).map(|_| StandardNormal.sample(rng)));
        if v.norm() > 1e-8 {
            return SpherePoint::from_ambient(&v).expect("nonzero sample");
        }
    }
}

/// Radius of the coordinate ball in which a graph chart is used.
pub const CHART_RADIUS: f64 = 0.1;

/// Graph chart that solves for the ambient coordinate `index` from the unit
/// constraint. `u` holds the remaining `2n + 1` coordinates in ambient order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCoords {
    pub index: usize,
    pub sign: f64,
    pub u: DVector<f64>,
}

/// The chart that drops the largest ambient coordinate of `p`.
pub fn graph_chart(p: &SpherePoint) -> Result<ChartCoords> {
    let a = p.ambient();
    let index = a.iamax();
    let largest = a[index].abs();
    let floor = 1.0 / (a.len() as f64).sqrt() - 1e-9;
    if largest < floor {
        return Err(Error::ChartDegenerate(largest));
    }
    let sign = a[index].signum();
    Ok(ChartCoords { index, sign, u: a.remove_row(index) })
}

impl ChartCoords {
    /// Same chart, different coordinates.
    pub fn at(&self, u: DVector<f64>) -> ChartCoords {
        ChartCoords { index: self.index, sign: self.sign, u }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    fn dropped(&self) -> Result<f64> {
        let rest = self.u.norm_squared();
        if rest >= 1.0 {
            return Err(Error::ChartBall(rest.sqrt()));
        }
        Ok(self.sign * (1.0 - rest).sqrt())
    }

    pub fn ambient(&self) -> Result<DVector<f64>> {
        let t = self.dropped()?;
        Ok(self.u.clone().insert_row(self.index, t))
    }

    /// Inverse of [`graph_chart`].
    pub fn to_point(&self) -> Result<SpherePoint> {
        let a = self.ambient()?;
        let m = a.len() / 2;
        Ok(SpherePoint {
            x: (0..m).map(|k| a[2 * k]).collect(),
            y: (0..m).map(|k| a[2 * k + 1]).collect(),
        })
    }

    /// Jacobian `d(ambient)/du`, a `(2n+2) x (2n+1)` matrix.
    pub fn jacobian(&self) -> Result<DMatrix<f64>> {
        let t = self.dropped()?;
        let d = self.dim();
        let mut jac = DMatrix::zeros(d + 1, d);
        for c in 0..d {
            let row = if c < self.index { c } else { c + 1 };
            jac[(row, c)] = 1.0;
            jac[(self.index, c)] = -self.u[c] / t;
        }
        Ok(jac)
    }

    /// Chart components of an ambient tangent vector: drop the solved coordinate.
    pub fn components(&self, v: &DVector<f64>) -> DVector<f64> {
        v.clone().remove_row(self.index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_rejects_non_positive_entries() {
        assert!(matches!(
            Weight::new(vec![1.0, 0.0]),
            Err(Error::NonPositiveWeight { index: 1, .. })
        ));
        assert!(matches!(
            Weight::with_dimension(2, vec![1.0, 1.0]),
            Err(Error::WeightArity { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn random_point_is_unit_and_deterministic() {
        let p = random_sphere_point(1, 0).unwrap();
        assert!((p.ambient().norm() - 1.0).abs() < 1e-12);
        assert_eq!(p, random_sphere_point(1, 0).unwrap());
        assert_ne!(p, random_sphere_point(1, 1).unwrap());
    }

    #[test]
    fn mean_of_first_radius_is_one_over_n_plus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1usize, 2] {
            let samples = 100_000;
            let vals: Vec<f64> = (0..samples).map(|_| sample_sphere(n, &mut rng).radii()[0]).collect();
            let mean = vals.iter().sum::<f64>() / samples as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
            let sigma = (var / samples as f64).sqrt();
            assert!((mean - 1.0 / (n as f64 + 1.0)).abs() < 3.0 * sigma, "n={n} mean={mean}");
        }
    }

    #[test]
    fn chart_at_pole() {
        let p = SpherePoint::new(vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let c = graph_chart(&p).unwrap();
        assert_eq!(c.index, 0);
        assert!(c.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn chart_round_trip() {
        for seed in 0..100 {
            let p = random_sphere_point(1 + (seed as usize % 2), seed).unwrap();
            let c = graph_chart(&p).unwrap();
            let q = c.to_point().unwrap();
            let err = (p.ambient() - q.ambient()).amax();
            assert!(err < 1e-14, "seed {seed}: {err}");
        }
    }

    #[test]
    fn chart_perturbation_stays_on_sphere() {
        let p = random_sphere_point(2, 5).unwrap();
        let c = graph_chart(&p).unwrap();
        for i in 0..c.dim() {
            let mut u = c.u.clone();
            u[i] += 1e-3;
            let a = c.at(u).ambient().unwrap();
            assert!((a.norm_squared() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobian_columns_are_tangent() {
        let p = random_sphere_point(2, 9).unwrap();
        let c = graph_chart(&p).unwrap();
        let jac = c.jacobian().unwrap();
        let a = p.ambient();
        for col in jac.column_iter() {
            assert!(col.dot(&a).abs() < 1e-13);
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_tangent() {
        let p = random_sphere_point(2, 3).unwrap();
        let e = orthonormal_tangent_basis(&p);
        let gram = e.transpose() * &e;
        assert!((gram - DMatrix::identity(5, 5)).amax() < 1e-14);
        assert!((e.transpose() * p.ambient()).amax() < 1e-14);
    }

    #[test]
    fn projector_is_idempotent_and_symmetric() {
        let p = random_sphere_point(1, 2).unwrap();
        let proj = tangent_projector(&p);
        assert!((&proj * &proj - &proj).amax() < 1e-14);
        assert!((&proj - proj.transpose()).amax() == 0.0);
    }
}
