use thiserror::Error;

/// Errors raised by geometric evaluation, quadrature and the descent solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("complex dimension must be at least 1, got {0}")]
    InvalidDimension(usize),

    #[error("weight vector has {got} entries, expected n+1 = {expected}")]
    WeightArity { expected: usize, got: usize },

    #[error("weight entry w[{index}] = {value} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },

    #[error("point is off the unit sphere: |z|^2 = {0}")]
    OffSphere(f64),

    #[error("graph chart degenerate: largest coordinate {0} below 1/sqrt(2n+2)")]
    ChartDegenerate(f64),

    #[error("stencil leaves the chart ball: |u| = {0}")]
    ChartBall(f64),

    #[error("finite-difference step {0} outside [1e-5, 1e-2]")]
    InvalidStep(f64),

    #[error("metric is numerically singular (condition number {0:e})")]
    SingularMetric(f64),

    #[error("homothety scale must be positive, got {0}")]
    InvalidScale(f64),

    #[error("invalid quadrature specification: {0}")]
    InvalidQuadrature(String),

    #[error("integrand produced a non-finite value at {0}")]
    NonFinite(String),

    #[error("operation requires n = {expected}, got n = {got}")]
    UnsupportedDimension { expected: usize, got: usize },

    #[error("deformed transverse form degenerates at sigma = {sigma} (density {density})")]
    NotPositive { sigma: f64, density: f64 },

    #[error("profile has {0} coefficients, at most 16 are supported")]
    ProfileTooLong(usize),

    #[error("grid resolution insufficient: truncation changes output by {0:.3} of its norm")]
    Resolution(f64),

    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
