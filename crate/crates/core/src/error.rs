use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular to working precision (pivot {pivot:.3e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("eigenvalue iteration did not converge for index {index} after {iterations} iterations")]
    EigenNonConvergence { index: usize, iterations: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Some eigenvalue lies on (or too close to) the imaginary axis.
    #[error("no exponential dichotomy: eigenvalue(s) within {axis_tol:.3e} of the imaginary axis: {}", format_points(.eigenvalues))]
    Dichotomy {
        eigenvalues: Vec<Complex64>,
        axis_tol: f64,
    },

    #[error("evaluation point {point} coincides with a pole")]
    Pole { point: Complex64 },

    #[error("contour geometry: {0}")]
    Geometry(String),

    #[error("eigendecomposition oracle unavailable: eigenvector condition {condition:.3e} exceeds cap {cap:.1e}")]
    OracleUnavailable { condition: f64, cap: f64 },

    #[error("argument {0} lies on the imaginary axis")]
    Domain(Complex64),

    #[error("quadrature did not converge within {panels} panels (error estimate {error:.3e}, target {target:.3e})")]
    QuadratureNonConvergence { panels: usize, error: f64, target: f64 },

    #[error("size guard: {0}")]
    SizeGuard(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_points(points: &[Complex64]) -> String {
    points
        .iter()
        .map(|z| format!("{}{:+}i", z.re, z.im))
        .collect::<Vec<_>>()
        .join(", ")
}
