//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by grid construction, operator application and solves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid cell count {0} is not a power of two >= 8")]
    NotPowerOfTwo(usize),

    #[error("box period must be positive, got {0}")]
    NonpositiveLength(f64),

    #[error("fields live on different grids ({0}x{0} vs {1}x{1})")]
    GridMismatch(usize, usize),

    #[error("evaluation on the singular locus {locus} of symbol {symbol}")]
    SingularLocus { symbol: &'static str, locus: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resonance map is empty; {0}")]
    EmptyMap(&'static str),

    #[error(
        "trilinear quadrature on a {n}x{n} grid costs O(n^6); grids above {cap} need an explicit override"
    )]
    CostGuard { n: usize, cap: usize },

    #[error("density fixed point stopped contracting at iteration {iteration} (residual {residual:e}, previous {previous:e})")]
    NonContraction { iteration: usize, residual: f64, previous: f64, history: Vec<f64> },

    #[error("fixed point did not reach tolerance {tol:e} in {max_iter} iterations (residual {residual:e})")]
    NoConvergence { tol: f64, max_iter: usize, residual: f64 },

    #[error("non-finite value detected in {0}; integration aborted")]
    NonFinite(&'static str),

    #[error("evaluation point (z = {z}) lies above the surface (h = {h})")]
    AboveSurface { z: f64, h: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
