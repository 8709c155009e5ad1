use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("Fisher information matrix is singular (condition number {condition:.3e})")]
    SingularFim { condition: f64 },

    #[error("{singular} of {trials} Monte Carlo trials produced a singular FIM")]
    TooManySingular { singular: usize, trials: usize },

    /// The leading-order coefficient of the requested asymptotic branch vanishes.
    #[error("degenerate asymptotic regime: {0}")]
    DegenerateRegime(String),

    #[error("no root of the Stieltjes equation lies in the upper half-plane at z = {z}: roots {roots:?}")]
    BranchFailure { z: Complex64, roots: Vec<Complex64> },

    #[error("ambiguous root selection at z = {z}: roots {roots:?}")]
    RootSelection { z: Complex64, roots: Vec<Complex64> },

    #[error("density mass {mass:.6} deviates from 1 by more than {tolerance:e}")]
    Normalization { mass: f64, tolerance: f64 },

    #[error("density did not converge as the imaginary offset shrinks (L1 change {change:.3e})")]
    NotConverged { change: f64 },

    #[error("spectral CRB diverges: support reaches down to {lower_edge:e}")]
    DivergentCrb { lower_edge: f64 },

    #[error("angle separation {separation:.4e} rad is below the required {required:.4e} rad")]
    Separation { separation: f64, required: f64 },

    /// Wraps a lower-level failure with the sweep point that triggered it.
    #[error("at N = {n}, R = {r}: {source}")]
    AtSweepPoint {
        n: usize,
        r: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::Separation { .. } => false,
            Error::AtSweepPoint { source, .. } => source.is_numerical(),
            _ => true,
        }
    }
}
