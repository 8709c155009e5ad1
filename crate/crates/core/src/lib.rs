//! Cramér–Rao bounds for direction-of-arrival estimation through a randomly
//! configured reconfigurable intelligent surface (RIS).
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: steering vectors, array manifolds, RIS coefficient laws and
//!   their first two moments.
//! - [`fim`]: exact per-realization and expected Fisher information, CRB
//!   extraction and a deterministic parallel Monte Carlo estimator.
//! - [`scaling`]: the large-RIS closed forms (N⁻³ / N⁻⁴ laws) and the
//!   symmetric-geometry detector.
//! - [`spectrum`]: Stieltjes-transform solvers for the limiting eigenvalue
//!   density of `D^H D / N⁴` and the spectral CRB integral.
//! - [`experiments`]: the sweep runners behind the `ris-crb` command line tool.
//!
//! Angles are spatial frequencies: the steering vector of `theta` is
//! `[1, e^{jθ}, …, e^{j(N-1)θ}]`.

// `!(x < y)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod fim;
pub mod model;
pub mod rng;
pub mod scaling;
pub mod spectrum;

pub use error::{Error, Result};
pub use experiments::{ExperimentConfig, ExperimentKind, OutputFormat, Rows};
pub use fim::{
    crb_from_fim, fim_exact, fim_expected, fim_expected_with_covariance, monte_carlo_crb, sample_covariance, CrbResult, FisherMatrix,
    MonteCarloOptions, RisMode,
};
pub use model::{Moments, RisDistribution, Scenario, SignalModel};
pub use num_complex::Complex64;
pub use scaling::{detect_regime, AsymptoticRegime, RegimeKind};
pub use spectrum::{DensityCurve, RisSpectralModel, SpectralModel, StieltjesValue};
