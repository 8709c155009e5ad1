//! Limiting eigenvalue density of `D^H D / N⁴` when K, R and N grow together.
//!
//! The three factors `Ȧ_Θ^H Ȧ_Θ / N³ → I/3`, `A_Φ A_Φ^H / N → I` and
//! `Ω Ω^H` are treated as asymptotically free. Their N-transforms multiply,
//! which turns into a quadratic equation for the Stieltjes transform `m(z)`
//! of a constant-modulus RIS and a quintic one when the RIS amplitude takes
//! two values. The density follows from `μ(λ) = Im m(λ + j0⁺) / π`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::RisDistribution;

pub mod crb;
pub mod density;
pub mod empirical;
pub mod poly;
pub mod stieltjes;
pub mod transforms;

pub use crb::{asymptotic_crb_total, SpectralCrb};
pub use density::{density_curve, DensityCurve, GridSpec};
pub use empirical::empirical_spectrum;
pub use stieltjes::{stieltjes, stieltjes_constant_modulus, stieltjes_discrete_amplitude};
pub use transforms::{analytic_factor_transforms, FactorTransforms};

/// Eigenvalue law of `Ω Ω^H` in the large-system model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RisSpectralModel {
    /// `|ω| = 1`.
    ConstantModulus,
    /// `|ω| = x` with probability `p`, else `y`.
    DiscreteAmplitude { x: f64, y: f64, p: f64 },
}

/// Large-system parameters: `c1 = K/N`, `c2 = R/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub c1: f64,
    pub c2: f64,
    pub ris: RisSpectralModel,
}

impl SpectralModel {
    pub fn constant_modulus(c1: f64, c2: f64) -> Self {
        SpectralModel { c1, c2, ris: RisSpectralModel::ConstantModulus }
    }

    pub fn discrete_amplitude(c1: f64, c2: f64, x: f64, y: f64, p: f64) -> Self {
        SpectralModel { c1, c2, ris: RisSpectralModel::DiscreteAmplitude { x, y, p } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > 0.0 && self.c2 > 0.0 && self.c1.is_finite() && self.c2.is_finite()) {
            return Err(Error::InvalidInput(format!("ratios must be positive, got c1={}, c2={}", self.c1, self.c2)));
        }
        if let RisSpectralModel::DiscreteAmplitude { x, y, p } = self.ris {
            if !(x > 0.0 && y > 0.0 && (0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidInput(format!("bad amplitude law x={x}, y={y}, p={p}")));
            }
        }
        Ok(())
    }

    /// More targets than sensors: the limiting CRB is not expected to be finite.
    pub fn is_overloaded(&self) -> bool {
        self.c1 >= self.c2
    }

    /// Atoms `(weight, location)` of the `Ω Ω^H` eigenvalue law.
    pub fn ris_atoms(&self) -> Vec<(f64, f64)> {
        match self.ris {
            RisSpectralModel::ConstantModulus => vec![(1.0, 1.0)],
            RisSpectralModel::DiscreteAmplitude { x, y, p } => vec![(p, x * x), (1.0 - p, y * y)],
        }
    }

    /// `E[|ω|²]`.
    pub fn ris_power(&self) -> f64 {
        self.ris_atoms().iter().map(|(w, l)| w * l).sum()
    }

    /// First moment of the limiting law, `c2·E[|ω|²]/3`.
    pub fn mean_eigenvalue(&self) -> f64 {
        self.c2 * self.ris_power() / 3.0
    }

    /// The RIS law that produces this spectral model in a finite scenario.
    pub fn ris_distribution(&self) -> RisDistribution {
        match self.ris {
            RisSpectralModel::ConstantModulus => RisDistribution::uniform_phase(0.0, std::f64::consts::TAU),
            RisSpectralModel::DiscreteAmplitude { x, y, p } => RisDistribution::DiscreteAmplitude { x, y, p },
        }
    }
}

/// A Stieltjes transform value `m(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesValue {
    pub z: Complex64,
    pub m: Complex64,
}

impl StieltjesValue {
    /// `ψ(z) = −1 − z m(z)`.
    pub fn psi(&self) -> Complex64 {
        -1.0 - self.z * self.m
    }

    pub fn is_herglotz(&self) -> bool {
        self.z.im <= 0.0 || self.m.im > 0.0
    }
}
