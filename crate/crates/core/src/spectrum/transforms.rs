//! N-transforms of the three free factors and their composition.
//!
//! For a law μ, `ψ_μ(z) = −1 − z m_μ(z)` and `N_μ = ψ_μ⁻¹`. Products of free
//! factors obey `N_AB(z) = z/(1+z) · N_A(z) N_B(z)`, and moving between
//! `AB` (N×N) and `BA` (T×T) rescales the argument by `N/T`.

use num_complex::Complex64;

use super::stieltjes::{quadratic_roots, QuadraticCoefficients};
use super::{RisSpectralModel, SpectralModel};
use crate::error::{Error, Result};

/// Closed-form evaluators for one model.
#[derive(Debug, Clone, Copy)]
pub struct FactorTransforms {
    model: SpectralModel,
}

pub fn analytic_factor_transforms(model: &SpectralModel) -> Result<FactorTransforms> {
    model.validate()?;
    Ok(FactorTransforms { model: *model })
}

impl FactorTransforms {
    /// `N` of `Ω Ω^H` at `c1·z`; only closed-form for a constant-modulus RIS.
    pub fn ris_gram(&self, z: Complex64) -> Result<Complex64> {
        match self.model.ris {
            RisSpectralModel::ConstantModulus => {
                let u = self.model.c1 * z;
                Ok((1.0 + u) / u)
            }
            RisSpectralModel::DiscreteAmplitude { .. } => {
                Err(Error::InvalidInput("the two-atom RIS law has no single-valued closed-form N-transform".into()))
            }
        }
    }

    /// `N` of `A_Φ A_Φ^H / N` at `(c1/c2)·z`.
    pub fn sensor_gram(&self, z: Complex64) -> Complex64 {
        let (c1, c2) = (self.model.c1, self.model.c2);
        (c1 * z + c2) / (c1 * z)
    }

    /// `N` of `Ȧ_Θ^H Ȧ_Θ / N³` at `z`.
    pub fn target_gram(z: Complex64) -> Complex64 {
        (1.0 + z) / (3.0 * z)
    }

    /// `N` of `D^H D / N⁴` by composing the three factors.
    pub fn compose(&self, z: Complex64) -> Result<Complex64> {
        let c1z = self.model.c1 * z;
        let lead = c1z / (1.0 + c1z);
        Ok(lead * lead * Self::target_gram(z) * self.ris_gram(z)? * self.sensor_gram(z))
    }
}

/// Dual-path check on one point.
///
/// Path one evaluates the composed N-transform at `ψ` to get `z = N(ψ)`.
/// Path two solves the quadratic at that `z` and maps its roots back to
/// `−1 − z m`. Returns the relative distance from `ψ` to the nearest one.
pub fn composition_mismatch(model: &SpectralModel, psi: Complex64, coeffs: QuadraticCoefficients) -> Result<f64> {
    let t = analytic_factor_transforms(model)?;
    let z = t.compose(psi)?;
    let roots = quadratic_roots(coeffs(model, z));
    let best = roots.iter().map(|m| (-1.0 - z * m - psi).norm()).fold(f64::INFINITY, f64::min);
    Ok(best / psi.norm())
}

/// Largest [`composition_mismatch`] over a `side × side` grid in the box
/// `[0.1, 3] × [0.1, 3]` of the upper half-plane.
pub fn composition_mismatch_on_grid(model: &SpectralModel, side: usize, coeffs: QuadraticCoefficients) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..side {
        for k in 0..side {
            let step = |j: usize| 0.1 + 2.9 * j as f64 / (side.max(2) - 1) as f64;
            let psi = Complex64::new(step(i) - 1.5, step(k));
            worst = worst.max(composition_mismatch(model, psi, coeffs)?);
        }
    }
    Ok(worst)
}
