//! Spectral CRB: `σ²/(2TN⁴) ∫ λ⁻¹ dμ(λ)` and its finite-N counterpart.

use serde::{Deserialize, Serialize};

use super::density::{density_curve, DensityCurve, GridSpec, DEFAULT_Y_OFFSET};
use super::SpectralModel;
use crate::error::{Error, Result};

/// Support edges below this make the inverse moment diverge.
pub const MIN_LOWER_EDGE: f64 = 1e-12;

/// Both conventions for the spectral CRB.
///
/// `per_target` averages the diagonal of `F⁻¹` over the K targets; `total`
/// is the full trace, K times larger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralCrb {
    /// `∫ λ⁻¹ dμ(λ)`, or the eigenvalue average of `1/λ`.
    pub inverse_moment: f64,
    pub per_target: f64,
    pub total: f64,
    pub n_targets: usize,
}

impl SpectralCrb {
    fn from_inverse_moment(inverse_moment: f64, noise_power: f64, n_slots: usize, n_elements: usize, n_targets: usize) -> Self {
        let per_target = noise_power / (2.0 * n_slots as f64 * (n_elements as f64).powi(4)) * inverse_moment;
        SpectralCrb { inverse_moment, per_target, total: per_target * n_targets as f64, n_targets }
    }
}

fn check_scales(noise_power: f64, n_slots: usize, n_elements: usize) -> Result<()> {
    if !(noise_power > 0.0 && noise_power.is_finite()) || n_slots == 0 || n_elements == 0 {
        return Err(Error::InvalidInput("noise power, T and N must be positive".into()));
    }
    Ok(())
}

/// Spectral CRB from an already computed density.
pub fn crb_from_curve(curve: &DensityCurve, noise_power: f64, n_slots: usize, n_elements: usize, n_targets: usize) -> Result<SpectralCrb> {
    check_scales(noise_power, n_slots, n_elements)?;
    if curve.support.0 < MIN_LOWER_EDGE {
        return Err(Error::DivergentCrb { lower_edge: curve.support.0 });
    }
    Ok(SpectralCrb::from_inverse_moment(curve.inverse_moment(), noise_power, n_slots, n_elements, n_targets))
}

/// Limiting spectral CRB for `model` at the given scales.
pub fn asymptotic_crb_total(
    model: &SpectralModel,
    noise_power: f64,
    n_slots: usize,
    n_elements: usize,
    n_targets: usize,
) -> Result<SpectralCrb> {
    let curve = density_curve(model, &GridSpec::default(), DEFAULT_Y_OFFSET)?;
    crb_from_curve(&curve, noise_power, n_slots, n_elements, n_targets)
}

/// Finite-N spectral CRB from the eigenvalues of `D^H D / N⁴`.
pub fn empirical_crb(eigs: &[f64], noise_power: f64, n_slots: usize, n_elements: usize) -> Result<SpectralCrb> {
    check_scales(noise_power, n_slots, n_elements)?;
    let lower = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    if eigs.is_empty() || !(lower > MIN_LOWER_EDGE) {
        return Err(Error::DivergentCrb { lower_edge: lower });
    }
    let mean_inverse = eigs.iter().map(|l| 1.0 / l).sum::<f64>() / eigs.len() as f64;
    Ok(SpectralCrb::from_inverse_moment(mean_inverse, noise_power, n_slots, n_elements, eigs.len()))
}
