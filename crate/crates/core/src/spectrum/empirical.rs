//! Finite-N eigenvalues of `D^H D / N⁴` and their comparison with the limit.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::density::DensityCurve;
use super::SpectralModel;
use crate::error::{Error, Result};
use crate::model::{manifold_derivative, sensor_manifold, wrap_angle, Scenario, SignalModel};
use crate::rng::substream;

/// Minimum angle spacing, in units of `2π/N`, required by default.
pub const DEFAULT_SEPARATION: f64 = 4.0;
pub const DEFAULT_BINS: usize = 40;

/// Smallest circular distance between any two angles.
pub fn min_separation(angles: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = angles.iter().map(|&a| a.rem_euclid(TAU)).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() < 2 {
        return PI;
    }
    let wrap = sorted[0] + TAU - sorted[sorted.len() - 1];
    sorted.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min)
}

/// Fail unless both angle sets are spaced by at least `2π·factor/N`.
pub fn check_separation(scenario: &Scenario, factor: f64) -> Result<()> {
    let required = TAU * factor / scenario.n_elements as f64;
    for angles in [&scenario.thetas, &scenario.phis] {
        let separation = min_separation(angles);
        // one ulp-scale slack so exact grid layouts pass
        if separation < required * (1.0 - 1e-12) {
            return Err(Error::Separation { separation, required });
        }
    }
    Ok(())
}

/// `count` angles on the `2π/n` grid, as evenly spread as the grid allows,
/// starting from bin `offset`.
pub fn grid_angles(count: usize, n: usize, offset: usize) -> Vec<f64> {
    (0..count)
        .map(|k| {
            let bin = (k * n / count + offset) % n;
            wrap_angle(TAU * bin as f64 / n as f64)
        })
        .collect()
}

/// Scenario whose dimensions realise `model` at RIS size `n`.
///
/// Angles sit on the DFT grid so that `A_Φ A_Φ^H = N·I` holds exactly.
pub fn spectral_scenario(model: &SpectralModel, n: usize) -> Result<Scenario> {
    model.validate()?;
    let k = (model.c1 * n as f64).round() as usize;
    let r = (model.c2 * n as f64).round() as usize;
    if k == 0 || r == 0 || k > n || r > n {
        return Err(Error::InvalidInput(format!("ratios c1={}, c2={} give K={k}, R={r} at N={n}", model.c1, model.c2)));
    }
    let scenario = Scenario {
        thetas: grid_angles(k, n, 0),
        phis: grid_angles(r, n, 1),
        n_elements: n,
        n_slots: 1,
        powers: vec![1.0; k],
        noise_power: 1.0,
        signal_model: SignalModel::UncorrelatedDiagonal,
        ris: model.ris_distribution(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Eigenvalues of `D^H D / N⁴` for `D = A_Φ diag(ω) Ȧ_Θ`, ascending.
pub fn spectrum_for(scenario: &Scenario, omega: &DVector<Complex64>) -> Result<Vec<f64>> {
    let n = scenario.n_elements;
    if omega.len() != n {
        return Err(Error::DimensionMismatch { what: "RIS coefficients", expected: n, got: omega.len() });
    }
    let mut deriv = manifold_derivative(&scenario.thetas, n);
    for (mut row, w) in deriv.row_iter_mut().zip(omega.iter()) {
        row *= *w;
    }
    let d: DMatrix<Complex64> = sensor_manifold(&scenario.phis, n) * deriv;
    let gram = d.adjoint() * &d / Complex64::new((n as f64).powi(4), 0.0);
    let mut eig: Vec<f64> = gram.symmetric_eigenvalues().iter().map(|&l| l.max(0.0)).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// One RIS draw (draw index `draw` under `seed`) after a separation check.
pub fn empirical_spectrum_draw(scenario: &Scenario, seed: u64, draw: u64, separation_factor: f64) -> Result<Vec<f64>> {
    scenario.validate()?;
    check_separation(scenario, separation_factor)?;
    let mut rng = substream(seed, draw, 0);
    let omega = scenario.ris.sample_vec(scenario.n_elements, &mut rng);
    spectrum_for(scenario, &omega)
}

/// The K eigenvalues of `D^H D / N⁴` for a single RIS draw.
pub fn empirical_spectrum(scenario: &Scenario, seed: u64) -> Result<Vec<f64>> {
    empirical_spectrum_draw(scenario, seed, 0, DEFAULT_SEPARATION)
}

/// Bin-wise comparison of eigenvalues with a limiting density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramComparison {
    /// `bins + 1` ascending edges.
    pub edges: Vec<f64>,
    /// Fraction of eigenvalues per bin.
    pub empirical: Vec<f64>,
    /// Theoretical mass per bin.
    pub theory: Vec<f64>,
    /// `Σ |empirical − theory|`.
    pub l1: f64,
}

/// Histogram of `eigs` on the union of their range and the theoretical
/// support, against the density integrated over each bin.
pub fn compare_histogram(curve: &DensityCurve, eigs: &[f64], bins: usize) -> Result<HistogramComparison> {
    if eigs.is_empty() || bins == 0 {
        return Err(Error::InvalidInput("histogram needs eigenvalues and at least one bin".into()));
    }
    let emin = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let emax = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = emin.min(curve.support.0);
    let hi = emax.max(curve.support.1);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0usize; bins];
    for &e in eigs {
        let idx = (((e - lo) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / eigs.len() as f64).collect();
    let theory: Vec<f64> = edges.windows(2).map(|w| curve.mass_between(w[0], w[1])).collect();
    let l1 = empirical.iter().zip(&theory).map(|(a, b)| (a - b).abs()).sum();
    Ok(HistogramComparison { edges, empirical, theory, l1 })
}
