//! Large-RIS closed forms.
//!
//! For N → ∞ with everything else fixed, the diagonal Fisher entries grow as
//! N⁴ when some sensor mirrors the target (`θ_i + φ_r = 0`) and as N³
//! otherwise. The constants only involve the SNR, T, the RIS moments and R.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{wrap_angle, Scenario, SignalModel};

/// Default tolerance on `|wrap(θ + φ)|` for the mirrored case.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeKind {
    Symmetric,
    NonSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsymptoticRegime {
    pub kind: RegimeKind,
    /// First sensor with `θ_i + φ_r ≡ 0`, when there is one.
    pub matched_sensor: Option<usize>,
}

impl AsymptoticRegime {
    pub fn is_symmetric(&self) -> bool {
        self.kind == RegimeKind::Symmetric
    }
}

/// Classifies every target by whether some sensor mirrors it.
pub fn detect_regime(scenario: &Scenario, tol: f64) -> Vec<AsymptoticRegime> {
    scenario
        .thetas
        .iter()
        .map(|&theta| {
            let matched = scenario.phis.iter().position(|&phi| wrap_angle(theta + phi).abs() <= tol);
            AsymptoticRegime {
                kind: if matched.is_some() { RegimeKind::Symmetric } else { RegimeKind::NonSymmetric },
                matched_sensor: matched,
            }
        })
        .collect()
}

/// Everything the leading-order formulas depend on.
///
/// Keeping the inputs in one place makes the angle independence structural:
/// no angle can reach the formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingInputs {
    pub snr: f64,
    pub n_slots: usize,
    pub e1: f64,
    pub e2: f64,
    pub n_sensors: usize,
    pub n_elements: usize,
    pub kind: RegimeKind,
}

impl ScalingInputs {
    pub fn new(i: usize, scenario: &Scenario, regime: &AsymptoticRegime) -> Self {
        let m = scenario.ris.moments();
        ScalingInputs {
            snr: scenario.snr(i),
            n_slots: scenario.n_slots,
            e1: m.e1,
            e2: m.e2,
            n_sensors: scenario.n_sensors(),
            n_elements: scenario.n_elements,
            kind: regime.kind,
        }
    }

    /// Leading-order `F_ii`.
    pub fn fisher(&self) -> Result<f64> {
        let n = self.n_elements as f64;
        let t = self.n_slots as f64;
        match self.kind {
            RegimeKind::Symmetric => {
                if self.e2 <= 0.0 {
                    return Err(Error::DegenerateRegime(
                        "mirrored target with E2 = 0: the N⁴ coefficient vanishes, the N³ law governs".into(),
                    ));
                }
                Ok(self.snr * t * self.e2 / 2.0 * n.powi(4))
            }
            RegimeKind::NonSymmetric => Ok(self.snr * 2.0 * t * (self.e1 - self.e2) * self.n_sensors as f64 / 3.0 * n.powi(3)),
        }
    }

    /// Leading-order `CRB_ii`, the reciprocal of [`ScalingInputs::fisher`].
    pub fn crb(&self) -> Result<f64> {
        let f = self.fisher()?;
        if f <= 0.0 {
            return Err(Error::DegenerateRegime("E1 = E2 (deterministic RIS): the N³ coefficient vanishes".into()));
        }
        Ok(f.recip())
    }
}

fn check_target(i: usize, scenario: &Scenario) -> Result<()> {
    if i >= scenario.n_targets() {
        return Err(Error::InvalidInput(format!("target index {i} out of range")));
    }
    scenario.validate()
}

/// Leading-order `F_ii` for target `i`.
pub fn asymptotic_fisher_entry(i: usize, scenario: &Scenario, regime: &AsymptoticRegime) -> Result<f64> {
    check_target(i, scenario)?;
    ScalingInputs::new(i, scenario, regime).fisher()
}

/// Leading-order `CRB_ii` for target `i`; only defined for uncorrelated signals.
pub fn asymptotic_crb_entry(i: usize, scenario: &Scenario, regime: &AsymptoticRegime) -> Result<f64> {
    check_target(i, scenario)?;
    if scenario.signal_model != SignalModel::UncorrelatedDiagonal {
        return Err(Error::InvalidInput("the closed-form CRB is only available for uncorrelated signals".into()));
    }
    ScalingInputs::new(i, scenario, regime).crb()
}

/// `N² / (4 sin²(ψ/2))`, the leading term of `Σ_{n₁,n₂=1}^{N-1} n₁n₂ cos((n₂−n₁)ψ)` for ψ ≢ 0.
pub fn cosine_sum_leading(psi: f64, n: usize) -> Result<f64> {
    let s = (0.5 * psi).sin();
    if wrap_angle(psi).abs() < 1e-12 || s == 0.0 {
        return Err(Error::InvalidInput("ψ ≡ 0 (mod 2π): use the Σn² branch instead".into()));
    }
    let n = n as f64;
    Ok(n * n / (4.0 * s * s))
}

/// `Σ_{n=1}^{N-1} n² = (N−1)N(2N−1)/6`, the ψ = 0 branch.
pub fn squared_index_sum(n: usize) -> f64 {
    let n = n as u128;
    if n == 0 {
        return 0.0;
    }
    ((n - 1) * n * (2 * n - 1) / 6) as f64
}
