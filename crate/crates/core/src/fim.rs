//! Fisher information and Cramér–Rao bounds.
//!
//! The observation model is `y(t) = A_Φ Ω(t) A_Θ x(t) + n(t)` with white
//! complex Gaussian noise of power σ². For the DoA vector `ξ = [θ_1 … θ_K]`
//! the Fisher information of one realization is
//!
//! ```text
//! F = (2/σ²) Σ_t Re{ X(t)^H D(t)^H D(t) X(t) },   D(t) = A_Φ diag(ω(t)) Ȧ_Θ
//! ```
//!
//! and averaging over i.i.d. RIS coefficients gives the expected FIM
//! `(2T/σ²) Re{ (Ȧ_Θ^H ((A_Φ^H A_Φ) ⊙ Σ) Ȧ_Θ) ⊙ Rᵀ }`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{manifold_derivative, sensor_manifold, Scenario};
use crate::rng;

/// Condition numbers above this make the FIM count as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Symmetric K×K Fisher information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherMatrix {
    pub entries: DMatrix<f64>,
    /// Fingerprint of the generating scenario.
    pub scenario_ref: u64,
}

impl FisherMatrix {
    fn from_raw(raw: DMatrix<f64>, scenario: &Scenario) -> Self {
        let sym = (&raw + raw.transpose()) * 0.5;
        FisherMatrix { entries: sym, scenario_ref: scenario.fingerprint() }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Per-target CRBs, possibly averaged over Monte Carlo trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbResult {
    /// `[F⁻¹]_kk` for each target (rad²).
    pub diag: Vec<f64>,
    /// Condition number of F (worst accepted trial for Monte Carlo runs).
    pub condition_number: f64,
    pub n_trials: usize,
    /// Standard error of each mean; zero for a single deterministic FIM.
    pub std_err: Vec<f64>,
    /// Trials dropped because their FIM was singular.
    pub n_singular: usize,
}

/// How the RIS configuration evolves over the T slots of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RisMode {
    /// A fresh Ω(t) every slot.
    #[default]
    PerSlot,
    /// One draw held for the whole trial.
    Fixed,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MonteCarloOptions {
    pub ris_mode: RisMode,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

/// Precomputed manifolds shared by every exact-FIM evaluation of a scenario.
struct FimKernel {
    sensors: DMatrix<Complex64>,
    derivative: DMatrix<Complex64>,
}

impl FimKernel {
    fn new(scenario: &Scenario) -> Self {
        FimKernel {
            sensors: sensor_manifold(&scenario.phis, scenario.n_elements),
            derivative: manifold_derivative(&scenario.thetas, scenario.n_elements),
        }
    }

    /// `D = A_Φ diag(ω) Ȧ_Θ`.
    fn effective(&self, omega: &DVector<Complex64>) -> DMatrix<Complex64> {
        let mut scaled = self.derivative.clone();
        for (mut row, w) in scaled.row_iter_mut().zip(omega.iter()) {
            row *= *w;
        }
        &self.sensors * scaled
    }

    fn accumulate(&self, omegas: &[DVector<Complex64>], signals: &[DVector<Complex64>], noise_power: f64) -> DMatrix<f64> {
        let k = self.derivative.ncols();
        let mut acc = DMatrix::<f64>::zeros(k, k);
        for (omega, x) in omegas.iter().zip(signals) {
            let d = self.effective(omega);
            let gram = d.adjoint() * d;
            for i in 0..k {
                for j in 0..k {
                    acc[(i, j)] += (x[i].conj() * gram[(i, j)] * x[j]).re;
                }
            }
        }
        acc * (2.0 / noise_power)
    }
}

fn check_dims(scenario: &Scenario, omegas: &[DVector<Complex64>], signals: &[DVector<Complex64>]) -> Result<()> {
    let t = scenario.n_slots;
    if omegas.len() != t {
        return Err(Error::DimensionMismatch { what: "RIS draws per slot", expected: t, got: omegas.len() });
    }
    if signals.len() != t {
        return Err(Error::DimensionMismatch { what: "signal vectors per slot", expected: t, got: signals.len() });
    }
    if let Some(w) = omegas.iter().find(|w| w.len() != scenario.n_elements) {
        return Err(Error::DimensionMismatch { what: "RIS vector length", expected: scenario.n_elements, got: w.len() });
    }
    if let Some(x) = signals.iter().find(|x| x.len() != scenario.n_targets()) {
        return Err(Error::DimensionMismatch { what: "signal vector length", expected: scenario.n_targets(), got: x.len() });
    }
    Ok(())
}

/// Exact FIM of one realization: RIS draw `omegas[t]` and symbols `signals[t]` per slot.
pub fn fim_exact(scenario: &Scenario, omegas: &[DVector<Complex64>], signals: &[DVector<Complex64>]) -> Result<FisherMatrix> {
    scenario.validate()?;
    check_dims(scenario, omegas, signals)?;
    let kernel = FimKernel::new(scenario);
    Ok(FisherMatrix::from_raw(kernel.accumulate(omegas, signals, scenario.noise_power), scenario))
}

/// FIM averaged over i.i.d. RIS coefficients, using the nominal covariance `R`.
pub fn fim_expected(scenario: &Scenario) -> Result<FisherMatrix> {
    let cov = scenario.covariance().map(Complex64::from);
    fim_expected_with_covariance(scenario, &cov)
}

/// `(1/T) Σ_t x(t) x(t)^H`.
pub fn sample_covariance(signals: &[DVector<Complex64>]) -> DMatrix<Complex64> {
    let k = signals.first().map_or(0, |x| x.len());
    let mut acc = DMatrix::<Complex64>::zeros(k, k);
    for x in signals {
        acc += x * x.adjoint();
    }
    acc / Complex64::from(signals.len().max(1) as f64)
}

/// Expected FIM for an arbitrary signal covariance, for instance the sample
/// covariance of a fixed symbol sequence.
pub fn fim_expected_with_covariance(scenario: &Scenario, cov: &DMatrix<Complex64>) -> Result<FisherMatrix> {
    scenario.validate()?;
    let k = scenario.n_targets();
    if cov.nrows() != k || cov.ncols() != k {
        return Err(Error::DimensionMismatch { what: "signal covariance", expected: k, got: cov.nrows() });
    }
    let moments = scenario.ris.moments();
    let sensors = sensor_manifold(&scenario.phis, scenario.n_elements);
    let derivative = manifold_derivative(&scenario.thetas, scenario.n_elements);
    // (A_Φ^H A_Φ) ⊙ Σ = e2·A_Φ^H A_Φ + (e1 − e2)·R·I, since every diagonal entry of A_Φ^H A_Φ is R
    let projected = &sensors * &derivative;
    let mut m = projected.adjoint() * projected * Complex64::from(moments.e2);
    m += derivative.adjoint() * &derivative * Complex64::from((moments.e1 - moments.e2) * scenario.n_sensors() as f64);
    let scale = 2.0 * scenario.n_slots as f64 / scenario.noise_power;
    let raw = DMatrix::from_fn(k, k, |i, j| scale * (m[(i, j)] * cov[(j, i)]).re);
    Ok(FisherMatrix::from_raw(raw, scenario))
}

/// Condition number from the symmetric spectrum; infinite when not positive definite.
pub fn condition_number(f: &DMatrix<f64>) -> f64 {
    let eig = f.clone().symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `CRB_kk = [F⁻¹]_kk` through a Cholesky solve.
pub fn crb_from_fim(f: &FisherMatrix) -> Result<CrbResult> {
    let condition = condition_number(&f.entries);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularFim { condition });
    }
    let chol = f.entries.clone().cholesky().ok_or(Error::SingularFim { condition })?;
    let inv = chol.inverse();
    let k = f.dim();
    Ok(CrbResult {
        diag: (0..k).map(|i| inv[(i, i)]).collect(),
        condition_number: condition,
        n_trials: 1,
        std_err: vec![0.0; k],
        n_singular: 0,
    })
}

/// RIS draws for every slot of one Monte Carlo trial.
pub fn trial_omegas(scenario: &Scenario, seed: u64, trial: u64, mode: RisMode) -> Vec<DVector<Complex64>> {
    let n = scenario.n_elements;
    match mode {
        RisMode::PerSlot => {
            (0..scenario.n_slots as u64).map(|slot| scenario.ris.sample_vec(n, &mut rng::substream(seed, trial, slot))).collect()
        }
        RisMode::Fixed => {
            let w = scenario.ris.sample_vec(n, &mut rng::substream(seed, trial, 0));
            vec![w; scenario.n_slots]
        }
    }
}

/// Mean and standard error of the per-trial CRB over `n_trials` RIS realizations.
///
/// Trial `i` draws from its own substream of `seed` and the reduction runs in
/// trial order, so the result does not depend on the worker count.
pub fn monte_carlo_crb(scenario: &Scenario, n_trials: usize, seed: u64, opts: &MonteCarloOptions) -> Result<CrbResult> {
    scenario.validate()?;
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be at least 1".into()));
    }
    let kernel = FimKernel::new(scenario);
    let signals = scenario.signals(seed);

    let run_trial = |trial: usize| -> Option<(Vec<f64>, f64)> {
        let omegas = trial_omegas(scenario, seed, trial as u64, opts.ris_mode);
        let f = FisherMatrix::from_raw(kernel.accumulate(&omegas, &signals, scenario.noise_power), scenario);
        crb_from_fim(&f).ok().map(|c| (c.diag, c.condition_number))
    };
    let per_trial: Vec<Option<(Vec<f64>, f64)>> = match opts.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot build worker pool: {e}")))?;
            pool.install(|| (0..n_trials).into_par_iter().map(run_trial).collect())
        }
        None => (0..n_trials).into_par_iter().map(run_trial).collect(),
    };

    let accepted: Vec<&(Vec<f64>, f64)> = per_trial.iter().flatten().collect();
    let n_singular = n_trials - accepted.len();
    if 2 * n_singular > n_trials || accepted.is_empty() {
        return Err(Error::TooManySingular { singular: n_singular, trials: n_trials });
    }
    let k = scenario.n_targets();
    let m = accepted.len() as f64;
    let mut mean = vec![0.0; k];
    for (diag, _) in &accepted {
        for (acc, v) in mean.iter_mut().zip(diag) {
            *acc += v;
        }
    }
    mean.iter_mut().for_each(|v| *v /= m);
    let std_err = if accepted.len() > 1 {
        (0..k)
            .map(|i| {
                let ss: f64 = accepted.iter().map(|(d, _)| (d[i] - mean[i]).powi(2)).sum();
                (ss / (m - 1.0)).sqrt() / m.sqrt()
            })
            .collect()
    } else {
        vec![0.0; k]
    };
    let condition_number = accepted.iter().map(|(_, c)| *c).fold(0.0, f64::max);
    Ok(CrbResult { diag: mean, condition_number, n_trials, std_err, n_singular })
}
