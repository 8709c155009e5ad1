//! Sweep runners behind the `ris-crb` command line tool.
//!
//! Each runner takes an [`ExperimentConfig`] and returns plain rows; writing
//! them out is left to the caller. Everything is a pure function of the
//! config, so equal configs give equal rows regardless of worker count.

use std::f64::consts::{PI, TAU};
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fim::{
    fim_exact, fim_expected, fim_expected_with_covariance, monte_carlo_crb, sample_covariance, trial_omegas, MonteCarloOptions, RisMode,
};
use crate::model::{db_to_linear, wrap_angle, RisDistribution, Scenario, SignalModel};
use crate::rng::{scenario_stream, substream};
use crate::scaling::{asymptotic_crb_entry, cosine_sum_leading, detect_regime, RegimeKind, DEFAULT_SYMMETRY_TOL};
use crate::spectrum::crb::{crb_from_curve, empirical_crb};
use crate::spectrum::density::{density_curve, GridSpec, DEFAULT_Y_OFFSET, MASS_TOL};
use crate::spectrum::empirical::{compare_histogram, empirical_spectrum_draw, spectral_scenario, DEFAULT_BINS};
use crate::spectrum::stieltjes::{
    quadratic_coefficients, quadratic_residual, rational_residual, stieltjes, QuadraticCoefficients, QUADRATIC_TOL, RATIONAL_TOL,
};
use crate::spectrum::transforms::composition_mismatch_on_grid;
use crate::spectrum::{RisSpectralModel, SpectralModel};

/// Random-angle draws use this purpose index of the scenario stream.
const ANGLE_STREAM: u64 = 1;
/// Minimum gap between random angles of the same kind, radians.
const RANDOM_MIN_GAP: f64 = 0.3;
/// Minimum `|wrap(θ + φ)|` for a random target meant to be non-mirrored.
const RANDOM_MIRROR_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CrbVsN,
    CrbVsR,
    Spectrum,
    Moments,
    Validate,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::CrbVsN => "crb-vs-n",
            ExperimentKind::CrbVsR => "crb-vs-r",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Moments => "moments",
            ExperimentKind::Validate => "validate",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [ExperimentKind::CrbVsN, ExperimentKind::CrbVsR, ExperimentKind::Spectrum, ExperimentKind::Moments, ExperimentKind::Validate]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Every knob of every experiment; fields an experiment does not use are
/// ignored by it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub thetas: Vec<f64>,
    /// Sensor angles; `crb-vs-r` uses the first R of them.
    pub phis: Vec<f64>,
    /// RIS size for the spectrum experiment.
    pub n_elements: usize,
    pub n_slots: usize,
    /// Per-target SNR in dB; powers are `σ²·10^{snr/10}`.
    pub snr_db: f64,
    pub noise_power: f64,
    pub signal_model: SignalModel,
    pub ris: RisDistribution,
    pub n_sweep: Vec<usize>,
    pub r_sweep: Vec<usize>,
    pub n_trials: usize,
    pub seed: u64,
    pub output_path: Option<String>,
    pub output_format: OutputFormat,
    pub c1: f64,
    pub c2: f64,
    pub spectral_models: Vec<RisSpectralModel>,
    pub grid: GridSpec,
    pub y_offset: f64,
    /// Independent RIS draws pooled into the empirical histogram.
    pub draws: usize,
    pub bins: usize,
    /// Minimum spacing of the spectral layout, in units of `2π/N`.
    pub separation_factor: f64,
    /// Distributions tabulated by the moments experiment.
    pub distributions: Vec<RisDistribution>,
    pub moment_samples: usize,
    /// Hold one RIS draw for all T slots instead of redrawing per slot.
    pub fixed_ris: bool,
    /// Replace the pinned angles by random ones drawn from `seed`.
    pub random_angles: bool,
    /// Run the spectrum experiment at N = 2000.
    pub full_scale: bool,
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Defaults for `kind`; the CRB presets share the three-target geometry.
    pub fn preset(kind: ExperimentKind) -> Self {
        let mut config = ExperimentConfig {
            experiment: kind,
            // θ₁ = 0.4 mirrors φ₁ = −0.4; θ₂, θ₃ have no mirror
            thetas: vec![0.4, 1.1, -2.0],
            phis: vec![-0.4, 0.7, 1.5, -1.9, 2.6],
            n_elements: 1000,
            n_slots: 50,
            snr_db: 0.0,
            noise_power: 1.0,
            signal_model: SignalModel::UncorrelatedDiagonal,
            ris: RisDistribution::uniform_phase(0.0, PI),
            n_sweep: vec![64, 128, 256, 512, 1024],
            r_sweep: vec![5],
            n_trials: 200,
            seed: 2024,
            output_path: None,
            output_format: OutputFormat::Csv,
            c1: 0.3,
            c2: 0.35,
            spectral_models: vec![RisSpectralModel::ConstantModulus, RisSpectralModel::DiscreteAmplitude { x: 1.0, y: 3.0, p: 0.5 }],
            grid: GridSpec::default(),
            y_offset: DEFAULT_Y_OFFSET,
            draws: 10,
            bins: DEFAULT_BINS,
            separation_factor: 2.0,
            distributions: vec![
                RisDistribution::uniform_phase(0.0, TAU),
                RisDistribution::uniform_phase(0.0, PI),
                RisDistribution::binary_phase(),
                RisDistribution::DiscreteAmplitude { x: 1.0, y: 3.0, p: 0.5 },
            ],
            moment_samples: 1_000_000,
            fixed_ris: false,
            random_angles: false,
            full_scale: false,
            workers: None,
        };
        if kind == ExperimentKind::CrbVsR {
            // θ₁ = 1.1 has no mirror among the ten sensors
            config.thetas = vec![1.1, 0.4, -2.0];
            config.phis = vec![0.7, 1.5, -1.9, 2.6, -0.1, 0.3, -2.6, 1.0, -1.4, 2.3];
            config.n_sweep = vec![512];
            config.r_sweep = vec![3, 5, 10];
        }
        config
    }

    /// Preset of `kind` with the keys of a flat JSON object laid over it.
    pub fn from_json_overrides(kind: ExperimentKind, text: &str) -> Result<Self> {
        let overrides: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config is not valid JSON: {e}")))?;
        let serde_json::Value::Object(overrides) = overrides else {
            return Err(Error::InvalidInput("config must be a JSON object".into()));
        };
        let mut base = serde_json::to_value(Self::preset(kind)).expect("config serializes");
        let map = base.as_object_mut().expect("config is an object");
        for (key, value) in overrides {
            if !map.contains_key(&key) {
                return Err(Error::InvalidInput(format!("unknown config key '{key}'")));
            }
            map.insert(key, value);
        }
        let config: ExperimentConfig = serde_json::from_value(base).map_err(|e| Error::InvalidInput(format!("bad config value: {e}")))?;
        if config.experiment != kind {
            return Err(Error::InvalidInput(format!(
                "config names experiment '{}' but '{}' was requested",
                config.experiment.name(),
                kind.name()
            )));
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let ascending = |name: &str, v: &[usize]| -> Result<()> {
            if v.is_empty() || v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput(format!("{name} must be non-empty and strictly ascending")));
            }
            Ok(())
        };
        match self.experiment {
            ExperimentKind::CrbVsN => ascending("n_sweep", &self.n_sweep)?,
            ExperimentKind::CrbVsR => {
                ascending("n_sweep", &self.n_sweep)?;
                ascending("r_sweep", &self.r_sweep)?;
                if !self.random_angles && self.r_sweep.last().is_some_and(|&r| r > self.phis.len()) {
                    return Err(Error::InvalidInput(format!(
                        "r_sweep reaches {} but only {} sensor angles are given",
                        self.r_sweep[self.r_sweep.len() - 1],
                        self.phis.len()
                    )));
                }
                if self.r_sweep[0] == 0 {
                    return Err(Error::InvalidInput("r_sweep entries must be positive".into()));
                }
            }
            ExperimentKind::Spectrum => {
                if self.spectral_models.is_empty() || self.bins == 0 {
                    return Err(Error::InvalidInput("spectrum needs at least one model and one bin".into()));
                }
                for ris in &self.spectral_models {
                    SpectralModel { c1: self.c1, c2: self.c2, ris: *ris }.validate()?;
                }
                if !(self.y_offset > 0.0) || !(self.separation_factor >= 0.0) {
                    return Err(Error::InvalidInput("y_offset must be positive and separation_factor non-negative".into()));
                }
            }
            ExperimentKind::Moments => {
                if self.distributions.is_empty() || self.moment_samples < 2 {
                    return Err(Error::InvalidInput("moments needs distributions and at least two samples".into()));
                }
                for d in &self.distributions {
                    d.validate()?;
                }
            }
            ExperimentKind::Validate => {}
        }
        if self.n_trials == 0 {
            return Err(Error::InvalidInput("n_trials must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidInput("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn options(&self) -> MonteCarloOptions {
        MonteCarloOptions { ris_mode: if self.fixed_ris { RisMode::Fixed } else { RisMode::PerSlot }, workers: self.workers }
    }

    /// Scenario at RIS size `n` with the first `r` sensors.
    pub fn scenario(&self, n: usize, r: usize) -> Result<Scenario> {
        let (thetas, phis) = if self.random_angles {
            random_geometry(self.thetas.len(), r, self.seed, self.experiment == ExperimentKind::CrbVsN)
        } else {
            if r > self.phis.len() {
                return Err(Error::InvalidInput(format!("R = {r} exceeds the {} configured sensors", self.phis.len())));
            }
            (self.thetas.clone(), self.phis[..r].to_vec())
        };
        let power = self.noise_power * db_to_linear(self.snr_db);
        let scenario = Scenario {
            powers: vec![power; thetas.len()],
            thetas,
            phis,
            n_elements: n,
            n_slots: self.n_slots,
            noise_power: self.noise_power,
            signal_model: self.signal_model,
            ris: self.ris.clone(),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn circular_gap(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// `k` targets and `r` sensors drawn from the scenario stream of `seed`.
///
/// Angles of one kind stay [`RANDOM_MIN_GAP`] apart. With `mirror_first`,
/// target 0 mirrors sensor 0; every other target keeps a margin from all
/// mirror positions.
pub fn random_geometry(k: usize, r: usize, seed: u64, mirror_first: bool) -> (Vec<f64>, Vec<f64>) {
    let mut rng = scenario_stream(seed, ANGLE_STREAM);
    let mut draw = |taken: &[f64], extra: &dyn Fn(f64) -> bool| -> f64 {
        loop {
            let a = wrap_angle(rng.random_range(-PI..PI));
            if taken.iter().all(|&t| circular_gap(a, t) >= RANDOM_MIN_GAP) && extra(a) {
                return a;
            }
        }
    };
    let mut phis = Vec::with_capacity(r);
    for _ in 0..r {
        let a = draw(&phis, &|_| true);
        phis.push(a);
    }
    let mut thetas = Vec::with_capacity(k);
    for i in 0..k {
        if i == 0 && mirror_first && r > 0 {
            let mirrored = wrap_angle(-phis[0]);
            thetas.push(mirrored);
            continue;
        }
        let a = draw(&thetas, &|a| phis.iter().all(|&p| wrap_angle(a + p).abs() >= RANDOM_MIRROR_MARGIN));
        thetas.push(a);
    }
    (thetas, phis)
}

/// One (N, R, target) point of a CRB sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub n_sensors: usize,
    pub target_index: usize,
    pub crb_exact_mean: f64,
    pub crb_exact_stderr: f64,
    /// Leading-order prediction; empty when the closed form does not apply.
    pub crb_asymptotic: Option<f64>,
    pub regime: RegimeKind,
    pub n_singular_trials: usize,
}

fn sweep_point(config: &ExperimentConfig, n: usize, r: usize) -> Result<Vec<SweepRow>> {
    let at = |e: Error| Error::AtSweepPoint { n, r, source: Box::new(e) };
    let scenario = config.scenario(n, r).map_err(at)?;
    let crb = monte_carlo_crb(&scenario, config.n_trials, config.seed, &config.options()).map_err(at)?;
    let regimes = detect_regime(&scenario, DEFAULT_SYMMETRY_TOL);
    Ok(regimes
        .iter()
        .enumerate()
        .map(|(i, regime)| SweepRow {
            n,
            n_sensors: r,
            target_index: i,
            crb_exact_mean: crb.diag[i],
            crb_exact_stderr: crb.std_err[i],
            crb_asymptotic: asymptotic_crb_entry(i, &scenario, regime).ok(),
            regime: regime.kind,
            n_singular_trials: crb.n_singular,
        })
        .collect())
}

/// CRB against RIS size: one row per (N, target).
pub fn run_crb_vs_n(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let r = config.phis.len();
    let mut rows = Vec::new();
    for &n in &config.n_sweep {
        rows.extend(sweep_point(config, n, r)?);
    }
    Ok(rows)
}

/// CRB against sensor count: one row per (N, R, target).
pub fn run_crb_vs_r(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &n in &config.n_sweep {
        for &r in &config.r_sweep {
            rows.extend(sweep_point(config, n, r)?);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumRowKind {
    /// A point of the limiting density.
    Density,
    /// A histogram bin; densities are bin averages.
    Bin,
    /// Per-model totals.
    Summary,
}

/// One line of the spectrum table. Columns a kind does not use stay empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub model: String,
    pub kind: SpectrumRowKind,
    pub lambda: Option<f64>,
    pub bin_lo: Option<f64>,
    pub bin_hi: Option<f64>,
    pub mu_theory: Option<f64>,
    pub mu_empirical: Option<f64>,
    /// Histogram L1 distance (summary rows).
    pub l1: Option<f64>,
    /// Numerical mass of the limiting density (summary rows).
    pub mass: Option<f64>,
    /// Per-target spectral CRB from the limiting density (summary rows).
    pub crb_theory: Option<f64>,
    /// Per-target spectral CRB from the first empirical draw (summary rows).
    pub crb_empirical: Option<f64>,
}

impl SpectrumRow {
    fn empty(model: &str, kind: SpectrumRowKind) -> Self {
        SpectrumRow {
            model: model.to_string(),
            kind,
            lambda: None,
            bin_lo: None,
            bin_hi: None,
            mu_theory: None,
            mu_empirical: None,
            l1: None,
            mass: None,
            crb_theory: None,
            crb_empirical: None,
        }
    }
}

pub fn model_label(ris: &RisSpectralModel) -> String {
    match ris {
        RisSpectralModel::ConstantModulus => "constant-modulus".into(),
        RisSpectralModel::DiscreteAmplitude { x, y, p } => format!("discrete-amplitude(x={x},y={y},p={p})"),
    }
}

/// Limiting density per model, and with `draws > 0` the pooled empirical
/// histogram against it.
pub fn run_spectrum(config: &ExperimentConfig) -> Result<Vec<SpectrumRow>> {
    config.validate()?;
    let n = if config.full_scale { 2000 } else { config.n_elements };
    let mut rows = Vec::new();
    for ris in &config.spectral_models {
        let model = SpectralModel { c1: config.c1, c2: config.c2, ris: *ris };
        let label = model_label(ris);
        let curve = density_curve(&model, &config.grid, config.y_offset)?;
        for (&l, &d) in curve.lambdas.iter().zip(&curve.density) {
            rows.push(SpectrumRow { lambda: Some(l), mu_theory: Some(d), ..SpectrumRow::empty(&label, SpectrumRowKind::Density) });
        }
        let mut summary = SpectrumRow { mass: Some(curve.mass), ..SpectrumRow::empty(&label, SpectrumRowKind::Summary) };
        let k = (model.c1 * n as f64).round() as usize;
        summary.crb_theory = crb_from_curve(&curve, config.noise_power, config.n_slots, n, k).ok().map(|c| c.per_target);
        if config.draws > 0 {
            let scenario = spectral_scenario(&model, n)?;
            let mut pooled = Vec::with_capacity(config.draws * scenario.n_targets());
            for draw in 0..config.draws as u64 {
                let eig = empirical_spectrum_draw(&scenario, config.seed, draw, config.separation_factor)?;
                if draw == 0 {
                    summary.crb_empirical = empirical_crb(&eig, config.noise_power, config.n_slots, n).ok().map(|c| c.per_target);
                }
                pooled.extend(eig);
            }
            let hist = compare_histogram(&curve, &pooled, config.bins)?;
            for (i, w) in hist.edges.windows(2).enumerate() {
                let width = w[1] - w[0];
                rows.push(SpectrumRow {
                    lambda: Some(0.5 * (w[0] + w[1])),
                    bin_lo: Some(w[0]),
                    bin_hi: Some(w[1]),
                    mu_theory: Some(hist.theory[i] / width),
                    mu_empirical: Some(hist.empirical[i] / width),
                    ..SpectrumRow::empty(&label, SpectrumRowKind::Bin)
                });
            }
            summary.l1 = Some(hist.l1);
        }
        rows.push(summary);
    }
    Ok(rows)
}

/// Analytic against sampled RIS moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub distribution: String,
    pub e1_analytic: f64,
    pub e2_analytic: f64,
    pub e1_sampled: f64,
    pub e2_sampled: f64,
    pub e1_stderr: f64,
    pub e2_stderr: f64,
    pub n_samples: usize,
}

impl MomentRow {
    /// Both sampled moments within `k` standard errors (plus round-off slack).
    pub fn within(&self, k: f64) -> bool {
        let slack = 1e-12;
        (self.e1_sampled - self.e1_analytic).abs() <= k * self.e1_stderr + slack
            && (self.e2_sampled - self.e2_analytic).abs() <= k * self.e2_stderr + slack
    }
}

pub fn distribution_label(d: &RisDistribution) -> String {
    match d {
        RisDistribution::ConstantModulusUniformPhase { phase_lo, phase_hi } => format!("uniform-phase({phase_lo:.6},{phase_hi:.6})"),
        RisDistribution::DiscretePhase { phases, probs } => format!("discrete-phase({phases:?},{probs:?})"),
        RisDistribution::DiscreteAmplitude { x, y, p } => format!("discrete-amplitude(x={x},y={y},p={p})"),
    }
}

/// Sample moments of `samples` draws.
///
/// `E2` is estimated without bias as `|mean|² − Var(mean)`; its standard
/// error uses the Gaussian approximation `sqrt(2|m|²v + v²)`.
pub fn sample_moments(dist: &RisDistribution, samples: usize, seed: u64, stream: u64) -> MomentRow {
    let mut rng = substream(seed, stream, 0);
    let mut sum = Complex64::new(0.0, 0.0);
    let (mut p1, mut p2) = (0.0, 0.0);
    for _ in 0..samples {
        let w = dist.sample(&mut rng);
        sum += w;
        let p = w.norm_sqr();
        p1 += p;
        p2 += p * p;
    }
    let n = samples as f64;
    let mean = sum / n;
    let e1 = p1 / n;
    let e1_var = (p2 / n - e1 * e1).max(0.0) * n / (n - 1.0);
    let v = (e1 - mean.norm_sqr()).max(0.0) / (n - 1.0);
    let analytic = dist.moments();
    MomentRow {
        distribution: distribution_label(dist),
        e1_analytic: analytic.e1,
        e2_analytic: analytic.e2,
        e1_sampled: e1,
        e2_sampled: mean.norm_sqr() - v,
        e1_stderr: (e1_var / n).sqrt(),
        e2_stderr: (2.0 * mean.norm_sqr() * v + v * v).sqrt(),
        n_samples: samples,
    }
}

pub fn run_moments(config: &ExperimentConfig) -> Result<Vec<MomentRow>> {
    config.validate()?;
    Ok(config.distributions.iter().enumerate().map(|(i, d)| sample_moments(d, config.moment_samples, config.seed, i as u64)).collect())
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub tolerance: f64,
    /// Wall time; kept out of serialized output so reruns stay byte-identical.
    #[serde(skip)]
    pub runtime_ms: f64,
}

fn timed(name: &str, tolerance: f64, f: impl FnOnce() -> Result<f64>) -> Check {
    let start = Instant::now();
    let observed = f().unwrap_or(f64::INFINITY);
    Check { name: name.to_string(), passed: observed <= tolerance, observed, tolerance, runtime_ms: start.elapsed().as_secs_f64() * 1e3 }
}

fn random_upper_points(seed: u64, purpose: u64, count: usize, scale: f64) -> Vec<Complex64> {
    let mut rng = scenario_stream(seed, purpose);
    (0..count)
        .map(|_| {
            let re = rng.random_range(-0.5..3.0) * scale;
            let im = scale * 10f64.powf(rng.random_range(-6.0..1.0));
            Complex64::new(re, im)
        })
        .collect()
}

/// Largest relative Frobenius gap between the Monte Carlo mean of the exact
/// FIM and the expected FIM, for a small scenario.
pub fn expected_fim_gap(scenario: &Scenario, draws: usize, seed: u64) -> Result<f64> {
    let signals = scenario.signals(seed);
    let k = scenario.n_targets();
    let mut acc = nalgebra::DMatrix::<f64>::zeros(k, k);
    for trial in 0..draws as u64 {
        let omegas = trial_omegas(scenario, seed, trial, RisMode::PerSlot);
        acc += fim_exact(scenario, &omegas, &signals)?.entries;
    }
    acc /= draws as f64;
    let expected = fim_expected_with_covariance(scenario, &sample_covariance(&signals))?.entries;
    Ok((acc - &expected).norm() / expected.norm())
}

fn brute_cosine_sum(psi: f64, n: usize) -> f64 {
    let s: Complex64 = (1..n).map(|k| Complex64::from_polar(k as f64, k as f64 * psi)).sum();
    s.norm_sqr()
}

/// Reduced-scale invariant checks of every module.
pub fn run_validate(config: &ExperimentConfig) -> Result<Vec<Check>> {
    run_validate_with(config, quadratic_coefficients)
}

/// [`run_validate`] with a substitute for the quadratic coefficients, so a
/// corrupted transcription can be shown to trip the free-convolution check.
pub fn run_validate_with(config: &ExperimentConfig, coeffs: QuadraticCoefficients) -> Result<Vec<Check>> {
    config.validate()?;
    let seed = config.seed;
    let cm = SpectralModel::constant_modulus(0.3, 0.35);
    let da = SpectralModel::discrete_amplitude(0.3, 0.35, 1.0, 3.0, 0.5);
    let mut checks = Vec::new();

    for (name, model, purpose) in [("herglotz-constant-modulus", cm, 10), ("herglotz-discrete-amplitude", da, 11)] {
        let points = random_upper_points(seed, purpose, 200, model.mean_eigenvalue() * 3.0);
        checks.push(timed(name, 0.0, || {
            let mut bad = 0usize;
            for z in &points {
                if !(stieltjes(*z, &model)?.m.im > 0.0) {
                    bad += 1;
                }
            }
            Ok(bad as f64)
        }));
    }
    let points = random_upper_points(seed, 12, 200, 0.3);
    checks.push(timed("quadratic-residual", QUADRATIC_TOL, || {
        points.iter().try_fold(0.0f64, |acc, z| Ok(acc.max(quadratic_residual(&cm, *z, stieltjes(*z, &cm)?.m))))
    }));
    checks.push(timed("quintic-residual", RATIONAL_TOL, || {
        points.iter().try_fold(0.0f64, |acc, z| Ok(acc.max(rational_residual(&da, *z, stieltjes(*z, &da)?.m))))
    }));
    checks.push(timed("free-convolution-consistency", 1e-9, || composition_mismatch_on_grid(&cm, 10, coeffs)));
    for (name, model) in [("density-mass-constant-modulus", cm), ("density-mass-discrete-amplitude", da)] {
        checks.push(timed(name, MASS_TOL, || Ok((density_curve(&model, &GridSpec::default(), DEFAULT_Y_OFFSET)?.mass - 1.0).abs())));
    }

    let small = Scenario {
        thetas: vec![0.4, -1.3],
        phis: vec![-0.4, 1.0, 2.2],
        n_elements: 16,
        n_slots: 2,
        powers: vec![1.0, 2.0],
        noise_power: 1.0,
        signal_model: SignalModel::UncorrelatedDiagonal,
        ris: RisDistribution::uniform_phase(0.0, PI),
    };
    checks.push(timed("expected-fim-oracle", 0.02, || expected_fim_gap(&small, 4000, seed)));

    let fig1 = ExperimentConfig::preset(ExperimentKind::CrbVsN);
    checks.push(timed("scaling-law-exponents", 0.05, || {
        let f = |n| -> Result<nalgebra::DMatrix<f64>> { Ok(fim_expected(&fig1.scenario(n, 5)?)?.entries) };
        let (a, b) = (f(256)?, f(512)?);
        let sym = (b[(0, 0)] / a[(0, 0)] / 16.0 - 1.0).abs();
        let non = (b[(1, 1)] / a[(1, 1)] / 8.0 - 1.0).abs();
        Ok(sym.max(non))
    }));
    checks.push(timed("crb-monotone-in-slots", 0.0, || {
        let base = fig1.scenario(64, 5)?;
        let longer = Scenario { n_slots: base.n_slots * 2, ..base.clone() };
        let a = crate::fim::crb_from_fim(&fim_expected(&base)?)?.diag;
        let b = crate::fim::crb_from_fim(&fim_expected(&longer)?)?.diag;
        Ok(a.iter().zip(&b).filter(|(x, y)| y >= x).count() as f64)
    }));
    checks.push(timed("cosine-sum-closed-form", 1.0, || {
        let n = 2000;
        [0.5, 1.0, PI].iter().try_fold(0.0f64, |acc, &psi| {
            let rel = (cosine_sum_leading(psi, n)? / brute_cosine_sum(psi, n) - 1.0).abs();
            // relative error times N: bounded by a small constant
            Ok(acc.max(rel * n as f64 * (0.5 * psi).sin().abs() / 4.0))
        })
    }));
    checks.push(timed("ris-moments", 0.0, || {
        let rows: Vec<MomentRow> =
            config.distributions.iter().enumerate().map(|(i, d)| sample_moments(d, 100_000, seed, 100 + i as u64)).collect();
        Ok(rows.iter().filter(|r| !r.within(3.0)).count() as f64)
    }));
    checks.push(timed("worker-determinism", 0.0, || {
        let s = fig1.scenario(32, 5)?;
        let one = monte_carlo_crb(&s, 16, seed, &MonteCarloOptions { workers: Some(1), ..Default::default() })?;
        let many = monte_carlo_crb(&s, 16, seed, &MonteCarloOptions { workers: Some(4), ..Default::default() })?;
        Ok(if one == many { 0.0 } else { 1.0 })
    }));
    Ok(checks)
}

/// Rows of any experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Rows {
    Sweep(Vec<SweepRow>),
    Spectrum(Vec<SpectrumRow>),
    Moments(Vec<MomentRow>),
    Checks(Vec<Check>),
}

impl Rows {
    pub fn len(&self) -> usize {
        match self {
            Rows::Sweep(r) => r.len(),
            Rows::Spectrum(r) => r.len(),
            Rows::Moments(r) => r.len(),
            Rows::Checks(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn run(config: &ExperimentConfig) -> Result<Rows> {
    Ok(match config.experiment {
        ExperimentKind::CrbVsN => Rows::Sweep(run_crb_vs_n(config)?),
        ExperimentKind::CrbVsR => Rows::Sweep(run_crb_vs_r(config)?),
        ExperimentKind::Spectrum => Rows::Spectrum(run_spectrum(config)?),
        ExperimentKind::Moments => Rows::Moments(run_moments(config)?),
        ExperimentKind::Validate => Rows::Checks(run_validate(config)?),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Rows of `rows` for one target, ordered as produced.
pub fn target_rows(rows: &[SweepRow], target: usize) -> Vec<&SweepRow> {
    rows.iter().filter(|r| r.target_index == target).collect()
}
