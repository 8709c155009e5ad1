//! Array geometry and the statistical model of the RIS coefficients.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Maps an angle onto `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    // rem_euclid can land on TAU itself after rounding
    if y <= -PI {
        y += TAU;
    }
    y
}

/// `a(θ) = [1, e^{jθ}, …, e^{j(n-1)θ}]ᵀ`.
pub fn steering_vector(theta: f64, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |k, _| Complex64::from_polar(1.0, k as f64 * theta))
}

/// `∂a/∂θ`, entry `k` is `j·k·e^{jkθ}`.
pub fn steering_derivative(theta: f64, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |k, _| J * k as f64 * Complex64::from_polar(1.0, k as f64 * theta))
}

/// Target manifold `A_Θ` (N×K), one steering vector per column.
pub fn manifold(thetas: &[f64], n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, thetas.len(), |k, c| Complex64::from_polar(1.0, k as f64 * thetas[c]))
}

/// Column-wise derivative `Ȧ_Θ` (N×K).
pub fn manifold_derivative(thetas: &[f64], n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, thetas.len(), |k, c| J * k as f64 * Complex64::from_polar(1.0, k as f64 * thetas[c]))
}

/// Sensor manifold `A_Φ` (R×N). Row `r` is the plain transpose `a(φ_r)ᵀ`, not
/// its conjugate, which is why mirrored geometry means `θ + φ = 0`.
pub fn sensor_manifold(phis: &[f64], n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(phis.len(), n, |r, k| Complex64::from_polar(1.0, k as f64 * phis[r]))
}

/// Correlation structure of the impinging signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalModel {
    /// Independent signals, `R = diag(p)`.
    UncorrelatedDiagonal,
    /// Fully coherent signals, `R_mn = sqrt(p_m p_n)` (all-one for equal powers).
    CoherentAllOne,
}

/// Law of a single RIS reflection coefficient `ω = β e^{jα}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RisDistribution {
    /// `β = 1`, `α ~ U(phase_lo, phase_hi)`.
    ConstantModulusUniformPhase { phase_lo: f64, phase_hi: f64 },
    /// `β = 1`, `α` takes `phases[i]` with probability `probs[i]`.
    DiscretePhase { phases: Vec<f64>, probs: Vec<f64> },
    /// `β = x` with probability `p`, otherwise `y`; `α ~ U(0, 2π)`.
    DiscreteAmplitude { x: f64, y: f64, p: f64 },
}

/// First and second moments of one RIS coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// `E[ω ω*]`, the diagonal of `Σ = E[ω ω^H]`.
    pub e1: f64,
    /// `|E[ω]|²`, every off-diagonal entry of `Σ`.
    pub e2: f64,
}

impl RisDistribution {
    pub fn uniform_phase(phase_lo: f64, phase_hi: f64) -> Self {
        RisDistribution::ConstantModulusUniformPhase { phase_lo, phase_hi }
    }

    /// Binary phase `{π/2, −π/2}` with equal weights.
    pub fn binary_phase() -> Self {
        RisDistribution::DiscretePhase { phases: vec![PI / 2.0, -PI / 2.0], probs: vec![0.5, 0.5] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RisDistribution::ConstantModulusUniformPhase { phase_lo, phase_hi } => {
                let ok = phase_lo.is_finite() && phase_hi.is_finite() && *phase_lo >= 0.0 && *phase_hi <= TAU && phase_lo < phase_hi;
                if !ok {
                    return Err(Error::InvalidInput(format!(
                        "uniform phase interval ({phase_lo}, {phase_hi}) must satisfy 0 <= lo < hi <= 2π"
                    )));
                }
            }
            RisDistribution::DiscretePhase { phases, probs } => {
                if phases.is_empty() || phases.len() != probs.len() {
                    return Err(Error::InvalidInput(
                        "discrete phase levels and probabilities must be non-empty and of equal length".into(),
                    ));
                }
                if phases.iter().any(|p| !p.is_finite()) {
                    return Err(Error::InvalidInput("discrete phase levels must be finite".into()));
                }
                if probs.iter().any(|&p| !(p >= 0.0)) {
                    return Err(Error::InvalidInput("phase probabilities must be non-negative".into()));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!("phase probabilities sum to {total}, not 1")));
                }
            }
            RisDistribution::DiscreteAmplitude { x, y, p } => {
                if !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite()) {
                    return Err(Error::InvalidInput(format!("amplitudes must be positive, got x={x}, y={y}")));
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::InvalidInput(format!("amplitude probability {p} outside [0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// `E[ω]` in closed form.
    pub fn mean(&self) -> Complex64 {
        match self {
            RisDistribution::ConstantModulusUniformPhase { phase_lo, phase_hi } => {
                let width = phase_hi - phase_lo;
                // (e^{jb} - e^{ja}) / (j (b - a))
                (Complex64::from_polar(1.0, *phase_hi) - Complex64::from_polar(1.0, *phase_lo)) / (J * width)
            }
            RisDistribution::DiscretePhase { phases, probs } => {
                phases.iter().zip(probs).map(|(&a, &p)| p * Complex64::from_polar(1.0, a)).sum()
            }
            RisDistribution::DiscreteAmplitude { .. } => Complex64::new(0.0, 0.0),
        }
    }

    /// `E1 = E|ω|²` and `E2 = |Eω|²`; an `E2` that is zero up to round-off
    /// (full-circle or antipodal phases) is returned as exactly zero.
    pub fn moments(&self) -> Moments {
        match self {
            RisDistribution::ConstantModulusUniformPhase { phase_lo, phase_hi } => {
                // |E e^{jα}|² = sinc²-type closed form, avoids cancellation in `mean()`
                let half = 0.5 * (phase_hi - phase_lo);
                let s = half.sin() / half;
                Moments { e1: 1.0, e2: snap_zero(s * s) }
            }
            RisDistribution::DiscretePhase { .. } => Moments { e1: 1.0, e2: snap_zero(self.mean().norm_sqr()) },
            RisDistribution::DiscreteAmplitude { x, y, p } => Moments { e1: p * x * x + (1.0 - p) * y * y, e2: 0.0 },
        }
    }

    /// True when every draw has `|ω| = 1`.
    pub fn is_constant_modulus(&self) -> bool {
        !matches!(self, RisDistribution::DiscreteAmplitude { .. })
    }

    /// One draw of `ω`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self {
            RisDistribution::ConstantModulusUniformPhase { phase_lo, phase_hi } => {
                Complex64::from_polar(1.0, rng.random_range(*phase_lo..*phase_hi))
            }
            RisDistribution::DiscretePhase { phases, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (&a, &p) in phases.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return Complex64::from_polar(1.0, a);
                    }
                }
                Complex64::from_polar(1.0, phases[phases.len() - 1])
            }
            RisDistribution::DiscreteAmplitude { x, y, p } => {
                let amplitude = if rng.random::<f64>() < *p { *x } else { *y };
                Complex64::from_polar(amplitude, rng.random_range(0.0..TAU))
            }
        }
    }

    /// `n` i.i.d. draws from `rng`.
    pub fn sample_vec<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DVector<Complex64> {
        DVector::from_fn(n, |_, _| self.sample(rng))
    }
}

fn snap_zero(e2: f64) -> f64 {
    if e2 < 1e-24 {
        0.0
    } else {
        e2
    }
}

pub fn ris_moments(dist: &RisDistribution) -> Moments {
    dist.moments()
}

/// `n` i.i.d. coefficients, reproducible from `seed`.
pub fn sample_ris(dist: &RisDistribution, n: usize, seed: u64) -> DVector<Complex64> {
    let mut rng = rng::substream(seed, 0, 0);
    dist.sample_vec(n, &mut rng)
}

/// `Σ = E[ω ω^H]`: `e1` on the diagonal, `e2` elsewhere.
pub fn sigma_matrix(dist: &RisDistribution, n: usize) -> DMatrix<Complex64> {
    let Moments { e1, e2 } = dist.moments();
    DMatrix::from_fn(n, n, |i, j| Complex64::new(if i == j { e1 } else { e2 }, 0.0))
}

/// A complete problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Target spatial frequencies, radians.
    pub thetas: Vec<f64>,
    /// Sensor spatial frequencies, radians.
    pub phis: Vec<f64>,
    /// RIS size N.
    pub n_elements: usize,
    /// Snapshot count T.
    pub n_slots: usize,
    /// Per-target signal powers (linear).
    pub powers: Vec<f64>,
    /// Noise power σ² (linear).
    pub noise_power: f64,
    pub signal_model: SignalModel,
    pub ris: RisDistribution,
}

fn check_angles(name: &str, angles: &[f64]) -> Result<()> {
    for &a in angles {
        if !a.is_finite() || a <= -PI || a > PI {
            return Err(Error::InvalidInput(format!("{name} angle {a} outside (-π, π]")));
        }
    }
    Ok(())
}

impl Scenario {
    pub fn n_targets(&self) -> usize {
        self.thetas.len()
    }

    pub fn n_sensors(&self) -> usize {
        self.phis.len()
    }

    /// Per-target SNR `ρ_i = p_i / σ²`.
    pub fn snr(&self, i: usize) -> f64 {
        self.powers[i] / self.noise_power
    }

    pub fn validate(&self) -> Result<()> {
        if self.thetas.is_empty() {
            return Err(Error::InvalidInput("at least one target is required".into()));
        }
        if self.phis.is_empty() {
            return Err(Error::InvalidInput("at least one sensor is required".into()));
        }
        check_angles("target", &self.thetas)?;
        check_angles("sensor", &self.phis)?;
        if self.n_elements < 2 {
            return Err(Error::InvalidInput(format!("RIS needs N >= 2 elements, got {}", self.n_elements)));
        }
        if self.n_slots == 0 {
            return Err(Error::InvalidInput("T must be at least 1".into()));
        }
        if self.powers.len() != self.thetas.len() {
            return Err(Error::DimensionMismatch { what: "signal powers", expected: self.thetas.len(), got: self.powers.len() });
        }
        if self.powers.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidInput("signal powers must be positive".into()));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidInput("noise power must be positive".into()));
        }
        self.ris.validate()
    }

    /// Nominal signal covariance `R` implied by the signal model.
    pub fn covariance(&self) -> DMatrix<f64> {
        let k = self.n_targets();
        match self.signal_model {
            SignalModel::UncorrelatedDiagonal => DMatrix::from_fn(k, k, |i, j| if i == j { self.powers[i] } else { 0.0 }),
            SignalModel::CoherentAllOne => DMatrix::from_fn(k, k, |i, j| (self.powers[i] * self.powers[j]).sqrt()),
        }
    }

    /// Constant-modulus symbols `x_k(t) = sqrt(p_k) e^{jβ_kt}` for all T slots.
    ///
    /// Phases are drawn once from the scenario stream of `seed`. Coherent
    /// signals share one phase per slot.
    pub fn signals(&self, seed: u64) -> Vec<DVector<Complex64>> {
        let mut rng = rng::scenario_stream(seed, 0);
        let k = self.n_targets();
        (0..self.n_slots)
            .map(|_| match self.signal_model {
                SignalModel::UncorrelatedDiagonal => {
                    DVector::from_fn(k, |i, _| Complex64::from_polar(self.powers[i].sqrt(), rng.random_range(0.0..TAU)))
                }
                SignalModel::CoherentAllOne => {
                    let phase = rng.random_range(0.0..TAU);
                    DVector::from_fn(k, |i, _| Complex64::from_polar(self.powers[i].sqrt(), phase))
                }
            })
            .collect()
    }

    /// Stable FNV-1a fingerprint of the instance.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bits: u64| {
            for b in bits.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for v in self.thetas.iter().chain(&self.phis).chain(&self.powers) {
            eat(v.to_bits());
        }
        eat(self.n_elements as u64);
        eat(self.n_slots as u64);
        eat(self.noise_power.to_bits());
        eat(self.signal_model as u64);
        let m = self.ris.moments();
        eat(m.e1.to_bits());
        eat(m.e2.to_bits());
        h
    }

    /// Copy with a different RIS size.
    pub fn with_elements(&self, n: usize) -> Scenario {
        Scenario { n_elements: n, ..self.clone() }
    }
}

/// Linear SNR from decibels.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn steering_vector_examples() {
        let v = steering_vector(0.0, 4);
        assert!(v.iter().all(|&x| close(x, Complex64::new(1.0, 0.0), 1e-15)));
        let v = steering_vector(PI, 2);
        assert!(close(v[1], Complex64::new(-1.0, 0.0), 1e-15));
        let v = steering_vector(PI / 2.0, 4);
        let expected = [Complex64::new(1.0, 0.0), J, Complex64::new(-1.0, 0.0), -J];
        for (a, b) in v.iter().zip(expected) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn steering_derivative_examples() {
        let d = steering_derivative(0.0, 3);
        assert!(close(d[0], Complex64::new(0.0, 0.0), 0.0));
        assert!(close(d[1], J, 1e-15));
        assert!(close(d[2], 2.0 * J, 1e-15));
        let d = steering_derivative(PI, 2);
        assert!(close(d[1], -J, 1e-15));
        let d = steering_derivative(PI / 2.0, 3);
        assert!(close(d[1], Complex64::new(-1.0, 0.0), 1e-15));
        assert!(close(d[2], -2.0 * J, 1e-15));
    }

    #[test]
    fn manifolds() {
        let a = manifold(&[0.0], 3);
        assert_eq!(a.shape(), (3, 1));
        assert!(a.iter().all(|&x| close(x, Complex64::new(1.0, 0.0), 1e-15)));

        let a = manifold(&[0.0, PI], 2);
        let gram = a.adjoint() * &a;
        assert!(gram[(0, 1)].norm() < 1e-15);
        assert!(close(a[(1, 1)], Complex64::new(-1.0, 0.0), 1e-15));

        let ap = sensor_manifold(&[0.0, PI], 2);
        assert!(close(ap[(0, 1)], Complex64::new(1.0, 0.0), 1e-15));
        assert!(close(ap[(1, 1)], Complex64::new(-1.0, 0.0), 1e-15));

        // rows are transposes, not conjugates
        let ap = sensor_manifold(&[0.3], 4);
        let a = steering_vector(0.3, 4);
        for k in 0..4 {
            assert_eq!(ap[(0, k)], a[k]);
        }
        let ad = manifold_derivative(&[0.3, -1.0], 4);
        assert_eq!(ad.column(1).into_owned(), steering_derivative(-1.0, 4));
    }

    #[test]
    fn closed_form_moments() {
        let m = ris_moments(&RisDistribution::uniform_phase(0.0, TAU));
        assert_eq!(m.e1, 1.0);
        assert!(m.e2 < 1e-30);
        let m = ris_moments(&RisDistribution::uniform_phase(0.0, PI));
        assert!((m.e2 - 4.0 / (PI * PI)).abs() < 1e-15);
        let mean = RisDistribution::uniform_phase(0.0, PI).mean();
        assert!(close(mean, Complex64::new(0.0, 2.0 / PI), 1e-15));
        let m = ris_moments(&RisDistribution::DiscreteAmplitude { x: 1.0, y: 3.0, p: 0.5 });
        assert_eq!((m.e1, m.e2), (5.0, 0.0));
        let m = ris_moments(&RisDistribution::binary_phase());
        assert_eq!(m.e1, 1.0);
        assert!(m.e2 < 1e-30);
    }

    #[test]
    fn sampling_is_deterministic_and_respects_modulus() {
        let d = RisDistribution::uniform_phase(0.0, TAU);
        assert_eq!(sample_ris(&d, 64, 11), sample_ris(&d, 64, 11));
        assert_ne!(sample_ris(&d, 64, 11), sample_ris(&d, 64, 12));
        assert!(sample_ris(&d, 1000, 3).iter().all(|w| (w.norm() - 1.0).abs() < 1e-15));
        let bp = RisDistribution::binary_phase();
        assert!(sample_ris(&bp, 1000, 3).iter().all(|w| (w.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn discrete_amplitude_fraction() {
        // binomial(1e6, 0.5): sd 5e-4, the 0.002 band is four sigma
        let d = RisDistribution::DiscreteAmplitude { x: 1.0, y: 3.0, p: 0.5 };
        let w = sample_ris(&d, 1_000_000, 5);
        let ones = w.iter().filter(|w| (w.norm() - 1.0).abs() < 1e-12).count();
        let threes = w.iter().filter(|w| (w.norm() - 3.0).abs() < 1e-12).count();
        assert_eq!(ones + threes, w.len());
        let frac = ones as f64 / w.len() as f64;
        assert!((frac - 0.5).abs() < 0.002, "fraction {frac}");
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_matrix(&RisDistribution::uniform_phase(0.0, TAU), 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s[(i, j)].re - want).abs() < 1e-15);
            }
        }
        let s = sigma_matrix(&RisDistribution::uniform_phase(0.0, PI), 2);
        assert!((s[(0, 1)].re - 4.0 / (PI * PI)).abs() < 1e-15);
        assert_eq!(s[(0, 0)].re, 1.0);
        let s = sigma_matrix(&RisDistribution::DiscreteAmplitude { x: 1.0, y: 3.0, p: 0.5 }, 1);
        assert_eq!(s[(0, 0)].re, 5.0);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        assert!(RisDistribution::uniform_phase(1.0, 1.0).validate().is_err());
        assert!(RisDistribution::uniform_phase(-0.1, 1.0).validate().is_err());
        assert!(RisDistribution::DiscretePhase { phases: vec![0.0, 1.0], probs: vec![0.5, 0.6] }.validate().is_err());
        assert!(RisDistribution::DiscreteAmplitude { x: 0.0, y: 1.0, p: 0.5 }.validate().is_err());
        assert!(RisDistribution::DiscreteAmplitude { x: 1.0, y: 1.0, p: 1.5 }.validate().is_err());

        let good = Scenario {
            thetas: vec![0.1],
            phis: vec![0.2],
            n_elements: 4,
            n_slots: 1,
            powers: vec![1.0],
            noise_power: 1.0,
            signal_model: SignalModel::UncorrelatedDiagonal,
            ris: RisDistribution::uniform_phase(0.0, TAU),
        };
        assert!(good.validate().is_ok());
        assert!(Scenario { n_elements: 1, ..good.clone() }.validate().is_err());
        assert!(Scenario { thetas: vec![-PI], ..good.clone() }.validate().is_err());
        assert!(Scenario { thetas: vec![PI], ..good.clone() }.validate().is_ok());
        assert!(Scenario { powers: vec![0.0], ..good.clone() }.validate().is_err());
        assert!(Scenario { n_slots: 0, ..good.clone() }.validate().is_err());
        assert!(Scenario { noise_power: -1.0, ..good }.validate().is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert!((wrap_angle(2.0 * PI - 2e-12) + 2e-12).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn derivative_matches_central_difference(theta in -PI..PI, n in 1usize..64) {
            let h = 1e-6;
            let plus = steering_vector(theta + h, n);
            let minus = steering_vector(theta - h, n);
            let d = steering_derivative(theta, n);
            for k in 0..n {
                let fd = (plus[k] - minus[k]) / (2.0 * h);
                // truncation error k³h²/6 plus cancellation 1e-16/h
                prop_assert!((fd - d[k]).norm() <= 1e-6, "k={} err={}", k, (fd - d[k]).norm());
            }
        }

        #[test]
        fn sigma_is_psd(lo in 0.0..3.0f64, width in 0.01..3.2f64, n in 1usize..24) {
            let d = RisDistribution::uniform_phase(lo, (lo + width).min(TAU));
            let s = sigma_matrix(&d, n);
            let eig = s.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&e| e >= -1e-12));
        }

        #[test]
        fn wrapped_angles_in_range(x in -100.0..100.0f64) {
            let w = wrap_angle(x);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!(((x - w) / TAU - ((x - w) / TAU).round()).abs() < 1e-9);
        }
    }
}
