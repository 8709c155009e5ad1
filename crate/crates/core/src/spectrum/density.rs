//! Density recovery `μ(λ) = Im m(λ + j·y) / π` on a grid.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::stieltjes::{stieltjes, BranchTracker};
use super::SpectralModel;
use crate::error::{Error, Result};

/// Density below this counts as outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;
/// Off the support the smoothed density is the Poisson tail, proportional
/// to the offset; halving the offset roughly halves it. On the support it
/// barely moves. Points whose density keeps this fraction count as inside.
const SUPPORT_RATIO: f64 = 0.75;
/// Allowed deviation of the total mass from 1.
pub const MASS_TOL: f64 = 5e-3;
/// Allowed L1 change when the imaginary offset is halved.
pub const CONVERGENCE_TOL: f64 = 1e-3;
pub const DEFAULT_Y_OFFSET: f64 = 1e-6;

const COARSE_POINTS: usize = 400;
const MARGIN_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridSpec {
    /// Bracket the support automatically and cluster `points` toward its edges.
    Auto { points: usize },
    /// Plain uniform grid on `[lo, hi]`.
    Uniform { lo: f64, hi: f64, points: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Auto { points: 2001 }
    }
}

/// Sampled limiting density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    /// Ascending abscissae.
    pub lambdas: Vec<f64>,
    /// `μ(λ)`, clipped at zero.
    pub density: Vec<f64>,
    /// `[λ_min, λ_max]` where the density exceeds [`SUPPORT_THRESHOLD`] and
    /// is stable under halving the offset.
    pub support: (f64, f64),
    pub mass: f64,
    pub y_offset: f64,
    /// L1 change observed when halving `y_offset`.
    pub convergence: f64,
}

pub fn trapezoid(x: &[f64], f: &[f64]) -> f64 {
    x.windows(2).zip(f.windows(2)).map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1])).sum()
}

impl DensityCurve {
    /// Linear interpolation, zero outside the grid.
    pub fn at(&self, lambda: f64) -> f64 {
        let x = &self.lambdas;
        if x.is_empty() || lambda < x[0] || lambda > x[x.len() - 1] {
            return 0.0;
        }
        let i = x.partition_point(|&v| v <= lambda).min(x.len() - 1).max(1);
        let (x0, x1) = (x[i - 1], x[i]);
        let t = if x1 > x0 { (lambda - x0) / (x1 - x0) } else { 0.0 };
        self.density[i - 1] * (1.0 - t) + self.density[i] * t
    }

    /// Integral of the piecewise-linear density over `[lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let mut xs = vec![lo];
        xs.extend(self.lambdas.iter().copied().filter(|&v| v > lo && v < hi));
        xs.push(hi);
        let fs: Vec<f64> = xs.iter().map(|&v| self.at(v)).collect();
        trapezoid(&xs, &fs)
    }

    /// `∫ μ(λ)/λ dλ` over the detected support.
    pub fn inverse_moment(&self) -> f64 {
        let (lo, hi) = self.support;
        let (x, f): (Vec<f64>, Vec<f64>) =
            self.lambdas.iter().zip(&self.density).filter(|(&l, _)| l >= lo && l <= hi).map(|(&l, &d)| (l, d / l)).unzip();
        trapezoid(&x, &f)
    }
}

/// Raw (unclipped) density along an ascending grid.
pub fn density_on_grid(model: &SpectralModel, lambdas: &[f64], y: f64) -> Result<Vec<f64>> {
    let mut tracker = BranchTracker::new(model);
    lambdas.iter().map(|&l| tracker.solve(Complex64::new(l, y)).map(|v| v.m.im / std::f64::consts::PI)).collect()
}

fn density_point(model: &SpectralModel, lambda: f64, y: f64) -> Result<f64> {
    Ok(stieltjes(Complex64::new(lambda, y), model)?.m.im / std::f64::consts::PI)
}

fn in_support(at_y: f64, at_half: f64) -> bool {
    at_half > SUPPORT_THRESHOLD && at_half >= SUPPORT_RATIO * at_y
}

fn point_in_support(model: &SpectralModel, lambda: f64, y: f64) -> Result<bool> {
    Ok(in_support(density_point(model, lambda, y)?, density_point(model, lambda, 0.5 * y)?))
}

fn support_mask(model: &SpectralModel, lambdas: &[f64], y: f64) -> Result<Vec<bool>> {
    let d = density_on_grid(model, lambdas, y)?;
    let h = density_on_grid(model, lambdas, 0.5 * y)?;
    Ok(d.iter().zip(&h).map(|(&a, &b)| in_support(a, b)).collect())
}

/// Coarse scan on `[0, hi]`, doubling `hi` until the top end is empty.
fn bracket(model: &SpectralModel, y: f64) -> Result<(f64, f64)> {
    let mut hi = 4.0 * model.mean_eigenvalue();
    for _ in 0..30 {
        let grid: Vec<f64> = (0..COARSE_POINTS).map(|i| hi * i as f64 / (COARSE_POINTS - 1) as f64).collect();
        let mask = support_mask(model, &grid, y)?;
        let tail_start = COARSE_POINTS * 9 / 10;
        if !mask[tail_start..].iter().any(|&v| v) {
            let first = mask.iter().position(|&v| v);
            let last = mask.iter().rposition(|&v| v);
            return match (first, last) {
                (Some(f), Some(l)) => {
                    let lo = refine_edge(model, y, grid[f.saturating_sub(1)], grid[f], true)?;
                    let up = refine_edge(model, y, grid[l], grid[(l + 1).min(COARSE_POINTS - 1)], false)?;
                    Ok((lo, up))
                }
                _ => Err(Error::Normalization { mass: 0.0, tolerance: MASS_TOL }),
            };
        }
        hi *= 2.0;
    }
    Err(Error::InvalidInput("could not bracket the spectrum".into()))
}

/// Bisection for the threshold crossing between `a` and `b`.
fn refine_edge(model: &SpectralModel, y: f64, mut a: f64, mut b: f64, rising: bool) -> Result<f64> {
    if a == b {
        return Ok(a);
    }
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        let inside = point_in_support(model, mid, y)?;
        if inside == rising {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(if rising { a } else { b })
}

/// Grid clustered toward both support edges, plus short margins.
fn clustered_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let width = hi - lo;
    let margin = 0.02 * width;
    let left = (lo - margin).max(0.5 * lo);
    let mut grid: Vec<f64> = (0..MARGIN_POINTS).map(|i| left + (lo - left) * i as f64 / MARGIN_POINTS as f64).collect();
    let n = points.max(3);
    grid.extend((0..n).map(|i| {
        let t = std::f64::consts::PI * i as f64 / (n - 1) as f64;
        lo + width * 0.5 * (1.0 - t.cos())
    }));
    grid.extend((1..=MARGIN_POINTS).map(|i| hi + margin * i as f64 / MARGIN_POINTS as f64));
    grid.dedup();
    grid
}

/// Limiting density of `D^H D / N⁴` for `model`.
pub fn density_curve(model: &SpectralModel, grid: &GridSpec, y_offset: f64) -> Result<DensityCurve> {
    model.validate()?;
    if !(y_offset > 0.0) {
        return Err(Error::InvalidInput(format!("y_offset must be positive, got {y_offset}")));
    }
    let lambdas = match *grid {
        GridSpec::Auto { points } => {
            let (lo, hi) = bracket(model, y_offset)?;
            clustered_grid(lo, hi, points)
        }
        GridSpec::Uniform { lo, hi, points } => {
            if !(hi > lo) || points < 2 {
                return Err(Error::InvalidInput("uniform grid needs lo < hi and at least two points".into()));
            }
            (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect()
        }
    };
    let raw = density_on_grid(model, &lambdas, y_offset)?;
    let half = density_on_grid(model, &lambdas, 0.5 * y_offset)?;
    let diff: Vec<f64> = raw.iter().zip(&half).map(|(a, b)| (a - b).abs()).collect();
    let convergence = trapezoid(&lambdas, &diff);
    if !(convergence < CONVERGENCE_TOL) {
        return Err(Error::NotConverged { change: convergence });
    }
    let density: Vec<f64> = raw.iter().map(|&d| d.max(0.0)).collect();
    let mass = trapezoid(&lambdas, &density);
    if !((mass - 1.0).abs() <= MASS_TOL) {
        return Err(Error::Normalization { mass, tolerance: MASS_TOL });
    }
    let mask: Vec<bool> = raw.iter().zip(&half).map(|(&a, &b)| in_support(a, b)).collect();
    let first = mask.iter().position(|&v| v).unwrap_or(0);
    let last = mask.iter().rposition(|&v| v).unwrap_or(lambdas.len() - 1);
    Ok(DensityCurve { support: (lambdas[first], lambdas[last]), lambdas, density, mass, y_offset, convergence })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_modulus_curve_is_a_probability_density() {
        let model = SpectralModel::constant_modulus(0.3, 0.35);
        let curve = density_curve(&model, &GridSpec::default(), DEFAULT_Y_OFFSET).unwrap();
        assert!((curve.mass - 1.0).abs() <= MASS_TOL, "mass {}", curve.mass);
        assert!(curve.density.iter().all(|&d| d >= 0.0));
        assert!(curve.lambdas.windows(2).all(|w| w[0] < w[1]));
        // product of two free projections: edges (sqrt(c2(1-c1)) ± sqrt(c1(1-c2)))² / 3
        let (c1, c2): (f64, f64) = (0.3, 0.35);
        let lo = ((c2 * (1.0 - c1)).sqrt() - (c1 * (1.0 - c2)).sqrt()).powi(2) / 3.0;
        let hi = ((c2 * (1.0 - c1)).sqrt() + (c1 * (1.0 - c2)).sqrt()).powi(2) / 3.0;
        assert!((curve.support.0 - lo).abs() < 1e-3 * hi, "{:?} vs {lo}", curve.support);
        assert!((curve.support.1 - hi).abs() < 1e-3 * hi, "{:?} vs {hi}", curve.support);
        let mean: f64 = trapezoid(&curve.lambdas, &curve.lambdas.iter().zip(&curve.density).map(|(l, d)| l * d).collect::<Vec<_>>());
        assert!((mean - c2 / 3.0).abs() < 1e-3 * mean);
    }

    #[test]
    fn discrete_amplitude_curve_is_bounded_and_normalized() {
        let model = SpectralModel::discrete_amplitude(0.3, 0.35, 1.0, 3.0, 0.5);
        let curve = density_curve(&model, &GridSpec::default(), DEFAULT_Y_OFFSET).unwrap();
        assert!((curve.mass - 1.0).abs() <= MASS_TOL);
        assert!(curve.support.0 > 0.0 && curve.support.1 < 20.0);
        let mean: f64 = trapezoid(&curve.lambdas, &curve.lambdas.iter().zip(&curve.density).map(|(l, d)| l * d).collect::<Vec<_>>());
        assert!((mean - model.mean_eigenvalue()).abs() < 2e-3 * mean, "{mean}");
    }

    #[test]
    fn interpolation_and_bins() {
        let curve = DensityCurve {
            lambdas: vec![0.0, 1.0, 2.0],
            density: vec![0.0, 1.0, 0.0],
            support: (0.0, 2.0),
            mass: 1.0,
            y_offset: 1e-6,
            convergence: 0.0,
        };
        assert_eq!(curve.at(0.5), 0.5);
        assert_eq!(curve.at(3.0), 0.0);
        assert!((curve.mass_between(0.0, 2.0) - 1.0).abs() < 1e-15);
        assert!((curve.mass_between(0.5, 1.5) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_requests() {
        let model = SpectralModel::constant_modulus(0.3, 0.35);
        assert!(density_curve(&model, &GridSpec::default(), 0.0).is_err());
        assert!(density_curve(&model, &GridSpec::Uniform { lo: 1.0, hi: 0.5, points: 10 }, 1e-6).is_err());
        // a grid that misses most of the support loses mass
        let err = density_curve(&model, &GridSpec::Uniform { lo: 0.2, hi: 0.4, points: 500 }, 1e-6).unwrap_err();
        assert!(matches!(err, Error::Normalization { .. }));
    }
}
