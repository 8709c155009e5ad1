//! Root solvers for the Stieltjes transform of the limiting law.
//!
//! Writing `ψ = −1 − z m`, `u = 1 + c1 ψ` and `v = c2 + c1 ψ`, the free
//! multiplicative convolution of the three factors reduces to
//!
//! ```text
//! c1 ψ = Σ_k w_k λ_k / (W − λ_k),      W = −3 u² / (c1 m v)
//! ```
//!
//! where `(w_k, λ_k)` are the atoms of the `Ω Ω^H` law. A single atom at 1
//! gives the quadratic `a2 m² + a1 m + a0 = 0`; two atoms give a quintic.
//! The physical root is the one in the upper half-plane (Herglotz) that
//! connects continuously to the `m ≈ −1/z` tail.

use num_complex::Complex64;

use super::poly::{polish, Poly};
use super::{RisSpectralModel, SpectralModel, StieltjesValue};
use crate::error::{Error, Result};

/// Geometric step of the imaginary part during vertical continuation.
const DESCENT_RATIO: f64 = 0.7;

/// Tail-seed height relative to the spectrum scale.
const SEED_HEIGHT: f64 = 100.0;

/// Residual bound for the quadratic, relative to its largest coefficient.
pub const QUADRATIC_TOL: f64 = 1e-10;

/// Residual bound for the two-atom rational equation.
pub const RATIONAL_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `[a0, a1, a2]` for the constant-modulus quadratic.
pub fn quadratic_coefficients(model: &SpectralModel, z: Complex64) -> [Complex64; 3] {
    let (c1, c2) = (model.c1, model.c2);
    let z2 = z * z;
    let a2 = -c1 * z2 + 3.0 * c1 * z2 * z;
    let a1 = (c2 - c1) * z + (6.0 * c1 - 3.0) * z2;
    let a0 = (3.0 * c1 - 3.0) * z;
    [a0, a1, a2]
}

/// Signature of a coefficient provider, so checks can be run against a
/// deliberately corrupted transcription.
pub type QuadraticCoefficients = fn(&SpectralModel, Complex64) -> [Complex64; 3];

/// Both roots of `a2 m² + a1 m + a0`, without cancellation.
pub fn quadratic_roots([a0, a1, a2]: [Complex64; 3]) -> Vec<Complex64> {
    if a2.norm() == 0.0 {
        return if a1.norm() == 0.0 { Vec::new() } else { vec![-a0 / a1] };
    }
    let sq = (a1 * a1 - 4.0 * a2 * a0).sqrt();
    // pick the sign that adds magnitudes
    let sq = if (a1.conj() * sq).re >= 0.0 { sq } else { -sq };
    let q = -0.5 * (a1 + sq);
    if q.norm() == 0.0 {
        return vec![c(0.0), c(0.0)];
    }
    vec![q / a2, a0 / q]
}

fn polish_quadratic(coeffs: [Complex64; 3], mut m: Complex64) -> Complex64 {
    let [a0, a1, a2] = coeffs;
    let f = |m: Complex64| (a2 * m + a1) * m + a0;
    for _ in 0..3 {
        let d = 2.0 * a2 * m + a1;
        if d.norm() == 0.0 {
            break;
        }
        let next = m - f(m) / d;
        if f(next).norm() >= f(m).norm() {
            break;
        }
        m = next;
    }
    m
}

/// `|a2 m² + a1 m + a0| / max|a_i|`.
pub fn quadratic_residual(model: &SpectralModel, z: Complex64, m: Complex64) -> f64 {
    let [a0, a1, a2] = quadratic_coefficients(model, z);
    let scale = a0.norm().max(a1.norm()).max(a2.norm());
    ((a2 * m + a1) * m + a0).norm() / scale
}

fn require_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidInput(format!("Stieltjes argument must satisfy Im z > 0, got {z}")));
    }
    Ok(())
}

/// Constant-modulus RIS: the Herglotz root of the quadratic.
pub fn stieltjes_constant_modulus(z: Complex64, model: &SpectralModel) -> Result<StieltjesValue> {
    require_upper(z)?;
    model.validate()?;
    if model.ris != RisSpectralModel::ConstantModulus {
        return Err(Error::InvalidInput("quadratic solver needs a constant-modulus model".into()));
    }
    let coeffs = quadratic_coefficients(model, z);
    let roots: Vec<Complex64> = quadratic_roots(coeffs).into_iter().map(|m| polish_quadratic(coeffs, m)).collect();
    let upper: Vec<Complex64> = roots.iter().copied().filter(|m| m.im > 0.0).collect();
    let m = match upper.len() {
        0 => return Err(Error::BranchFailure { z, roots }),
        1 => upper[0],
        _ => continue_from_tail(z, model, |zz| {
            let k = quadratic_coefficients(model, zz);
            quadratic_roots(k).into_iter().map(|m| polish_quadratic(k, m)).collect()
        })?,
    };
    let scale = coeffs.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let [a0, a1, a2] = coeffs;
    if ((a2 * m + a1) * m + a0).norm() > QUADRATIC_TOL * scale {
        return Err(Error::BranchFailure { z, roots });
    }
    Ok(StieltjesValue { z, m })
}

/// Polynomial in `ψ` whose roots contain every solution of the rational
/// equation, with `m = −(1 + ψ)/z`.
///
/// Working in `ψ` keeps the physical root (`ψ → 0` in the tail) apart from
/// the spurious ones near `u = 0`. One atom gives a cubic (the quadratic
/// times a spurious linear factor), two atoms give the quintic.
pub fn rational_polynomial(model: &SpectralModel, z: Complex64) -> Poly {
    let (c1, c2) = (model.c1, model.c2);
    let u = Poly::linear(c(1.0), c(c1));
    let v = Poly::linear(c(c2), c(c1));
    // W − λ = (3z u² − λ c1 (1+ψ) v) / (c1 (1+ψ) v)
    let shared = Poly::linear(c(1.0), c(1.0)).mul(&v).scale(c(c1));
    let lead = u.mul(&u).scale(3.0 * z);
    let lhs = Poly::linear(c(0.0), c(c1));
    let atoms = model.ris_atoms();
    let factors: Vec<Poly> = atoms.iter().map(|&(_, l)| lead.sub(&shared.scale(c(l)))).collect();

    let mut poly = factors.iter().fold(lhs, |acc, f| acc.mul(f));
    for (k, &(w, l)) in atoms.iter().enumerate() {
        let term = factors.iter().enumerate().filter(|(i, _)| *i != k).fold(shared.scale(c(w * l)), |acc, (_, f)| acc.mul(f));
        poly = poly.sub(&term);
    }
    poly
}

/// The same equation cleared in `m` directly; better conditioned than the
/// `ψ` form once `z m → −1`, that is near the origin.
fn polynomial_in_m(model: &SpectralModel, z: Complex64) -> Poly {
    let (c1, c2) = (model.c1, model.c2);
    let u = Poly::linear(c(1.0 - c1), -c1 * z);
    let v = Poly::linear(c(c2 - c1), -c1 * z);
    let lead = u.mul(&u).scale(c(-3.0));
    let shared = Poly::linear(c(0.0), c(c1)).mul(&v);
    let lhs = Poly::linear(c(-c1), -c1 * z);
    let atoms = model.ris_atoms();
    let factors: Vec<Poly> = atoms.iter().map(|&(_, l)| lead.sub(&shared.scale(c(l)))).collect();
    let mut poly = factors.iter().fold(lhs, |acc, f| acc.mul(f));
    for (k, &(w, l)) in atoms.iter().enumerate() {
        let term = factors.iter().enumerate().filter(|(i, _)| *i != k).fold(shared.scale(c(w * l)), |acc, (_, f)| acc.mul(f));
        poly = poly.sub(&term);
    }
    poly
}

/// Candidate `m` values from the roots of [`rational_polynomial`], each
/// refined by Newton steps on the equation in `m`.
pub fn rational_roots(model: &SpectralModel, z: Complex64) -> Vec<Complex64> {
    let in_m = polynomial_in_m(model, z);
    let d_in_m = in_m.derivative();
    rational_polynomial(model, z).roots().into_iter().map(|psi| polish(&in_m, &d_in_m, -(1.0 + psi) / z)).collect()
}

/// Relative residual of `c1 ψ = Σ w λ / (W − λ)` at `m`.
pub fn rational_residual(model: &SpectralModel, z: Complex64, m: Complex64) -> f64 {
    let (c1, c2) = (model.c1, model.c2);
    let psi = -1.0 - z * m;
    let u = 1.0 + c1 * psi;
    let v = c2 + c1 * psi;
    let w = -3.0 * u * u / (c1 * m * v);
    let lhs = c1 * psi;
    let mut rhs = c(0.0);
    let mut scale = lhs.norm();
    for (weight, l) in model.ris_atoms() {
        let t = weight * l / (w - l);
        rhs += t;
        scale += t.norm();
    }
    let r = (lhs - rhs).norm() / scale;
    if r.is_finite() {
        r
    } else {
        f64::INFINITY
    }
}

/// Discrete-amplitude RIS: Herglotz root of the quintic, tracked from the tail.
pub fn stieltjes_discrete_amplitude(z: Complex64, model: &SpectralModel) -> Result<StieltjesValue> {
    require_upper(z)?;
    model.validate()?;
    if !matches!(model.ris, RisSpectralModel::DiscreteAmplitude { .. }) {
        return Err(Error::InvalidInput("quintic solver needs a discrete-amplitude model".into()));
    }
    let m = continue_from_tail(z, model, |zz| rational_roots(model, zz))?;
    check_rational(model, z, m)?;
    Ok(StieltjesValue { z, m })
}

fn check_rational(model: &SpectralModel, z: Complex64, m: Complex64) -> Result<()> {
    if rational_residual(model, z, m) > RATIONAL_TOL {
        return Err(Error::RootSelection { z, roots: rational_roots(model, z) });
    }
    Ok(())
}

/// Dispatches on the RIS model.
pub fn stieltjes(z: Complex64, model: &SpectralModel) -> Result<StieltjesValue> {
    match model.ris {
        RisSpectralModel::ConstantModulus => stieltjes_constant_modulus(z, model),
        RisSpectralModel::DiscreteAmplitude { .. } => stieltjes_discrete_amplitude(z, model),
    }
}

/// Nearest Herglotz candidate to `prev`; `None` when there is none or two tie.
fn nearest_upper(roots: &[Complex64], prev: Complex64) -> Option<Complex64> {
    let mut upper: Vec<(f64, Complex64)> =
        roots.iter().filter(|m| m.im > 0.0 && m.re.is_finite() && m.im.is_finite()).map(|&m| ((m - prev).norm(), m)).collect();
    upper.sort_by(|a, b| a.0.total_cmp(&b.0));
    match upper.as_slice() {
        [] => None,
        [(_, m)] => Some(*m),
        [(d0, m), (d1, _), ..] => {
            if *d1 <= d0 * (1.0 + 1e-9) {
                None
            } else {
                Some(*m)
            }
        }
    }
}

/// Follows the physical root down the vertical line `Re z`, starting high
/// enough that `m ≈ −1/z − mean/z²` singles it out.
fn continue_from_tail<F>(z: Complex64, model: &SpectralModel, roots_at: F) -> Result<Complex64>
where
    F: Fn(Complex64) -> Vec<Complex64>,
{
    let scale = model.mean_eigenvalue().max(1e-12) * 10.0 + z.re.abs();
    let mut y = (SEED_HEIGHT * scale).max(z.im);
    let mut at = Complex64::new(z.re, y);
    let tail = -1.0 / at - model.mean_eigenvalue() / (at * at);
    let seed_roots = roots_at(at);
    let mut prev = nearest_upper(&seed_roots, tail).ok_or_else(|| Error::RootSelection { z: at, roots: seed_roots.clone() })?;
    while y > z.im {
        y = (y * DESCENT_RATIO).max(z.im);
        at = Complex64::new(z.re, y);
        let roots = roots_at(at);
        prev = nearest_upper(&roots, prev).ok_or(Error::RootSelection { z: at, roots })?;
    }
    Ok(prev)
}

/// Stateful solver for a left-to-right sweep along `λ + j·y`.
///
/// Each point takes the Herglotz root nearest to the previous one; when that
/// is ambiguous (or on the first point) it falls back to tail continuation.
pub struct BranchTracker<'a> {
    model: &'a SpectralModel,
    prev: Option<Complex64>,
}

impl<'a> BranchTracker<'a> {
    pub fn new(model: &'a SpectralModel) -> Self {
        BranchTracker { model, prev: None }
    }

    pub fn solve(&mut self, z: Complex64) -> Result<StieltjesValue> {
        let value = match (self.model.ris, self.prev) {
            (RisSpectralModel::ConstantModulus, _) => stieltjes_constant_modulus(z, self.model)?,
            (_, None) => stieltjes_discrete_amplitude(z, self.model)?,
            (_, Some(prev)) => {
                require_upper(z)?;
                let roots = rational_roots(self.model, z);
                match nearest_upper(&roots, prev) {
                    Some(m) if rational_residual(self.model, z, m) <= RATIONAL_TOL => StieltjesValue { z, m },
                    _ => stieltjes_discrete_amplitude(z, self.model)?,
                }
            }
        };
        self.prev = Some(value.m);
        Ok(value)
    }
}
