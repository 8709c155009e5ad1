//! Dense complex polynomials, just enough for the Stieltjes equations.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Coefficients in ascending order: `c[0] + c[1] m + …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<Complex64>);

impl Poly {
    pub fn constant(c: Complex64) -> Self {
        Poly(vec![c])
    }

    /// `a + b·m`.
    pub fn linear(a: Complex64, b: Complex64) -> Self {
        Poly(vec![a, b])
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, m: Complex64) -> Complex64 {
        self.0.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * m + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![Complex64::new(0.0, 0.0)]);
        }
        Poly(self.0.iter().enumerate().skip(1).map(|(k, &c)| c * k as f64).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let zero = Complex64::new(0.0, 0.0);
        Poly((0..n).map(|i| self.0.get(i).copied().unwrap_or(zero) + other.0.get(i).copied().unwrap_or(zero)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly(self.0.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![Complex64::new(0.0, 0.0); self.0.len() + other.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            for (j, &b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Largest coefficient magnitude, the scale for residual checks.
    pub fn max_coeff(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `|p(m)|` relative to the size of the terms being summed.
    pub fn relative_residual(&self, m: Complex64) -> f64 {
        let mut pow = 1.0;
        let mut scale = 0.0;
        for c in &self.0 {
            scale += c.norm() * pow;
            pow *= m.norm();
        }
        if scale == 0.0 {
            0.0
        } else {
            self.eval(m).norm() / scale
        }
    }

    /// Drops trailing coefficients that are negligible against the rest.
    fn trimmed(&self) -> Poly {
        let scale = self.max_coeff();
        let mut c = self.0.clone();
        while c.len() > 1 && c.last().is_some_and(|x| x.norm() <= 1e-300_f64.max(scale * 1e-300)) {
            c.pop();
        }
        Poly(c)
    }

    /// All roots: eigenvalues of the companion matrix, then Newton-polished.
    pub fn roots(&self) -> Vec<Complex64> {
        let p = self.trimmed();
        let deg = p.degree();
        if deg == 0 {
            return Vec::new();
        }
        let lead = p.0[deg];
        let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..deg {
            companion[(i, deg - 1)] = -p.0[i] / lead;
        }
        let eig = companion
            .clone()
            .schur()
            .eigenvalues()
            .map(|v| v.iter().copied().collect::<Vec<_>>())
            .unwrap_or_else(|| companion.diagonal().iter().copied().collect());
        let dp = p.derivative();
        eig.into_iter().map(|r| polish(&p, &dp, r)).collect()
    }
}

/// A few Newton steps, kept only while they reduce the residual.
pub(crate) fn polish(p: &Poly, dp: &Poly, mut m: Complex64) -> Complex64 {
    let mut best = p.eval(m).norm();
    for _ in 0..8 {
        let d = dp.eval(m);
        if d.norm() == 0.0 {
            break;
        }
        let next = m - p.eval(m) / d;
        let r = p.eval(next).norm();
        if !(r < best) {
            break;
        }
        best = r;
        m = next;
        if best == 0.0 {
            break;
        }
    }
    m
}
