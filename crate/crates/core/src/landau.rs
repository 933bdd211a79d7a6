//! Landau level arithmetic and the truncated symmetric-gauge orbital basis.
//!
//! Levels are `Λ_j = b(d + 2j)` for every half-dimension `d`. Orbitals are only
//! realized for `d = 1`: `φ_{j,m}` has Landau index `j`, guiding-centre index
//! `m`, angular momentum `ℓ = m − j` and radial quantum number `min(j, m)`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Field strength and half-dimension of the transverse space `ℝ^{2d}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagneticConfig {
    b: f64,
    d: u32,
}

impl MagneticConfig {
    pub fn new(b: f64, d: u32) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!("field strength b = {b} must be > 0")));
        }
        if d == 0 {
            return Err(Error::InvalidParameter("half-dimension d must be >= 1".into()));
        }
        Ok(Self { b, d })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Lowest Landau level `Λ₀ = b d`, the bottom of the essential spectrum in `2d + 1` dimensions.
    pub fn lambda0(&self) -> f64 {
        self.b * self.d as f64
    }
}

/// `Λ_j = b(d + 2j)`.
pub fn landau_level(cfg: &MagneticConfig, j: usize) -> f64 {
    cfg.b * (cfg.d as f64 + 2.0 * j as f64)
}

/// Index of the level closest to `λ` (ties go to the lower level).
pub fn nearest_level(cfg: &MagneticConfig, lambda: Complex64) -> usize {
    let t = (lambda.re - cfg.lambda0()) / (2.0 * cfg.b);
    if t <= 0.0 {
        return 0;
    }
    let lo = t.floor() as usize;
    let d_lo = (lambda.re - landau_level(cfg, lo)).abs();
    let d_hi = (lambda.re - landau_level(cfg, lo + 1)).abs();
    if d_hi < d_lo {
        lo + 1
    } else {
        lo
    }
}

/// `dist(λ, E)` with `E` the full set of Landau levels.
pub fn dist_to_levels(cfg: &MagneticConfig, lambda: Complex64) -> f64 {
    let j = nearest_level(cfg, lambda);
    (lambda - landau_level(cfg, j)).norm()
}

/// `dist(λ, [Λ₀, ∞))`.
pub fn dist_to_essential(cfg: &MagneticConfig, lambda: Complex64) -> f64 {
    let l0 = cfg.lambda0();
    if lambda.re >= l0 {
        lambda.im.abs()
    } else {
        (lambda - l0).norm()
    }
}

/// Truncation of the Landau basis: levels `0..=j_max`, guiding centres `0..=m_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    pub j_max: usize,
    pub m_max: usize,
}

impl BasisSpec {
    pub fn new(j_max: usize, m_max: usize) -> Self {
        Self { j_max, m_max }
    }

    pub fn dim(&self) -> usize {
        (self.j_max + 1) * (self.m_max + 1)
    }

    /// j-major flat index.
    pub fn index(&self, j: usize, m: usize) -> usize {
        debug_assert!(j <= self.j_max && m <= self.m_max);
        j * (self.m_max + 1) + m
    }

    pub fn pair(&self, idx: usize) -> (usize, usize) {
        (idx / (self.m_max + 1), idx % (self.m_max + 1))
    }

    /// Angular momentum `ℓ = m − j` of basis vector `idx`.
    pub fn angular_momentum(&self, idx: usize) -> i64 {
        let (j, m) = self.pair(idx);
        m as i64 - j as i64
    }

    /// Whether `self` is contained in `other`.
    pub fn nested_in(&self, other: &BasisSpec) -> bool {
        self.j_max <= other.j_max && self.m_max <= other.m_max
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..=self.j_max).flat_map(move |j| (0..=self.m_max).map(move |m| (j, m)))
    }
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Generalized Laguerre polynomial `L_n^α(x)` by the three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Quantum numbers `(n_r, |ℓ|, ℓ)` of the orbital `(j, m)`.
pub(crate) fn orbital_numbers(j: usize, m: usize) -> (usize, usize, i64) {
    let ell = m as i64 - j as i64;
    (j.min(m), ell.unsigned_abs() as usize, ell)
}

/// Log of the orbital normalization `|N|² = (b/2π) n!/(n+|ℓ|)!`, halved.
pub(crate) fn ln_orbital_norm(b: f64, n: usize, abs_ell: usize) -> f64 {
    0.5 * ((b / (2.0 * PI)).ln() + ln_factorial(n) - ln_factorial(n + abs_ell))
}

/// Value of the orthonormal orbital `φ_{j,m}` at `(x, y)`.
pub fn orbital_eval(cfg: &MagneticConfig, j: usize, m: usize, x: f64, y: f64) -> Result<Complex64> {
    if cfg.d != 1 {
        return Err(Error::UnsupportedDimension(cfg.d));
    }
    let b = cfg.b;
    let (n, abs_ell, ell) = orbital_numbers(j, m);
    let r2 = x * x + y * y;
    let s = 0.5 * b * r2;
    let lag = laguerre(n, abs_ell as f64, s);
    let radial_pow = if abs_ell == 0 { 1.0 } else { s.powf(0.5 * abs_ell as f64) };
    let amp = ln_orbital_norm(b, n, abs_ell).exp() * radial_pow * lag * (-0.5 * s).exp();
    let theta = y.atan2(x);
    Ok(Complex64::from_polar(amp, ell as f64 * theta))
}
