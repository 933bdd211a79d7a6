//! Complex transverse potentials `V : ℝ² → ℂ` and their decay envelopes.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gauss_legendre;

/// Trigonometric polynomial `v(θ) = c₀ + Σ_k (a_k cos kθ + b_k sin kθ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularProfile {
    pub constant: Complex64,
    pub cos: Vec<Complex64>,
    pub sin: Vec<Complex64>,
}

impl AngularProfile {
    pub fn constant(c: f64) -> Self {
        Self { constant: Complex64::new(c, 0.0), cos: Vec::new(), sin: Vec::new() }
    }

    pub fn eval(&self, theta: f64) -> Complex64 {
        let mut v = self.constant;
        for (k, &a) in self.cos.iter().enumerate() {
            v += a * ((k + 1) as f64 * theta).cos();
        }
        for (k, &b) in self.sin.iter().enumerate() {
            v += b * ((k + 1) as f64 * theta).sin();
        }
        v
    }

    /// Highest angular frequency with a nonzero coefficient.
    pub fn bandwidth(&self) -> usize {
        let top = |c: &[Complex64]| c.iter().rposition(|z| *z != Complex64::new(0.0, 0.0)).map_or(0, |k| k + 1);
        top(&self.cos).max(top(&self.sin))
    }

    fn max_modulus(&self) -> (f64, bool) {
        if self.bandwidth() == 0 {
            return (self.constant.norm(), true);
        }
        let n = 4096;
        let m = (0..n)
            .map(|k| self.eval(2.0 * PI * k as f64 / n as f64).norm())
            .fold(0.0, f64::max);
        (m, false)
    }
}

/// `|V(X)| ≤ c ⟨X⟩^{-m_perp}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub c: f64,
    pub m_perp: f64,
}

impl Envelope {
    pub fn at(&self, r: f64) -> f64 {
        self.c * (1.0 + r * r).powf(-0.5 * self.m_perp)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Constant(Complex64),
    Gaussian { amplitude: Complex64, sigma: f64 },
    PowerDecay { c: f64, m_perp: f64, profile: AngularProfile },
}

/// An immutable complex potential on the transverse plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    kind: Kind,
    sup_norm: f64,
    sup_estimated: bool,
    envelope: Option<Envelope>,
}

impl Potential {
    /// `V ≡ c`. Not decaying, so it carries no envelope.
    pub fn constant(c: Complex64) -> Self {
        Self { kind: Kind::Constant(c), sup_norm: c.norm(), sup_estimated: false, envelope: None }
    }

    pub fn zero() -> Self {
        Self::constant(Complex64::new(0.0, 0.0))
    }

    /// `V(X) = C v(X/|X|) ⟨X⟩^{-m_perp}`.
    pub fn power_decay(c: f64, m_perp: f64, profile: AngularProfile) -> Result<Self> {
        if !(m_perp > 0.0) {
            return Err(Error::InvalidParameter(format!("m_perp = {m_perp} must be > 0")));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("C = {c} must be > 0")));
        }
        let (vmax, exact) = profile.max_modulus();
        let sup = c * vmax;
        Ok(Self {
            kind: Kind::PowerDecay { c, m_perp, profile },
            sup_norm: sup,
            sup_estimated: !exact,
            envelope: Some(Envelope { c: sup, m_perp }),
        })
    }

    /// `V(X) = a e^{-|X|²/(2σ²)}`, with the tight envelope for `m_perp = 2`.
    pub fn gaussian(amplitude: Complex64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must be > 0")));
        }
        let sup = amplitude.norm();
        let envelope = Some(Envelope { c: sup * gaussian_envelope_factor(sigma, 2.0), m_perp: 2.0 });
        Ok(Self { kind: Kind::Gaussian { amplitude, sigma }, sup_norm: sup, sup_estimated: false, envelope })
    }

    pub fn eval(&self, x: f64, y: f64) -> Complex64 {
        let r = x.hypot(y);
        self.eval_polar(r, y.atan2(x))
    }

    pub fn eval_polar(&self, r: f64, theta: f64) -> Complex64 {
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Gaussian { amplitude, sigma } => amplitude * (-r * r / (2.0 * sigma * sigma)).exp(),
            Kind::PowerDecay { c, m_perp, profile } => profile.eval(theta) * (c * (1.0 + r * r).powf(-0.5 * m_perp)),
        }
    }

    /// Radial factor and angular profile when `V` separates as `R(r) v(θ)`.
    pub(crate) fn radial_factor(&self, r: f64) -> Complex64 {
        match &self.kind {
            Kind::Constant(c) => *c,
            Kind::Gaussian { amplitude, sigma } => amplitude * (-r * r / (2.0 * sigma * sigma)).exp(),
            Kind::PowerDecay { c, m_perp, .. } => Complex64::new(c * (1.0 + r * r).powf(-0.5 * m_perp), 0.0),
        }
    }

    /// Fourier coefficient `v̂_k = (1/2π)∫ v(θ) e^{-ikθ} dθ` of the angular profile.
    pub(crate) fn angular_coefficient(&self, k: i64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        match &self.kind {
            Kind::Constant(_) | Kind::Gaussian { .. } => {
                if k == 0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    zero
                }
            }
            Kind::PowerDecay { profile, .. } => {
                if k == 0 {
                    return profile.constant;
                }
                let idx = k.unsigned_abs() as usize - 1;
                let a = profile.cos.get(idx).copied().unwrap_or(zero);
                let b = profile.sin.get(idx).copied().unwrap_or(zero);
                // cos kθ = (e^{ikθ}+e^{-ikθ})/2, sin kθ = (e^{ikθ}-e^{-ikθ})/2i
                if k > 0 {
                    0.5 * a + b / Complex64::new(0.0, 2.0)
                } else {
                    0.5 * a - b / Complex64::new(0.0, 2.0)
                }
            }
        }
    }

    pub fn angular_bandwidth(&self) -> usize {
        match &self.kind {
            Kind::PowerDecay { profile, .. } => profile.bandwidth(),
            _ => 0,
        }
    }

    pub fn is_radial(&self) -> bool {
        self.angular_bandwidth() == 0
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, Kind::Constant(c) if c == Complex64::new(0.0, 0.0))
    }

    /// The value of a constant potential.
    pub fn constant_value(&self) -> Option<Complex64> {
        match self.kind {
            Kind::Constant(c) => Some(c),
            _ => None,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// True when `sup_norm` is a grid estimate rather than a closed form.
    pub fn sup_norm_estimated(&self) -> bool {
        self.sup_estimated
    }

    pub fn envelope(&self) -> Option<Envelope> {
        self.envelope
    }

    /// `t V` with every derived quantity scaled accordingly.
    pub fn scaled(&self, t: f64) -> Potential {
        let kind = match &self.kind {
            Kind::Constant(c) => Kind::Constant(c * t),
            Kind::Gaussian { amplitude, sigma } => Kind::Gaussian { amplitude: amplitude * t, sigma: *sigma },
            Kind::PowerDecay { c, m_perp, profile } => {
                let mut p = profile.clone();
                if t < 0.0 {
                    p.constant = -p.constant;
                    p.cos.iter_mut().for_each(|z| *z = -*z);
                    p.sin.iter_mut().for_each(|z| *z = -*z);
                }
                Kind::PowerDecay { c: c * t.abs(), m_perp: *m_perp, profile: p }
            }
        };
        Potential {
            kind,
            sup_norm: self.sup_norm * t.abs(),
            sup_estimated: self.sup_estimated,
            envelope: self.envelope.map(|e| Envelope { c: e.c * t.abs(), m_perp: e.m_perp }),
        }
    }

    /// `‖V‖_{L^p(ℝ²)}^p`, i.e. `‖F‖_p^p` for the factorization `F = |V|`.
    pub fn lp_norm_pow(&self, p: f64) -> Result<f64> {
        if let Kind::Constant(c) = self.kind {
            if c.norm() == 0.0 {
                return Ok(0.0);
            }
            return Err(Error::DivergentNorm { product: 0.0, two_d: 2.0 });
        }
        if let Some(env) = self.envelope {
            if p * env.m_perp <= 2.0 {
                return Err(Error::DivergentNorm { product: p * env.m_perp, two_d: 2.0 });
            }
        }
        let n_theta = 64 * (self.angular_bandwidth() + 1);
        let angular = |r: f64| -> f64 {
            if self.is_radial() {
                2.0 * PI * self.eval_polar(r, 0.0).norm().powf(p)
            } else {
                (0..n_theta)
                    .map(|k| self.eval_polar(r, 2.0 * PI * k as f64 / n_theta as f64).norm().powf(p))
                    .sum::<f64>()
                    * (2.0 * PI / n_theta as f64)
            }
        };
        let tail_rate = self.envelope.map_or(2.0, |e| (p * e.m_perp - 2.0).max(1e-3));
        let ln_integrand = |t: f64| angular(t.exp()).ln() + 2.0 * t;
        Ok(log_radial_integral(&ln_integrand, 2.0, tail_rate))
    }
}

/// `∫ e^{h(t)} dt` over the line, where `h(t) = ln(g(e^t) e^{kt})` and the
/// integrand decays like `e^{kt}` as `t → -∞` and `e^{-tail_rate·t}` as `t → ∞`.
fn log_radial_integral(h: &dyn Fn(f64) -> f64, k: f64, tail_rate: f64) -> f64 {
    let lo = -40.0 / k;
    let hi = (40.0 / tail_rate.max(1e-3)).min(300.0);
    let integrand = |t: f64| Complex64::new(h(t).exp(), 0.0);
    let mut total = 0.0;
    for (a, b) in [(lo, 0.0), (0.0, hi)] {
        total += adaptive_gauss_legendre(&integrand, a, b, 0.0, 1e-14, 50).0.re;
    }
    total
}

/// `max_u (1+u)^{m/2} e^{-u/(2σ²)}` over `u = r² ≥ 0`.
fn gaussian_envelope_factor(sigma: f64, m_perp: f64) -> f64 {
    let s2 = sigma * sigma;
    let peak = m_perp * s2;
    if peak <= 1.0 {
        1.0
    } else {
        peak.powf(0.5 * m_perp) * (-(peak - 1.0) / (2.0 * s2)).exp()
    }
}

pub fn make_power_decay(c: f64, m_perp: f64, profile: AngularProfile) -> Result<Potential> {
    Potential::power_decay(c, m_perp, profile)
}

pub fn make_gaussian_complex(amplitude: Complex64, sigma: f64) -> Result<Potential> {
    Potential::gaussian(amplitude, sigma)
}

/// Polar sample grid `{(r_i cos θ_k, r_i sin θ_k)}` including the origin.
pub fn polar_grid(r_max: f64, n_r: usize, n_theta: usize) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    for i in 1..=n_r {
        let r = r_max * i as f64 / n_r as f64;
        for k in 0..n_theta {
            let th = 2.0 * PI * k as f64 / n_theta as f64;
            pts.push((r * th.cos(), r * th.sin()));
        }
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck {
    pub pass: bool,
    pub worst_ratio: f64,
}

/// `max |V|⟨X⟩^{m_perp}/C` over `grid`; passes iff the ratio is at most `1 + 1e-12`.
pub fn envelope_check(v: &Potential, c: f64, m_perp: f64, grid: &[(f64, f64)]) -> Result<EnvelopeCheck> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("envelope grid is empty".into()));
    }
    let worst = grid
        .iter()
        .map(|&(x, y)| v.eval(x, y).norm() * (1.0 + x * x + y * y).powf(0.5 * m_perp) / c)
        .fold(0.0, f64::max);
    Ok(EnvelopeCheck { pass: worst <= 1.0 + 1e-12, worst_ratio: worst })
}

/// `‖C⟨·⟩^{-m_perp}‖_{L^p(ℝ^{2d})}` by radial quadrature.
pub fn lp_norm_of_envelope(c: f64, m_perp: f64, p: f64, d: u32) -> Result<f64> {
    let two_d = 2.0 * d as f64;
    if p * m_perp <= two_d {
        return Err(Error::DivergentNorm { product: p * m_perp, two_d });
    }
    let a = 0.5 * p * m_perp;
    // |S^{2d-1}| = 2π^d/(d-1)!
    let sphere = 2.0 * PI.powi(d as i32) / (1..d).map(|k| k as f64).product::<f64>();
    // ln((1+r²)^{-a} r^{2d}) with r = e^t, written to avoid overflow of e^{2t}
    let ln_integrand = move |t: f64| {
        let ln1p = if t > 0.0 { 2.0 * t + (-2.0 * t).exp().ln_1p() } else { (2.0 * t).exp().ln_1p() };
        two_d * t - a * ln1p
    };
    let radial = log_radial_integral(&ln_integrand, two_d, p * m_perp - two_d);
    Ok(c * (sphere * radial).powf(1.0 / p))
}
