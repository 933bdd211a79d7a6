//! Schwarz–Christoffel disk-to-rectangle maps, the Möbius map `1/(λ−μ)` and
//! its distortion bounds, and the choice of the normalization point `λ₀`.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::holo::ComplexRectangle;
use crate::landau::{dist_to_essential, dist_to_levels, landau_level, MagneticConfig};
use crate::quadrature::adaptive_gauss_legendre;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `μ = −‖V‖∞ − 1`.
pub fn mu_of_potential(v_inf: f64) -> Result<f64> {
    if !(v_inf >= 0.0) {
        return Err(Error::InvalidParameter(format!("sup norm {v_inf} must be >= 0")));
    }
    Ok(-v_inf - 1.0)
}

/// `φ_μ(λ) = 1/(λ − μ)`.
pub fn mobius_map(lambda: Complex64, mu: f64) -> Result<Complex64> {
    let d = lambda - mu;
    if d.norm() == 0.0 {
        return Err(Error::Pole(lambda));
    }
    Ok(d.inv())
}

/// `φ_μ⁻¹(z) = μ + 1/z`.
pub fn mobius_inverse(z: Complex64, mu: f64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::Pole(z));
    }
    Ok(z.inv() + mu)
}

/// Images of the levels and of the half-line under `φ_μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusData {
    pub mu: f64,
    pub cfg: MagneticConfig,
}

impl MobiusData {
    pub fn new(cfg: MagneticConfig, v_inf: f64) -> Result<Self> {
        Ok(Self { mu: mu_of_potential(v_inf)?, cfg })
    }

    /// Gap radius `r_j = 2b` (half the spacing of consecutive levels, doubled).
    pub fn gap_radius(&self) -> f64 {
        2.0 * self.cfg.b()
    }

    /// `φ_μ(I) = [0, 1/(Λ₀ − μ)]` (closure, `0` being the image of `∞`).
    pub fn half_line_image(&self) -> (f64, f64) {
        (0.0, 1.0 / (self.cfg.lambda0() - self.mu))
    }

    /// `dist(z, φ_μ(E))`, truncating the levels once the tail cannot lower the minimum.
    pub fn dist_to_level_images(&self, z: Complex64) -> f64 {
        // 0 is the accumulation point of the images
        let mut best = z.norm();
        let mut j = 0usize;
        loop {
            let w = 1.0 / (landau_level(&self.cfg, j) - self.mu);
            best = best.min((z - w).norm());
            // All further images lie in [0, w); none can beat the distance to [0, w].
            let seg = dist_to_segment(z, 0.0, w);
            if seg >= best || w < 1e-15 {
                return best;
            }
            j += 1;
        }
    }

    pub fn dist_to_half_line_image(&self, z: Complex64) -> f64 {
        let (a, b) = self.half_line_image();
        dist_to_segment(z, a, b)
    }
}

fn dist_to_segment(z: Complex64, a: f64, b: f64) -> f64 {
    let x = z.re.clamp(a, b);
    (z - x).norm()
}

/// `(dist(φ_μ(λ), φ_μ(E)), dist(λ,E)/((1+V∞)²(1+|λ|)²))`.
pub fn distortion_probe(lambda: Complex64, cfg: &MagneticConfig, v_inf: f64) -> Result<(f64, f64)> {
    let m = MobiusData::new(*cfg, v_inf)?;
    let de = dist_to_levels(cfg, lambda);
    let rhs = de / ((1.0 + v_inf).powi(2) * (1.0 + lambda.norm()).powi(2));
    if de == 0.0 {
        return Ok((0.0, 0.0));
    }
    let z = mobius_map(lambda, m.mu)?;
    Ok((m.dist_to_level_images(z), rhs))
}

/// `(dist(φ_μ(λ), φ_μ(I)), dist(λ,I)/((1+V∞)²(1+|λ|)²))`.
pub fn distortion_probe_half_line(lambda: Complex64, cfg: &MagneticConfig, v_inf: f64) -> Result<(f64, f64)> {
    let m = MobiusData::new(*cfg, v_inf)?;
    let di = dist_to_essential(cfg, lambda);
    let rhs = di / ((1.0 + v_inf).powi(2) * (1.0 + lambda.norm()).powi(2));
    let z = mobius_map(lambda, m.mu)?;
    Ok((m.dist_to_half_line_image(z), rhs))
}

/// Where `λ` sits relative to the enlarged level neighbourhoods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `λ ∈ A = ∪ B(Λ_j, 4b)`, with the distortion pair of the `A` estimate.
    NearLevels { distortion: (f64, f64) },
    /// `λ ∈ D`, with the result of `dist(λ,E)/2 ≤ dist(λ,I) ≤ dist(λ,E)`.
    Away { holds: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCheck {
    pub region: Region,
    pub dist_e: f64,
    pub dist_i: f64,
}

pub fn region_split_check(lambda: Complex64, cfg: &MagneticConfig, v_inf: f64) -> Result<RegionCheck> {
    let dist_e = dist_to_levels(cfg, lambda);
    let dist_i = dist_to_essential(cfg, lambda);
    let region = if dist_e < 4.0 * cfg.b() {
        Region::NearLevels { distortion: distortion_probe(lambda, cfg, v_inf)? }
    } else {
        Region::Away { holds: 0.5 * dist_e <= dist_i && dist_i <= dist_e }
    };
    Ok(RegionCheck { region, dist_e, dist_i })
}

/// Unit-modulus disk automorphism `ψ(z) = (u z + w₀)/(1 + w̄₀ u z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Automorphism {
    pub u: Complex64,
    pub w0: Complex64,
}

impl Automorphism {
    /// The unique automorphism with `ψ(0) = w₀` and `ψ(1) = w₁`, `|w₁| = 1`.
    pub fn through(w0: Complex64, w1: Complex64) -> Result<Self> {
        if !(w0.norm() < 1.0) {
            return Err(Error::OutsideDisk(w0));
        }
        if (w1.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!("boundary target {w1} not on the circle")));
        }
        let u = (w1 - w0) / (ONE - w0.conj() * w1);
        Ok(Self { u: u / u.norm(), w0 })
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.u * z + self.w0) / (ONE + self.w0.conj() * self.u * z)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        let den = ONE + self.w0.conj() * self.u * z;
        self.u * (1.0 - self.w0.norm_sqr()) / (den * den)
    }

    pub fn inverse(&self, w: Complex64) -> Complex64 {
        (w - self.w0) / (self.u * (ONE - self.w0.conj() * w))
    }
}

/// Schwarz–Christoffel map of the unit disk onto a rectangle, with symmetric
/// prevertices `z₁ = e^{i(π+θ)}, z₂ = e^{i(π−θ)}, z₃ = e^{iθ}, z₄ = e^{−iθ}`
/// sent to `λ₁, λ₂, λ₃, λ₄`.
///
/// The base map has `φ(0)` at the centroid and `φ′(0) > 0`; an optional
/// automorphism is applied first, so the map is `φ ∘ ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SCMap {
    pub rect: ComplexRectangle,
    pub theta: f64,
    pub prevertices: [Complex64; 4],
    pub multiplier: f64,
    pub automorphism: Option<Automorphism>,
}

/// `Π_k √(1 − ζ/z_k)`, holomorphic in the open disk (principal branches).
fn sc_denominator(prevertices: &[Complex64; 4], zeta: Complex64) -> Complex64 {
    prevertices.iter().map(|&zk| (ONE - zeta / zk).sqrt()).product()
}

/// `∫₀^{z_k} dζ/Π√(1−ζ/z_j)` along the ray, with `t = 1 − u²` removing the
/// endpoint square-root singularity.
fn vertex_integral(prevertices: &[Complex64; 4], k: usize) -> Complex64 {
    let zk = prevertices[k];
    let f = |u: f64| -> Complex64 {
        let t = 1.0 - u * u;
        let zeta = zk * t;
        let rest: Complex64 = prevertices
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, &zj)| (ONE - zeta / zj).sqrt())
            .product();
        // √(1 − t) = u cancels against dt = −2u du
        2.0 * zk / rest
    };
    adaptive_gauss_legendre(&f, 0.0, 1.0, 1e-15, 1e-14, 40).0
}

fn prevertices_for(theta: f64) -> [Complex64; 4] {
    [
        Complex64::from_polar(1.0, PI + theta),
        Complex64::from_polar(1.0, PI - theta),
        Complex64::from_polar(1.0, theta),
        Complex64::from_polar(1.0, -theta),
    ]
}

/// `H/W` of the image rectangle for prevertex angle `θ`.
fn aspect_for(theta: f64) -> f64 {
    let v = vertex_integral(&prevertices_for(theta), 2);
    v.im / v.re
}

/// Solve for the prevertex angle and multiplier of `rect`.
pub fn sc_solve(rect: &ComplexRectangle) -> Result<SCMap> {
    let target = rect.height() / rect.width();
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::InvalidParameter(format!("rectangle aspect {target} is degenerate")));
    }
    let theta = if (target - 1.0).abs() < 1e-15 {
        FRAC_PI_4
    } else {
        // H/W increases from 0 to ∞ as θ runs over (0, π/2).
        let (mut lo, mut hi) = (1e-12, FRAC_PI_2 - 1e-12);
        if !(aspect_for(lo) < target && aspect_for(hi) > target) {
            return Err(Error::BisectionFailure(format!("aspect {target} outside the bracket")));
        }
        let mut it = 0;
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if aspect_for(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            it += 1;
            if it > 200 {
                return Err(Error::BisectionFailure("prevertex angle did not converge".into()));
            }
        }
        0.5 * (lo + hi)
    };
    let prevertices = prevertices_for(theta);
    let v3 = vertex_integral(&prevertices, 2);
    let multiplier = 0.5 * rect.width() / v3.re;
    if !multiplier.is_finite() || multiplier <= 0.0 {
        return Err(Error::BisectionFailure("nonpositive multiplier".into()));
    }
    Ok(SCMap { rect: *rect, theta, prevertices, multiplier, automorphism: None })
}

impl SCMap {
    /// Base map `φ` (no automorphism) and its derivative.
    pub fn eval_base(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        if !(z.norm() <= 1.0) {
            return Err(Error::OutsideDisk(z));
        }
        let c = self.rect.center();
        if z.norm() == 0.0 {
            return Ok((c, Complex64::new(self.multiplier, 0.0)));
        }
        // s = 1 − u² tames the endpoint when z sits on or near a prevertex
        let ratio = self.prevertices.map(|zk| z / zk);
        let gap = ratio.map(|r| ONE - r);
        let f = |u: f64| {
            let den: Complex64 = (0..4).map(|k| (gap[k] + ratio[k] * (u * u)).sqrt()).product();
            2.0 * u * z / den
        };
        let (integral, _) = adaptive_gauss_legendre(&f, 0.0, 1.0, 1e-15, 1e-14, 40);
        let deriv = if z.norm() < 1.0 {
            self.multiplier / sc_denominator(&self.prevertices, z)
        } else {
            Complex64::new(f64::NAN, f64::NAN)
        };
        Ok((c + integral * self.multiplier, deriv))
    }

    /// `(φ(z), φ′(z))` for `|z| < 1`.
    pub fn eval(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        if !(z.norm() < 1.0) {
            return Err(Error::OutsideDisk(z));
        }
        match self.automorphism {
            None => self.eval_base(z),
            Some(a) => {
                let w = a.apply(z);
                let (v, d) = self.eval_base(w)?;
                Ok((v, d * a.derivative(z)))
            }
        }
    }

    /// `φ_base⁻¹(λ)` by damped Newton from the origin.
    pub fn inverse_base(&self, lambda: Complex64) -> Result<Complex64> {
        if !self.rect.contains(lambda) {
            return Err(Error::InvalidParameter(format!("{lambda} outside the rectangle")));
        }
        let mut z = Complex64::new(0.0, 0.0);
        for _ in 0..100 {
            let (v, d) = self.eval_base(z)?;
            let mut step = (v - lambda) / d;
            let mut next = z - step;
            while next.norm() >= 1.0 {
                step *= 0.5;
                next = z - step;
            }
            z = next;
            if step.norm() < 1e-14 {
                return Ok(z);
            }
        }
        Err(Error::BisectionFailure(format!("Newton inverse of {lambda} did not converge")))
    }

    /// Boundary preimage on the arc `z₁ → z₄` (through `−i`) of the bottom-edge
    /// point with real part `x`.
    pub fn bottom_preimage(&self, x: f64) -> Result<Complex64> {
        if !(x > self.rect.re_min && x < self.rect.re_max) {
            return Err(Error::InvalidParameter(format!("{x} not inside the bottom edge")));
        }
        let (mut lo, mut hi) = (PI + self.theta, 2.0 * PI - self.theta);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let (v, _) = self.eval_base(Complex64::from_polar(1.0, mid))?;
            if v.re < x {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        Ok(Complex64::from_polar(1.0, 0.5 * (lo + hi)))
    }

    /// Compose with the automorphism that makes `φ(0) = λ₀` and sends `1` to
    /// the bottom-edge point below `level`.
    pub fn normalized(&self, lambda0: Complex64, level: f64) -> Result<SCMap> {
        let w0 = self.inverse_base(lambda0)?;
        let w1 = self.bottom_preimage(level)?;
        Ok(SCMap { automorphism: Some(Automorphism::through(w0, w1)?), ..self.clone() })
    }

    /// Prevertices of the composed map `φ ∘ ψ`.
    pub fn effective_prevertices(&self) -> [Complex64; 4] {
        match self.automorphism {
            None => self.prevertices,
            Some(a) => self.prevertices.map(|p| a.inverse(p)),
        }
    }

    /// `L_{1,z}`: preimage arc of the bottom edge, as an angular interval.
    fn bottom_arc(&self) -> (f64, f64) {
        let p = self.effective_prevertices();
        let a = p[0].arg().rem_euclid(2.0 * PI);
        let mut b = p[3].arg().rem_euclid(2.0 * PI);
        if b <= a {
            b += 2.0 * PI;
        }
        (a, b)
    }
}

fn dist_to_rect_boundary(r: &ComplexRectangle, w: Complex64) -> f64 {
    let dx = (w.re - r.re_min).min(r.re_max - w.re);
    let dy = (w.im - r.im_min).min(r.im_max - w.im);
    if dx >= 0.0 && dy >= 0.0 {
        dx.min(dy)
    } else {
        let cx = w.re.clamp(r.re_min, r.re_max);
        let cy = w.im.clamp(r.im_min, r.im_max);
        (w - Complex64::new(cx, cy)).norm()
    }
}

fn dist_to_arc(z: Complex64, arc: (f64, f64)) -> f64 {
    let mut t = z.arg().rem_euclid(2.0 * PI);
    if t < arc.0 {
        t += 2.0 * PI;
    }
    if t <= arc.1 {
        return (1.0 - z.norm()).abs();
    }
    let e0 = Complex64::from_polar(1.0, arc.0);
    let e1 = Complex64::from_polar(1.0, arc.1);
    (z - e0).norm().min((z - e1).norm())
}

/// Extremes of the comparability ratio
/// `[dist(z,𝕋)/dist(z,ℱ_z)^{1/2}] / dist(φ(z),∂Π)` and of its bottom-edge variant
/// `[dist(z,L_{1,z})/dist(z,ℱ_z)^{1/2}] / dist(φ(z),L_{1,λ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparability {
    pub min: f64,
    pub max: f64,
    pub edge_min: f64,
    pub edge_max: f64,
}

pub fn comparability_probe(map: &SCMap, samples: &[Complex64]) -> Result<Comparability> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no comparability samples".into()));
    }
    let pv = map.effective_prevertices();
    let arc = map.bottom_arc();
    let r = map.rect;
    let ratios: Vec<Result<(f64, f64)>> = samples
        .par_iter()
        .map(|&z| {
            if z.norm() > 0.98 {
                return Err(Error::OutsideDisk(z));
            }
            let (w, _) = map.eval(z)?;
            let df = pv.iter().map(|&p| (z - p).norm()).fold(f64::INFINITY, f64::min).sqrt();
            let full = ((1.0 - z.norm()) / df) / dist_to_rect_boundary(&r, w);
            let bottom = {
                let x = w.re.clamp(r.re_min, r.re_max);
                (w - Complex64::new(x, r.im_min)).norm()
            };
            let edge = (dist_to_arc(z, arc) / df) / bottom;
            Ok((full, edge))
        })
        .collect();
    let mut out = Comparability { min: f64::INFINITY, max: 0.0, edge_min: f64::INFINITY, edge_max: 0.0 };
    for r in ratios {
        let (a, b) = r?;
        out.min = out.min.min(a);
        out.max = out.max.max(a);
        out.edge_min = out.edge_min.min(b);
        out.edge_max = out.edge_max.max(b);
    }
    Ok(out)
}

/// Fixed clearance used when placing `λ₀`.
pub const LAMBDA0_MARGIN: f64 = 0.5;

/// A point `λ₀` of `rect` with `|Im λ₀| ≥ 1 + V∞` and distance at least
/// `1 + V∞` from the strip `{Re λ ≥ −V∞, |Im λ| ≤ V∞}` containing the
/// numerical range.
pub fn choose_lambda0(rect: &ComplexRectangle, v_inf: f64) -> Result<Complex64> {
    if !(v_inf >= 0.0) {
        return Err(Error::InvalidParameter(format!("sup norm {v_inf} must be >= 0")));
    }
    let needed = 2.0 * (1.0 + v_inf) + LAMBDA0_MARGIN;
    if rect.im_max < needed {
        return Err(Error::RectangleTooShort { needed, have: rect.im_max });
    }
    let im = (rect.im_min + LAMBDA0_MARGIN).max(1.0 + 2.0 * v_inf + LAMBDA0_MARGIN);
    let lambda0 = Complex64::new(rect.center().re, im);
    if !rect.contains(lambda0) || !lambda0_admissible(lambda0, v_inf) {
        return Err(Error::RectangleTooShort { needed, have: rect.im_max });
    }
    Ok(lambda0)
}

/// Re-check of both conditions against the strip over-approximation.
pub fn lambda0_admissible(lambda0: Complex64, v_inf: f64) -> bool {
    let bound = 1.0 + v_inf;
    let dx = (-v_inf - lambda0.re).max(0.0);
    let dy = (lambda0.im.abs() - v_inf).max(0.0);
    lambda0.im.abs() >= bound && dx.hypot(dy) >= bound
}

/// Points of a Halton sequence mapped into the disk of radius `r`.
pub fn halton_disk(n: usize, r: f64) -> Vec<Complex64> {
    fn radical_inverse(mut i: usize, base: usize) -> f64 {
        let mut f = 1.0;
        let mut x = 0.0;
        while i > 0 {
            f /= base as f64;
            x += f * (i % base) as f64;
            i /= base;
        }
        x
    }
    (1..=n)
        .map(|i| Complex64::from_polar(r * radical_inverse(i, 2).sqrt(), 2.0 * PI * radical_inverse(i, 3)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit() -> MagneticConfig {
        MagneticConfig::new(1.0, 1).unwrap()
    }

    fn rect(a: f64, b: f64, cc: f64, d: f64) -> ComplexRectangle {
        ComplexRectangle::new(a, b, cc, d).unwrap()
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu_of_potential(0.0).unwrap(), -1.0);
        assert_eq!(mu_of_potential(2.0).unwrap(), -3.0);
        assert_eq!(mu_of_potential(0.5).unwrap(), -1.5);
        assert!(mu_of_potential(-1.0).is_err());
    }

    #[test]
    fn mobius_examples() {
        assert!((mobius_map(c(2.0, 0.0), -1.0).unwrap() - c(1.0 / 3.0, 0.0)).norm() < 1e-16);
        assert!(matches!(mobius_map(c(-1.0, 0.0), -1.0), Err(Error::Pole(_))));
        assert!(mobius_inverse(c(0.0, 0.0), -1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn mobius_roundtrip(re in -10.0f64..10.0, im in -10.0f64..10.0, v in 0.0f64..5.0) {
            let mu = mu_of_potential(v).unwrap();
            let l = c(re, im);
            proptest::prop_assume!((l - mu).norm() > 1e-3);
            let back = mobius_inverse(mobius_map(l, mu).unwrap(), mu).unwrap();
            proptest::prop_assert!((back - l).norm() <= 1e-14 * (1.0 + l.norm()) * (1.0 + (l - mu).norm()));
        }

        #[test]
        fn away_region_bound_is_exact(re in -60.0f64..60.0, im in -30.0f64..30.0, b in 0.2f64..3.0) {
            let cfg = MagneticConfig::new(b, 1).unwrap();
            let chk = region_split_check(c(re, im), &cfg, 0.7).unwrap();
            if let Region::Away { holds } = chk.region {
                proptest::prop_assert!(holds);
            }
        }

        #[test]
        fn level_image_distance_matches_brute_force(re in -5.0f64..30.0, im in -4.0f64..4.0) {
            let m = MobiusData::new(unit(), 0.3).unwrap();
            let z = mobius_map(c(re, im), m.mu).unwrap();
            let brute = (0..200_000).map(|j| (z - 1.0 / (landau_level(&unit(), j) - m.mu)).norm()).fold(f64::INFINITY, f64::min);
            proptest::prop_assert!((m.dist_to_level_images(z) - brute.min(z.norm())).abs() < 1e-12);
        }
    }

    #[test]
    fn distortion_examples() {
        assert_eq!(distortion_probe(c(3.0, 0.0), &unit(), 0.0).unwrap(), (0.0, 0.0));
        // λ = 2 between the levels 1 and 3, μ = −1: φ(2) = 1/3, φ(1) = 1/2, φ(3) = 1/4
        let (lhs, rhs) = distortion_probe(c(2.0, 0.0), &unit(), 0.0).unwrap();
        assert!((lhs - 1.0 / 12.0).abs() < 1e-15);
        assert!((rhs - 1.0 / 9.0).abs() < 1e-15);
        // half line: φ(I) = [0, 1/2]
        let l = c(3.0, 2.0);
        let (hl, hr) = distortion_probe_half_line(l, &unit(), 0.0).unwrap();
        let z = (l + 1.0).inv();
        assert!((hl - z.im.abs()).abs() < 1e-15);
        assert!((hr - 2.0 / (1.0 + 13f64.sqrt()).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn region_examples() {
        let r = region_split_check(c(2.0, 0.0), &unit(), 0.0).unwrap();
        assert!(matches!(r.region, Region::NearLevels { .. }));
        let r2 = region_split_check(c(3.0, 10.0), &unit(), 0.0).unwrap();
        assert_eq!(r2.region, Region::Away { holds: true });
        assert_eq!((r2.dist_e, r2.dist_i), (10.0, 10.0));
        let r3 = region_split_check(c(-50.0, 0.0), &unit(), 0.0).unwrap();
        assert_eq!(r3.region, Region::Away { holds: true });
        assert_eq!((r3.dist_e, r3.dist_i), (51.0, 51.0));
    }

    #[test]
    fn square_prevertices() {
        let m = sc_solve(&rect(0.0, 2.0, 0.0, 2.0)).unwrap();
        assert_eq!(m.theta, FRAC_PI_4);
        assert!((aspect_for(FRAC_PI_4) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vertices_are_reproduced() {
        for r in [rect(1.0, 3.0, 0.5, 4.5), rect(-1.0, 3.0, 0.0, 2.0), rect(0.0, 1.0, 0.0, 1.0)] {
            let m = sc_solve(&r).unwrap();
            let corners = [r.lambda1(), r.lambda2(), r.lambda3(), r.lambda4()];
            for (k, &zk) in m.prevertices.iter().enumerate() {
                assert!((zk.norm() - 1.0).abs() < 1e-15);
                let (v, _) = m.eval_base(zk).unwrap();
                assert!((v - corners[k]).norm() < 1e-8, "{k}: {v} vs {}", corners[k]);
            }
            assert_eq!(m.eval(c(0.0, 0.0)).unwrap().0, r.center());
        }
        assert!(ComplexRectangle::new(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = sc_solve(&rect(-1.0, 3.0, 0.0, 2.0)).unwrap();
        for z in halton_disk(50, 0.95) {
            let (_, d) = m.eval(z).unwrap();
            let h = 1e-5;
            let fd = (m.eval(z + h).unwrap().0 - m.eval(z - h).unwrap().0) / (2.0 * h);
            assert!((fd - d).norm() <= 1e-6 * d.norm(), "{z}: {fd} vs {d}");
        }
    }

    #[test]
    fn symmetric_normalization_properties() {
        let r = rect(-1.0, 3.0, 0.0, 2.0);
        let m = sc_solve(&r).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for k in -20..=20 {
            let x = 0.049 * k as f64;
            let (v, _) = m.eval(c(x, 0.0)).unwrap();
            assert!((v.im - r.center().im).abs() < 1e-12);
            assert!(v.re > prev);
            prev = v.re;
        }
        for z in halton_disk(30, 0.9) {
            let a = m.eval(z).unwrap().0;
            let b = m.eval(z.conj()).unwrap().0;
            assert!((a.re - b.re).abs() < 1e-12 && (a.im + b.im - 2.0 * r.center().im).abs() < 1e-12);
        }
    }

    #[test]
    fn automorphism_normalization() {
        let r = rect(2.0, 4.0, 1e-3, 3.0);
        let lambda0 = choose_lambda0(&r, 0.0).unwrap();
        let m = sc_solve(&r).unwrap().normalized(lambda0, 3.0).unwrap();
        assert!((m.eval(c(0.0, 0.0)).unwrap().0 - lambda0).norm() < 1e-10);
        let near_one = m.eval_base(m.automorphism.unwrap().apply(c(1.0, 0.0))).unwrap().0;
        assert!((near_one - c(3.0, 1e-3)).norm() < 1e-8);
        let a = Automorphism::through(c(0.2, -0.3), Complex64::from_polar(1.0, 2.0)).unwrap();
        for z in halton_disk(10, 0.9) {
            assert!((a.inverse(a.apply(z)) - z).norm() < 1e-14);
            assert!(a.apply(z).norm() < 1.0);
        }
    }

    #[test]
    fn rectangle_map_inverse() {
        let m = sc_solve(&rect(1.0, 3.0, 0.5, 2.5)).unwrap();
        for w in [c(2.0, 1.5), c(1.1, 0.6), c(2.9, 2.4)] {
            let z = m.inverse_base(w).unwrap();
            assert!((m.eval_base(z).unwrap().0 - w).norm() < 1e-10);
        }
    }

    #[test]
    fn comparability_examples() {
        let m = sc_solve(&rect(0.0, 2.0, 0.0, 2.0)).unwrap();
        let all = comparability_probe(&m, &halton_disk(10_000, 0.98)).unwrap();
        assert!(all.min > 0.0 && all.max / all.min < 100.0, "{all:?}");
        assert!(all.edge_min > 0.0 && all.edge_max.is_finite());
        let tiny: Vec<Complex64> = halton_disk(200, 1e-3);
        let t = comparability_probe(&m, &tiny).unwrap();
        assert!(t.max / t.min < 1.1);
        let one = comparability_probe(&m, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(one.min, one.max);
        assert!(comparability_probe(&m, &[]).is_err());
    }

    #[test]
    fn lambda0_examples() {
        let l = choose_lambda0(&rect(1.0, 5.0, 0.0, 5.0), 0.5).unwrap();
        assert_eq!(l, c(3.0, 2.5));
        assert!(lambda0_admissible(l, 0.5));
        assert!(matches!(choose_lambda0(&rect(1.0, 5.0, 0.0, 1.0), 0.5), Err(Error::RectangleTooShort { .. })));
        let l2 = choose_lambda0(&rect(0.0, 4.0, 0.0, 3.0), 0.0).unwrap();
        assert_eq!(l2, c(2.0, 1.5));
        assert!(lambda0_admissible(l2, 0.0));
    }

    proptest::proptest! {
        #[test]
        fn lambda0_always_admissible(a in -5.0f64..5.0, w in 0.1f64..6.0, h in 0.0f64..10.0, v in 0.0f64..3.0) {
            let r = rect(a, a + w, 0.0, 2.0 * (1.0 + v) + 0.5 + h);
            let l = choose_lambda0(&r, v).unwrap();
            proptest::prop_assert!(lambda0_admissible(l, v) && r.contains(l));
        }
    }
}
