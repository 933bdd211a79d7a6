//! Argument-principle zero counting and localization on rectangles, disk
//! pullbacks, and zero sums for functions on the unit disk.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::linalg::wrap_phase;
use crate::schatten::LogValue;

/// A function holomorphic on a neighbourhood of the rectangles it is used on,
/// evaluated in log form.
///
/// `smooth_ln_abs + i·smooth_phase`, when nonzero, must be a holomorphic
/// logarithm `h` on the same region. It contributes nothing to windings, and
/// zeros are polished on `f e^{-h}`.
pub trait Holomorphic: Sync {
    fn eval_log(&self, z: Complex64) -> Result<LogValue>;
}

/// Adapter for plain complex closures.
pub struct FnHolo<F>(pub F);

impl<F: Fn(Complex64) -> Complex64 + Sync> Holomorphic for FnHolo<F> {
    fn eval_log(&self, z: Complex64) -> Result<LogValue> {
        let v = (self.0)(z);
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(LogValue::from_complex(v))
    }
}

/// Adapter for closures that already return log values.
pub struct LogHolo<F>(pub F);

impl<F: Fn(Complex64) -> Result<LogValue> + Sync> Holomorphic for LogHolo<F> {
    fn eval_log(&self, z: Complex64) -> Result<LogValue> {
        (self.0)(z)
    }
}

/// Axis-aligned rectangle `[re_min, re_max] × [im_min, im_max]`.
///
/// Corners follow the usual labelling: `λ₁` bottom-left, `λ₄` bottom-right,
/// `λ₃` top-right, `λ₂` top-left; the boundary is walked `λ₁ → λ₄ → λ₃ → λ₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRectangle {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl ComplexRectangle {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max) || !(im_min < im_max) {
            return Err(Error::InvalidParameter(format!(
                "degenerate rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    pub fn lambda1(&self) -> Complex64 {
        Complex64::new(self.re_min, self.im_min)
    }

    pub fn lambda2(&self) -> Complex64 {
        Complex64::new(self.re_min, self.im_max)
    }

    pub fn lambda3(&self) -> Complex64 {
        Complex64::new(self.re_max, self.im_max)
    }

    pub fn lambda4(&self) -> Complex64 {
        Complex64::new(self.re_max, self.im_min)
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Same centre, sides scaled by `factor`.
    pub fn dilate(&self, factor: f64) -> Self {
        let c = self.center();
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        Self { re_min: c.re - hw, re_max: c.re + hw, im_min: c.im - hh, im_max: c.im + hh }
    }

    /// Mirror image under complex conjugation.
    pub fn conj(&self) -> Self {
        Self { re_min: self.re_min, re_max: self.re_max, im_min: -self.im_max, im_max: -self.im_min }
    }

    /// Four sub-rectangles cut at fraction `t` of each side.
    pub fn quadrisect(&self, t: f64) -> [ComplexRectangle; 4] {
        let xm = self.re_min + t * self.width();
        let ym = self.im_min + t * self.height();
        [
            Self { re_min: self.re_min, re_max: xm, im_min: self.im_min, im_max: ym },
            Self { re_min: xm, re_max: self.re_max, im_min: self.im_min, im_max: ym },
            Self { re_min: xm, re_max: self.re_max, im_min: ym, im_max: self.im_max },
            Self { re_min: self.re_min, re_max: xm, im_min: ym, im_max: self.im_max },
        ]
    }

    fn edges(&self) -> [(Complex64, Complex64); 4] {
        [
            (self.lambda1(), self.lambda4()),
            (self.lambda4(), self.lambda3()),
            (self.lambda3(), self.lambda2()),
            (self.lambda2(), self.lambda1()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindingMethod {
    /// Accumulated argument with adaptive refinement.
    Argument,
    /// `∮ f′/f` with `f′/f` from central differences of `log f`.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingOptions {
    pub method: WindingMethod,
    /// Initial samples per edge for argument tracking.
    pub initial_per_edge: usize,
    /// Shortest admissible boundary segment, relative to the rectangle diameter.
    pub min_segment: f64,
    /// Gauss–Legendre panels per edge for the quadrature route.
    pub quad_panels: usize,
}

impl Default for WindingOptions {
    fn default() -> Self {
        Self { method: WindingMethod::Argument, initial_per_edge: 32, min_segment: 1e-12, quad_panels: 32 }
    }
}

fn eval_nonzero<F: Holomorphic + ?Sized>(f: &F, z: Complex64) -> Result<LogValue> {
    let v = f.eval_log(z)?;
    if v.is_zero() {
        return Err(Error::ZeroOnBoundary(z));
    }
    if !v.ln_abs.is_finite() || !v.phase.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    z: Complex64,
    phase: f64,
    /// `ln|f e^{-h}|`.
    ln: f64,
}

fn sample<F: Holomorphic + ?Sized>(f: &F, z: Complex64) -> Result<Sample> {
    let v = eval_nonzero(f, z)?;
    Ok(Sample { z, phase: v.phase, ln: v.ln_abs - v.smooth_ln_abs })
}

/// Largest change of the reduced log-modulus accepted between neighbouring samples.
const MAX_LN_STEP: f64 = 1.0;

fn tame_step(a: &Sample, b: &Sample) -> Option<f64> {
    let d = wrap_phase(b.phase - a.phase);
    (d.abs() < FRAC_PI_2 && (b.ln - a.ln).abs() < MAX_LN_STEP).then_some(d)
}

/// Phase change from `a` to `b`. A segment is accepted when its five-point
/// sampling shows small steps in both phase and log-modulus; the phase test
/// alone misses a full turn hidden inside one step near a pole or zero.
fn segment_phase<F: Holomorphic + ?Sized>(f: &F, a: Sample, b: Sample, mid: Option<Sample>, min_len: f64) -> Result<f64> {
    let zm = 0.5 * (a.z + b.z);
    if (b.z - a.z).norm() < min_len {
        return Err(Error::ZeroOnBoundary(zm));
    }
    let m = match mid {
        Some(m) => m,
        None => sample(f, zm)?,
    };
    let q1 = sample(f, 0.5 * (a.z + m.z))?;
    let q2 = sample(f, 0.5 * (m.z + b.z))?;
    let pts = [a, q1, m, q2, b];
    let steps: Option<Vec<f64>> = pts.windows(2).map(|w| tame_step(&w[0], &w[1])).collect();
    if let Some(steps) = steps {
        return Ok(steps.iter().sum());
    }
    Ok(segment_phase(f, a, m, Some(q1), min_len)? + segment_phase(f, m, b, Some(q2), min_len)?)
}

/// Total change of `arg f` along the boundary, divided by `2π`.
pub fn winding_number<F: Holomorphic + ?Sized>(f: &F, rect: &ComplexRectangle, opts: &WindingOptions) -> Result<f64> {
    let mut total = 0.0;
    match opts.method {
        WindingMethod::Argument => {
            let min_len = opts.min_segment * rect.diameter();
            for (a, b) in rect.edges() {
                let n = opts.initial_per_edge.max(1);
                let mut prev = sample(f, a)?;
                for k in 1..=n {
                    let next = sample(f, a + (b - a) * (k as f64 / n as f64))?;
                    total += segment_phase(f, prev, next, None, min_len)?;
                    prev = next;
                }
            }
            Ok(total / (2.0 * PI))
        }
        WindingMethod::Quadrature => {
            let (nodes, weights) = crate::quadrature::gauss_legendre(16);
            let h = 1e-6 * rect.diameter();
            let log_ratio = |z: Complex64| -> Result<Complex64> {
                // d log f / dz by a central difference along the real direction
                let fp = eval_nonzero(f, z + h)?;
                let fm = eval_nonzero(f, z - h)?;
                let dl = Complex64::new(
                    fp.ln_abs - fm.ln_abs,
                    wrap_phase(fp.phase - fm.phase) + (fp.smooth_phase - fm.smooth_phase),
                );
                Ok(dl / (2.0 * h))
            };
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in rect.edges() {
                let panels = opts.quad_panels.max(1);
                for k in 0..panels {
                    let pa = a + (b - a) * (k as f64 / panels as f64);
                    let pb = a + (b - a) * ((k + 1) as f64 / panels as f64);
                    let half = 0.5 * (pb - pa);
                    let mid = 0.5 * (pa + pb);
                    for (t, w) in nodes.iter().zip(&weights) {
                        acc += log_ratio(mid + half * *t)? * half * *w;
                    }
                }
            }
            Ok((acc / Complex64::new(0.0, 2.0 * PI)).re)
        }
    }
}

/// Number of zeros (with multiplicity) inside `rect`.
pub fn winding_count<F: Holomorphic + ?Sized>(f: &F, rect: &ComplexRectangle, opts: &WindingOptions) -> Result<i64> {
    let w = winding_number(f, rect, opts)?;
    let r = w.round();
    if (w - r).abs() >= 0.1 {
        return Err(Error::NonIntegerWinding(w));
    }
    Ok(r as i64)
}

/// A located zero or unresolved zero cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroRecord {
    pub location: Complex64,
    pub multiplicity: u32,
    /// `|f|` at `location`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroOptions {
    pub winding: WindingOptions,
    /// Secant stopping tolerance; default `1e-10 · diam(rect)`.
    pub tol: Option<f64>,
    /// Cells below this diameter holding several zeros are reported as one
    /// cluster; default `1e-6 · diam(rect)`.
    pub cluster_tol: Option<f64>,
    pub max_depth: usize,
}

impl Default for ZeroOptions {
    fn default() -> Self {
        Self { winding: WindingOptions::default(), tol: None, cluster_tol: None, max_depth: 40 }
    }
}

/// Cut ratios tried in turn; off-centre so symmetric zero sets avoid the cuts.
const SPLITS: [f64; 4] = [0.5 + 0.0731, 0.5 - 0.0917, 0.5 + 0.1423, 0.5 - 0.1871];

fn log_ratio(num: &LogValue, den: &LogValue) -> Complex64 {
    let d = num.reduced().div(&den.reduced());
    Complex64::from_polar(d.ln_abs.exp(), d.phase)
}

fn secant_polish<F: Holomorphic + ?Sized>(f: &F, cell: &ComplexRectangle, tol: f64) -> Option<(Complex64, LogValue)> {
    let slack = cell.dilate(1.5);
    let mut z0 = cell.center();
    let mut z1 = z0 + Complex64::new(0.013, 0.007) * cell.diameter();
    let mut f0 = f.eval_log(z0).ok()?;
    if f0.is_zero() {
        return Some((z0, f0));
    }
    let mut f1 = f.eval_log(z1).ok()?;
    for _ in 0..80 {
        if f1.is_zero() {
            return Some((z1, f1));
        }
        let denom = Complex64::new(1.0, 0.0) - log_ratio(&f0, &f1);
        if denom.norm() == 0.0 || !denom.re.is_finite() {
            return None;
        }
        let step = (z1 - z0) / denom;
        let z2 = z1 - step;
        if !slack.contains(z2) || !z2.re.is_finite() {
            return None;
        }
        z0 = z1;
        f0 = f1;
        z1 = z2;
        f1 = f.eval_log(z1).ok()?;
        if step.norm() <= tol {
            return Some((z1, f1));
        }
    }
    None
}

struct Locator<'a, F: Holomorphic + ?Sized> {
    f: &'a F,
    opts: ZeroOptions,
    tol: f64,
    cluster_tol: f64,
}

impl<'a, F: Holomorphic + ?Sized> Locator<'a, F> {
    fn children(&self, cell: &ComplexRectangle, count: i64) -> Result<Vec<(ComplexRectangle, i64)>> {
        let mut last_err = None;
        for &t in &SPLITS {
            let subs = cell.quadrisect(t);
            let counts: Vec<Result<i64>> = subs.par_iter().map(|s| winding_count(self.f, s, &self.opts.winding)).collect();
            if let Some(e) = counts.iter().find_map(|r| r.as_ref().err()) {
                last_err = Some(e.clone());
                continue;
            }
            let counts: Vec<i64> = counts.into_iter().map(|r| r.expect("checked")).collect();
            if counts.iter().sum::<i64>() != count || counts.iter().any(|&c| c < 0) {
                last_err = Some(Error::NonIntegerWinding(counts.iter().sum::<i64>() as f64));
                continue;
            }
            return Ok(subs.into_iter().zip(counts).filter(|(_, c)| *c > 0).collect());
        }
        Err(last_err.unwrap_or(Error::MaxDepth(self.opts.max_depth)))
    }

    fn explore(&self, cell: ComplexRectangle, count: i64, depth: usize) -> Result<Vec<ZeroRecord>> {
        if count <= 0 {
            return Ok(Vec::new());
        }
        if count == 1 {
            if let Some((z, v)) = secant_polish(self.f, &cell, self.tol) {
                if cell.contains(z) {
                    return Ok(vec![ZeroRecord { location: z, multiplicity: 1, residual: v.reduced().value().norm() }]);
                }
            }
            if cell.diameter() <= self.tol.max(self.cluster_tol * 1e-3) {
                let z = cell.center();
                let r = self.f.eval_log(z).map(|v| v.reduced().value().norm()).unwrap_or(0.0);
                return Ok(vec![ZeroRecord { location: z, multiplicity: 1, residual: r }]);
            }
        } else if cell.diameter() <= self.cluster_tol {
            let z = cell.center();
            let r = self.f.eval_log(z).map(|v| v.reduced().value().norm()).unwrap_or(0.0);
            return Ok(vec![ZeroRecord { location: z, multiplicity: count as u32, residual: r }]);
        }
        if depth >= self.opts.max_depth {
            return Err(Error::MaxDepth(self.opts.max_depth));
        }
        let kids = self.children(&cell, count)?;
        let found: Vec<Result<Vec<ZeroRecord>>> =
            kids.into_par_iter().map(|(c, n)| self.explore(c, n, depth + 1)).collect();
        let mut out = Vec::new();
        for r in found {
            out.extend(r?);
        }
        Ok(out)
    }
}

/// All zeros of `f` inside `rect`, sorted by (re, im).
///
/// Multiplicities come from per-cell winding counts and always sum to the
/// winding count of `rect`.
pub fn locate_zeros<F: Holomorphic + ?Sized>(f: &F, rect: &ComplexRectangle, opts: &ZeroOptions) -> Result<Vec<ZeroRecord>> {
    let total = winding_count(f, rect, &opts.winding)?;
    if total < 0 {
        return Err(Error::NonIntegerWinding(total as f64));
    }
    let loc = Locator {
        f,
        opts: *opts,
        tol: opts.tol.unwrap_or(1e-10 * rect.diameter()),
        cluster_tol: opts.cluster_tol.unwrap_or(1e-6 * rect.diameter()),
    };
    let mut zeros = loc.explore(*rect, total, 0)?;
    zeros.sort_by(|a, b| a.location.re.total_cmp(&b.location.re).then(a.location.im.total_cmp(&b.location.im)));
    Ok(zeros)
}

/// `h̃(z) = f(φ(z)) / f(φ(0))` on the unit disk.
pub struct Pullback<'a, F: Holomorphic + ?Sized, P: Fn(Complex64) -> Complex64 + Sync> {
    f: &'a F,
    phi: P,
    f0: LogValue,
}

impl<'a, F: Holomorphic + ?Sized, P: Fn(Complex64) -> Complex64 + Sync> Holomorphic for Pullback<'a, F, P> {
    fn eval_log(&self, z: Complex64) -> Result<LogValue> {
        if z == Complex64::new(0.0, 0.0) {
            return Ok(LogValue::one());
        }
        Ok(self.f.eval_log((self.phi)(z))?.div(&self.f0))
    }
}

pub fn pullback_normalize<'a, F, P>(f: &'a F, phi: P) -> Result<Pullback<'a, F, P>>
where
    F: Holomorphic + ?Sized,
    P: Fn(Complex64) -> Complex64 + Sync,
{
    let f0 = f.eval_log(phi(Complex64::new(0.0, 0.0)))?;
    if f0.is_zero() {
        return Err(Error::BadNormalizationPoint);
    }
    Ok(Pullback { f, phi, f0 })
}

/// `Σ_z (1−|z|)^{α+1+τ} Π_j |z−ξ_j|^{(β_j−1+τ)₊}`.
pub fn bgk_sum(zeros: &[Complex64], alpha: f64, boundary: &[(Complex64, f64)], tau: f64) -> Result<f64> {
    if !(tau > 0.0) || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("need tau > 0 and alpha >= 0, got {tau}, {alpha}")));
    }
    for &(xi, beta) in boundary {
        if ((xi.norm() - 1.0).abs()) > 1e-12 || beta < 0.0 {
            return Err(Error::InvalidParameter(format!("boundary point {xi} with beta {beta}")));
        }
    }
    let mut s = crate::sum::CompensatedSum::new();
    for &z in zeros {
        if !(z.norm() < 1.0) {
            return Err(Error::OutsideDisk(z));
        }
        let mut term = (1.0 - z.norm()).powf(alpha + 1.0 + tau);
        for &(xi, beta) in boundary {
            term *= (z - xi).norm().powf((beta - 1.0 + tau).max(0.0));
        }
        s.add(term);
    }
    Ok(s.value())
}

/// Finite Blaschke product `B(z) = Π (|a|/a)(a−z)/(1−āz)` (factor `z` for `a = 0`).
pub fn blaschke(zeros: &[Complex64], z: Complex64) -> Complex64 {
    zeros.iter().fold(Complex64::new(1.0, 0.0), |acc, &a| {
        if a.norm() == 0.0 {
            acc * z
        } else {
            acc * (a.norm() / a) * (a - z) / (Complex64::new(1.0, 0.0) - a.conj() * z)
        }
    })
}

/// `K₀ = sup_disk log|B/B(0)| = −log|B(0)|`, since `|B| ≤ 1` with equality on the circle.
pub fn blaschke_k0(zeros: &[Complex64]) -> Result<f64> {
    let mut k = 0.0;
    for &a in zeros {
        if !(a.norm() < 1.0) {
            return Err(Error::OutsideDisk(a));
        }
        if a.norm() == 0.0 {
            return Err(Error::BadNormalizationPoint);
        }
        k -= a.norm().ln();
    }
    Ok(k)
}
