//! Lieb–Thirring type functionals over eigenvalue lists, their constants, and
//! the resolvent-difference chain in the plane.

use num_complex::Complex64;

use crate::assembly::{resolvent_difference, TruncatedOperator};
use crate::conformal::{mobius_map, mu_of_potential, MobiusData};
use crate::error::{Error, Result};
use crate::landau::{dist_to_essential, dist_to_levels, MagneticConfig};
use crate::linalg::{eigenvalues, CMatrix};
use crate::schatten::singular_values;
use crate::spectrum::EigRecord;
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    /// `Σ dist(λ,E)^p / (1+|λ|)^{2p}`.
    Planar,
    /// `Σ dist(λ,[Λ₀,∞))^{p/2+1+ε} dist(λ,E)^{(p/4−1+ε)₊} / (1+|λ|)^γ`.
    Spatial,
    /// Planar terms over `|λ| ≥ τ` with `|λ|^{2p}` in the denominator.
    PlanarTail,
    /// Spatial terms over `|λ| ≥ τ` with `|λ|^γ` in the denominator.
    SpatialTail,
}

impl Functional {
    pub fn as_str(&self) -> &'static str {
        match self {
            Functional::Planar => "planar",
            Functional::Spatial => "spatial",
            Functional::PlanarTail => "planar_tail",
            Functional::SpatialTail => "spatial_tail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LtParams {
    pub p: f64,
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtTerm {
    pub value: Complex64,
    pub multiplicity: u32,
    /// Contribution including the multiplicity weight.
    pub term: f64,
}

/// The four constants `(K, K₁, K₂, K₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtConstants {
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LtReport {
    pub functional: Functional,
    pub params: LtParams,
    pub terms: Vec<LtTerm>,
    pub total: f64,
    pub warnings: Vec<String>,
    /// `‖F‖_{L^p}^p`, when known.
    pub f_norm_pp: Option<f64>,
    pub v_inf: Option<f64>,
    pub constants: Option<LtConstants>,
    /// Observed ratios `(label, LHS/RHS-core)` across a scaling family.
    pub history: Vec<(String, f64)>,
}

impl LtReport {
    fn new(functional: Functional, params: LtParams, terms: Vec<LtTerm>, warnings: Vec<String>) -> Self {
        let total = terms.iter().map(|t| t.term).collect::<CompensatedSum>().value();
        Self { functional, params, terms, total, warnings, f_norm_pp: None, v_inf: None, constants: None, history: Vec::new() }
    }

    /// Largest observed ratio: the fitted constant of the family.
    pub fn fitted_constant(&self) -> Option<f64> {
        self.history.iter().map(|h| h.1).fold(None, |a, x| Some(a.map_or(x, |a: f64| a.max(x))))
    }

    /// Whether the positive ratios in the history stay within `factor` of each other.
    pub fn history_stable(&self, factor: f64) -> bool {
        let pos: Vec<f64> = self.history.iter().map(|h| h.1).filter(|&x| x > 0.0).collect();
        if pos.is_empty() {
            return true;
        }
        let max = pos.iter().copied().fold(0.0, f64::max);
        let min = pos.iter().copied().fold(f64::INFINITY, f64::min);
        max <= factor * min
    }
}

/// Smallest admissible exponent `2[d/2] + 2`.
pub fn min_exponent(d: u32) -> f64 {
    2.0 * (d / 2) as f64 + 2.0
}

fn exponent_warning(p: f64, d: u32) -> Vec<String> {
    let lo = min_exponent(d);
    if p < lo {
        vec![format!("p = {p} is below 2[d/2]+2 = {lo}; the planar bound is not asserted")]
    } else {
        Vec::new()
    }
}

fn planar_term(r: &EigRecord, cfg: &MagneticConfig, p: f64, tail: bool) -> f64 {
    let de = dist_to_levels(cfg, r.value);
    let den = if tail { r.value.norm().powf(2.0 * p) } else { (1.0 + r.value.norm()).powf(2.0 * p) };
    r.multiplicity as f64 * (de.powf(p) / den)
}

fn spatial_term(r: &EigRecord, cfg: &MagneticConfig, p: f64, eps: f64, gamma: f64, tail: bool) -> f64 {
    let di = dist_to_essential(cfg, r.value);
    let de = dist_to_levels(cfg, r.value);
    let e_exp = (p / 4.0 - 1.0 + eps).max(0.0);
    let den = if tail { r.value.norm().powf(gamma) } else { (1.0 + r.value.norm()).powf(gamma) };
    let de_pow = if e_exp == 0.0 { 1.0 } else { de.powf(e_exp) };
    r.multiplicity as f64 * (di.powf(p / 2.0 + 1.0 + eps) * de_pow / den)
}

fn check_spatial(cfg: &MagneticConfig, eps: f64, gamma: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must lie in (0, 1)")));
    }
    let bound = cfg.d() as f64 + 1.5;
    if !(gamma > bound) {
        return Err(Error::GammaTooSmall { gamma, bound });
    }
    Ok(())
}

/// Planar functional over the converged records, weighted by multiplicity.
pub fn lt_sum_2d(records: &[EigRecord], cfg: &MagneticConfig, p: f64) -> LtReport {
    let terms = records
        .iter()
        .filter(|r| r.converged)
        .map(|r| LtTerm { value: r.value, multiplicity: r.multiplicity, term: planar_term(r, cfg, p, false) })
        .collect();
    LtReport::new(Functional::Planar, LtParams { p, ..Default::default() }, terms, exponent_warning(p, cfg.d()))
}

/// Spatial functional over a supplied eigenvalue list.
pub fn lt_sum_3d(records: &[EigRecord], cfg: &MagneticConfig, p: f64, eps: f64, gamma: f64) -> Result<LtReport> {
    check_spatial(cfg, eps, gamma)?;
    let terms = records
        .iter()
        .filter(|r| r.converged)
        .map(|r| LtTerm { value: r.value, multiplicity: r.multiplicity, term: spatial_term(r, cfg, p, eps, gamma, false) })
        .collect();
    let params = LtParams { p, eps: Some(eps), gamma: Some(gamma), tau: None };
    Ok(LtReport::new(Functional::Spatial, params, terms, exponent_warning(p, cfg.d())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailVariant {
    Planar,
    Spatial { eps: f64, gamma: f64 },
}

/// Tail functional over `|λ| ≥ τ` (inclusive).
pub fn tail_sum(records: &[EigRecord], cfg: &MagneticConfig, p: f64, tau: f64, variant: TailVariant) -> Result<LtReport> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be > 0")));
    }
    if let TailVariant::Spatial { eps, gamma } = variant {
        check_spatial(cfg, eps, gamma)?;
    }
    let terms = records
        .iter()
        .filter(|r| r.converged && r.value.norm() >= tau)
        .map(|r| {
            let term = match variant {
                TailVariant::Planar => planar_term(r, cfg, p, true),
                TailVariant::Spatial { eps, gamma } => spatial_term(r, cfg, p, eps, gamma, true),
            };
            LtTerm { value: r.value, multiplicity: r.multiplicity, term }
        })
        .collect();
    let (functional, params) = match variant {
        TailVariant::Planar => (Functional::PlanarTail, LtParams { p, tau: Some(tau), ..Default::default() }),
        TailVariant::Spatial { eps, gamma } => {
            (Functional::SpatialTail, LtParams { p, eps: Some(eps), gamma: Some(gamma), tau: Some(tau) })
        }
    };
    Ok(LtReport::new(functional, params, terms, exponent_warning(p, cfg.d())))
}

/// `(1 + 1/τ)^e`, the factor relating the tail and full functionals.
pub fn tail_factor(tau: f64, exponent: f64) -> f64 {
    (1.0 + 1.0 / tau).powf(exponent)
}

/// `K, K₁, K₂, K₃` from `‖F‖_{L^p}^p`, `‖G‖_{L²}`, `‖G‖_{L^∞}` and `‖V‖∞`.
pub fn lt_constants(f_norm_pp: f64, g_l2: f64, g_linf: f64, v_inf: f64, p: f64, d: u32, eps: f64) -> Result<LtConstants> {
    if [f_norm_pp, g_l2, g_linf, v_inf].iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::InvalidParameter("norms must be >= 0".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps} must lie in (0, 1)")));
    }
    let d = d as f64;
    let k1 = f_norm_pp * (g_l2 + g_linf).powf(p);
    let k2 = f_norm_pp * g_linf.powf(p);
    let k3 = k1 * (1.0 + v_inf).powf(d + 0.5);
    let k = k1 * (1.0 + v_inf).powf(d + p / 2.0 + 1.5 + eps);
    Ok(LtConstants { k, k1, k2, k3 })
}

/// `dist(x, S)` for a finite real set `S`.
fn dist_to_real_set(z: Complex64, set: &[f64]) -> f64 {
    set.iter().map(|&s| (z - s).norm()).fold(f64::INFINITY, f64::min)
}

/// `(Σ_{λ∈σ(A)} dist(λ, σ(A₀))^p, ‖A − A₀‖_p^p, ratio)` for `A₀ = diag(a0)`.
pub fn hansmann_check(a0: &[f64], a: &CMatrix, p: f64) -> Result<(f64, f64, f64)> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be > 1")));
    }
    let n = a0.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::InvalidParameter("dimension mismatch between A and A0".into()));
    }
    let mut diff = a.clone();
    for (i, &x) in a0.iter().enumerate() {
        diff[(i, i)] -= x;
    }
    let lhs: f64 = eigenvalues(a)?.iter().map(|&l| dist_to_real_set(l, a0).powf(p)).collect::<CompensatedSum>().value();
    let rhs = singular_values(&diff)?.schatten_pow(p);
    let ratio = if lhs == 0.0 && rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok((lhs, rhs, ratio))
}

/// Each link of the chain `‖A−A₀‖_p^p ≲ ‖F‖_p^p`, mapped sum `≲ ‖A−A₀‖_p^p`,
/// planar functional `≲ ‖F‖_p^p (1+V∞)^{2p}`, with LHS/RHS-core ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    pub mu: f64,
    pub diff_norm_pp: f64,
    pub f_norm_pp: f64,
    pub mapped_sum: f64,
    pub planar: LtReport,
    pub diff_ratio: f64,
    pub mapped_ratio: f64,
    pub planar_ratio: f64,
}

fn safe_ratio(a: f64, b: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// The chain for the truncated operator `v` and its converged records.
pub fn mapped_chain_check(
    v: &TruncatedOperator,
    records: &[EigRecord],
    f_norm_pp: f64,
    v_inf: f64,
    p: f64,
) -> Result<ChainReport> {
    mapped_chain_check_at(v, records, f_norm_pp, v_inf, v_inf, p)
}

/// As [`mapped_chain_check`] with `μ` taken from a sup-norm bound `mu_norm ≥ ‖V‖∞`,
/// so a scaled family can share one Möbius map.
pub fn mapped_chain_check_at(
    v: &TruncatedOperator,
    records: &[EigRecord],
    f_norm_pp: f64,
    v_inf: f64,
    mu_norm: f64,
    p: f64,
) -> Result<ChainReport> {
    if v.cfg.d() != 1 {
        return Err(Error::UnsupportedDimension(v.cfg.d()));
    }
    if !(mu_norm >= v_inf) {
        return Err(Error::InvalidParameter(format!("bound {mu_norm} is below the sup norm {v_inf}")));
    }
    let mu = mu_of_potential(mu_norm)?;
    let diff = resolvent_difference(v, Complex64::new(mu, 0.0))?;
    let diff_norm_pp = singular_values(&diff.matrix)?.schatten_pow(p);
    let images = MobiusData::new(v.cfg, mu_norm)?;
    let mut mapped = CompensatedSum::new();
    for r in records.iter().filter(|r| r.converged) {
        let z = mobius_map(r.value, mu)?;
        mapped.add(r.multiplicity as f64 * images.dist_to_level_images(z).powf(p));
    }
    let mapped_sum = mapped.value();
    let mut planar = lt_sum_2d(records, &v.cfg, p);
    planar.f_norm_pp = Some(f_norm_pp);
    planar.v_inf = Some(v_inf);
    let planar_ratio = safe_ratio(planar.total, f_norm_pp * (1.0 + v_inf).powf(2.0 * p));
    Ok(ChainReport {
        mu,
        diff_norm_pp,
        f_norm_pp,
        mapped_sum,
        diff_ratio: safe_ratio(diff_norm_pp, f_norm_pp),
        mapped_ratio: safe_ratio(mapped_sum, diff_norm_pp),
        planar_ratio,
        planar,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("need two positive points for a slope".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
