//! Discrete spectrum of the truncated operator: Galerkin eigenvalues, the
//! nested-cutoff convergence filter, the determinant cross-check and
//! classification against the Landau levels.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{hamiltonian_matrix, level_diagonal, potential_matrix, TruncatedOperator};
use crate::error::{Error, Result};
use crate::holo::{locate_zeros, ComplexRectangle, LogHolo, ZeroOptions, ZeroRecord};
use crate::landau::{dist_to_essential, dist_to_levels, landau_level, nearest_level, BasisSpec, MagneticConfig};
use crate::linalg::{block_components, eigenvalues_blocked, submatrix, CMatrix};
use crate::potential::Potential;
use crate::schatten::{regularized_det_of_blocks, LogValue};
use crate::sum::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Galerkin,
    Determinant,
    Both,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Galerkin => "galerkin",
            Method::Determinant => "determinant",
            Method::Both => "both",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "galerkin" => Ok(Method::Galerkin),
            "determinant" => Ok(Method::Determinant),
            "both" => Ok(Method::Both),
            _ => Err(Error::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }
}

/// One eigenvalue cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigRecord {
    pub value: Complex64,
    pub multiplicity: u32,
    pub dist_e: f64,
    pub dist_ess: f64,
    pub nearest_level: usize,
    pub converged: bool,
    pub method: Method,
    /// Set by [`classify`] when a converged value leaves the numerical-range strip.
    pub anomaly: bool,
}

impl EigRecord {
    pub fn new(value: Complex64, multiplicity: u32, cfg: &MagneticConfig) -> Self {
        Self {
            value,
            multiplicity,
            dist_e: dist_to_levels(cfg, value),
            dist_ess: dist_to_essential(cfg, value),
            nearest_level: nearest_level(cfg, value),
            converged: true,
            method: Method::Galerkin,
            anomaly: false,
        }
    }
}

/// Single-linkage clusters of `values` at absolute gap `tol`, as (mean, size),
/// sorted by (re, im).
pub fn cluster(values: &[Complex64], tol: f64) -> Vec<(Complex64, u32)> {
    let mut v: Vec<Complex64> = values.to_vec();
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let n = v.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in i + 1..n {
            if v[j].re - v[i].re > tol {
                break;
            }
            if (v[j] - v[i]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, (Complex64, u32)> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        let e = groups.entry(r).or_insert((Complex64::new(0.0, 0.0), 0));
        e.0 += v[i];
        e.1 += 1;
    }
    let mut out: Vec<(Complex64, u32)> = groups.into_values().map(|(s, k)| (s / k as f64, k)).collect();
    out.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    out
}

/// Relative clustering gap for multiplicities.
pub const CLUSTER_REL_TOL: f64 = 1e-8;

/// All eigenvalues of the truncated Hamiltonian `h`, clustered at `1e-8·‖h‖`.
pub fn galerkin_eigs(h: &TruncatedOperator) -> Result<Vec<EigRecord>> {
    let ev = eigenvalues_blocked(&h.matrix)?;
    let tol = CLUSTER_REL_TOL * h.op_norm().max(1.0);
    Ok(cluster(&ev, tol).into_iter().map(|(z, k)| EigRecord::new(z, k, &h.cfg)).collect())
}

/// Default convergence tolerance, relative to `1 + |λ|`.
pub const TOL_CONV: f64 = 1e-6;

/// Flag each record of `coarse` by whether some record of `fine` (the larger
/// cutoff) lies within `tol·(1+|λ|)`.
pub fn converged_filter(coarse: &[EigRecord], fine: &[EigRecord], tol: f64) -> Vec<EigRecord> {
    coarse
        .iter()
        .map(|r| {
            let lim = tol * (1.0 + r.value.norm());
            let hit = fine.iter().any(|f| (f.value - r.value).norm() < lim);
            EigRecord { converged: r.converged && hit, ..*r }
        })
        .collect()
}

/// Truncated Hamiltonian of `v` at both cutoffs, with the filter applied.
pub fn spectrum_with_filter(
    v: &Potential,
    basis: &BasisSpec,
    enlarged: &BasisSpec,
    cfg: &MagneticConfig,
    tol: f64,
) -> Result<Vec<EigRecord>> {
    if !basis.nested_in(enlarged) {
        return Err(Error::InvalidParameter(format!("cutoff {basis:?} not nested in {enlarged:?}")));
    }
    let small = galerkin_eigs(&hamiltonian_matrix(&potential_matrix(v, basis, cfg)?))?;
    let large = galerkin_eigs(&hamiltonian_matrix(&potential_matrix(v, enlarged, cfg)?))?;
    Ok(converged_filter(&small, &large, tol))
}

/// Default strip tolerance.
pub const STRIP_TOL: f64 = 1e-8;

/// Refresh distances and flag converged values outside
/// `{Re λ ≥ −V∞ − s, |Im λ| ≤ V∞ + s}`, `s = 1e-8 + slack`.
pub fn classify(records: &[EigRecord], cfg: &MagneticConfig, v_inf: f64, slack: f64) -> Vec<EigRecord> {
    let s = STRIP_TOL + slack;
    records
        .iter()
        .map(|r| {
            let z = r.value;
            let outside = z.re < -v_inf - s || z.im.abs() > v_inf + s;
            EigRecord {
                dist_e: dist_to_levels(cfg, z),
                dist_ess: dist_to_essential(cfg, z),
                nearest_level: nearest_level(cfg, z),
                anomaly: r.converged && outside,
                ..*r
            }
        })
        .collect()
}

/// Scan rectangles around the levels `j_range`: real extent
/// `[Λ_j − b + δ, Λ_j + b − δ]`, imaginary extent `[η, height]`, plus mirror
/// images in the lower half plane.
pub fn pi_rectangles(
    cfg: &MagneticConfig,
    j_range: std::ops::RangeInclusive<usize>,
    delta: f64,
    eta: f64,
    height: f64,
    mirror: bool,
) -> Result<Vec<ComplexRectangle>> {
    if !(delta > 0.0 && delta < cfg.b()) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, b)")));
    }
    if !(eta > 0.0 && eta < height) {
        return Err(Error::InvalidParameter(format!("need 0 < eta = {eta} < height = {height}")));
    }
    let mut out = Vec::new();
    for j in j_range {
        let c = landau_level(cfg, j);
        let r = ComplexRectangle::new(c - cfg.b() + delta, c + cfg.b() - delta, eta, height)?;
        out.push(r);
        if mirror {
            out.push(r.conj());
        }
    }
    Ok(out)
}

/// Growth factor for the bottom offset when a zero sits on a scan boundary.
pub const ETA_RETRY_FACTOR: f64 = 1.37;
const MAX_RETRIES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct RectScan {
    /// Rectangle actually scanned (after any offset retries).
    pub rect: ComplexRectangle,
    pub zeros: Vec<ZeroRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub scans: Vec<RectScan>,
    /// Galerkin records inside a scanned rectangle, marked `Both` when matched.
    pub records: Vec<EigRecord>,
    /// Pairs (record index, rectangle index, zero index).
    pub matched: Vec<(usize, usize, usize)>,
    pub unmatched_galerkin: Vec<usize>,
    /// Zeros whose assigned Galerkin multiplicity differs from their own.
    pub unmatched_zeros: Vec<(usize, usize)>,
    pub max_distance: f64,
}

impl CrossCheck {
    pub fn agrees(&self) -> bool {
        self.unmatched_galerkin.is_empty() && self.unmatched_zeros.is_empty()
    }
}

/// `λ ↦ det_q(I + T(λ)) · Π_j (Λ_j − λ)^{n_j}` on the block structure of `v`,
/// where `n_j` counts the basis vectors of level `j`.
///
/// The level factor cancels the poles of the determinant and has no zeros off
/// the real axis, so in any rectangle avoiding the axis the zero set and the
/// winding numbers are those of `det_q(I + T(λ))` itself. Its logarithm is
/// holomorphic there and is carried as smooth phase.
pub fn determinant_function(v: &TruncatedOperator, q: u32) -> impl Fn(Complex64) -> Result<LogValue> + Sync + '_ {
    // T(λ) = V R₀(λ) keeps the block structure of V: only the blocks are scaled
    let diag = level_diagonal(&v.basis, &v.cfg);
    let blocks: Vec<(Vec<usize>, CMatrix)> =
        block_components(&v.matrix).into_iter().map(|b| { let m = submatrix(&v.matrix, &b); (b, m) }).collect();
    let finite = v.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    let levels: Vec<(f64, f64)> =
        (0..=v.basis.j_max).map(|j| (landau_level(&v.cfg, j), (v.basis.m_max + 1) as f64)).collect();
    move |z| {
        if dist_to_levels(&v.cfg, z) == 0.0 {
            return Err(Error::Pole(z));
        }
        if !finite {
            return Err(Error::NonFinite);
        }
        let scaled: Vec<CMatrix> = blocks
            .iter()
            .map(|(idx, vb)| {
                let mut t = vb.clone();
                for (c, &i) in idx.iter().enumerate() {
                    let mut col = t.column_mut(c);
                    col *= (Complex64::new(diag[i], 0.0) - z).inv();
                }
                t
            })
            .collect();
        let d = regularized_det_of_blocks(&scaled, q)?;
        if d.is_zero() || z.im == 0.0 {
            return Ok(d);
        }
        let mut ln_abs = CompensatedSum::new();
        let mut arg = CompensatedSum::new();
        for &(l, n) in &levels {
            let w = Complex64::new(l, 0.0) - z;
            ln_abs.add(n * w.norm().ln());
            arg.add(n * w.arg());
        }
        Ok(LogValue {
            ln_abs: d.ln_abs + ln_abs.value(),
            phase: d.phase,
            smooth_phase: d.smooth_phase + arg.value(),
            smooth_ln_abs: d.smooth_ln_abs + ln_abs.value(),
        })
    }
}

fn shift_bottom(r: &ComplexRectangle, factor: f64) -> Result<ComplexRectangle> {
    if r.im_min > 0.0 {
        ComplexRectangle::new(r.re_min, r.re_max, r.im_min * factor, r.im_max)
    } else if r.im_max < 0.0 {
        ComplexRectangle::new(r.re_min, r.re_max, r.im_min, r.im_max * factor)
    } else {
        Err(Error::InvalidParameter("scan rectangle straddles the real axis".into()))
    }
}

fn scan_one<F: Fn(Complex64) -> Result<LogValue> + Sync>(
    f: &F,
    rect: &ComplexRectangle,
    opts: &ZeroOptions,
) -> Result<RectScan> {
    if rect.im_min <= 0.0 && rect.im_max >= 0.0 {
        return Err(Error::InvalidParameter("scan rectangle meets the real axis".into()));
    }
    let holo = LogHolo(f);
    let mut r = *rect;
    let mut last = None;
    for _ in 0..=MAX_RETRIES {
        match locate_zeros(&holo, &r, opts) {
            Ok(zeros) => return Ok(RectScan { rect: r, zeros }),
            Err(e @ (Error::ZeroOnBoundary(_) | Error::NonIntegerWinding(_) | Error::MaxDepth(_))) => {
                last = Some(e);
                r = shift_bottom(&r, ETA_RETRY_FACTOR)?;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Locate the determinant zeros in each rectangle and match them against `records`
/// (the Galerkin spectrum of the same truncation) within `match_tol`.
pub fn det_crosscheck(
    v: &TruncatedOperator,
    rects: &[ComplexRectangle],
    q: u32,
    records: &[EigRecord],
    match_tol: f64,
    opts: &ZeroOptions,
) -> Result<CrossCheck> {
    let f = determinant_function(v, q);
    let scans: Vec<Result<RectScan>> = rects.par_iter().map(|r| scan_one(&f, r, opts)).collect();
    let scans: Vec<RectScan> = scans.into_iter().collect::<Result<_>>()?;

    let mut out_records = Vec::new();
    let mut matched = Vec::new();
    let mut unmatched_galerkin = Vec::new();
    let mut assigned: Vec<Vec<u32>> = scans.iter().map(|s| vec![0; s.zeros.len()]).collect();
    let mut max_distance: f64 = 0.0;
    for r in records {
        let Some(ri) = scans.iter().position(|s| s.rect.contains(r.value)) else {
            continue;
        };
        let idx = out_records.len();
        let nearest = scans[ri]
            .zeros
            .iter()
            .enumerate()
            .map(|(k, z)| (k, (z.location - r.value).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((k, d)) if d <= match_tol => {
                assigned[ri][k] += r.multiplicity;
                matched.push((idx, ri, k));
                max_distance = max_distance.max(d);
                out_records.push(EigRecord { method: Method::Both, ..*r });
            }
            _ => {
                unmatched_galerkin.push(idx);
                out_records.push(*r);
            }
        }
    }
    let mut unmatched_zeros = Vec::new();
    for (ri, s) in scans.iter().enumerate() {
        for (k, z) in s.zeros.iter().enumerate() {
            if assigned[ri][k] != z.multiplicity {
                unmatched_zeros.push((ri, k));
            }
        }
    }
    Ok(CrossCheck { scans, records: out_records, matched, unmatched_galerkin, unmatched_zeros, max_distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{free_matrix, synthetic_diagonal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unit() -> MagneticConfig {
        MagneticConfig::new(1.0, 1).unwrap()
    }

    #[test]
    fn free_spectrum() {
        let basis = BasisSpec::new(2, 4);
        let recs = galerkin_eigs(&free_matrix(&basis, &unit())).unwrap();
        assert_eq!(recs.len(), 3);
        for (k, r) in recs.iter().enumerate() {
            assert_eq!(r.value, c(1.0 + 2.0 * k as f64, 0.0));
            assert_eq!(r.multiplicity, 5);
            assert_eq!(r.dist_e, 0.0);
        }
    }

    #[test]
    fn synthetic_shift() {
        let basis = BasisSpec::new(2, 4);
        let v = synthetic_diagonal(&[((0, 0), c(0.3, 0.2))], &basis, &unit()).unwrap();
        let recs = galerkin_eigs(&hamiltonian_matrix(&v)).unwrap();
        let shifted: Vec<_> = recs.iter().filter(|r| r.value.im != 0.0).collect();
        assert_eq!(shifted.len(), 1);
        assert_eq!(shifted[0].value, c(1.3, 0.2));
        assert_eq!(recs.iter().map(|r| r.multiplicity).sum::<u32>(), 15);
        assert_eq!(recs[0].value, c(1.0, 0.0));
        assert_eq!(recs[0].multiplicity, 4);
    }

    #[test]
    fn constant_potential_shifts_all_levels() {
        let basis = BasisSpec::new(3, 5);
        let k = c(0.25, -0.4);
        let v = potential_matrix(&Potential::constant(k), &basis, &unit()).unwrap();
        let recs = galerkin_eigs(&hamiltonian_matrix(&v)).unwrap();
        assert_eq!(recs.len(), 4);
        for (j, r) in recs.iter().enumerate() {
            assert!((r.value - (landau_level(&unit(), j) + k)).norm() < 1e-14);
            assert_eq!(r.multiplicity, 6);
        }
    }

    #[test]
    fn determinant_blocks_match_full_matrix() {
        use crate::assembly::birman_schwinger;
        use crate::schatten::regularized_det_lu;
        let basis = BasisSpec::new(3, 5);
        let v = potential_matrix(&Potential::gaussian(c(0.1, 0.3), 1.0).unwrap(), &basis, &unit()).unwrap();
        let f = determinant_function(&v, 4);
        for z in [c(1.2, 0.3), c(4.1, -0.2), c(-0.5, 0.05)] {
            let a = f(z).unwrap().reduced();
            let full = regularized_det_lu(&birman_schwinger(&v, z).unwrap().matrix, 4).unwrap();
            let b = LogValue { ln_abs: full.ln_abs - full.smooth_ln_abs, phase: full.phase, smooth_phase: 0.0, smooth_ln_abs: 0.0 };
            assert!((a.ln_abs - b.ln_abs).abs() < 1e-10, "{z}");
            assert!(crate::linalg::wrap_phase(a.phase - b.phase).abs() < 1e-10, "{z}");
        }
        assert!(matches!(f(c(3.0, 0.0)), Err(Error::Pole(_))));
    }

    #[test]
    fn cluster_is_single_linkage() {
        let v = [c(0.0, 0.0), c(0.6e-8, 0.0), c(1.2e-8, 0.0), c(1.0, 0.0)];
        let g = cluster(&v, 1e-8);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0].1, 3);
        assert!(cluster(&[], 1.0).is_empty());
    }

    #[test]
    fn filter_examples() {
        assert!(converged_filter(&[], &[], TOL_CONV).is_empty());
        let cfg = unit();
        let small = galerkin_eigs(&free_matrix(&BasisSpec::new(2, 3), &cfg)).unwrap();
        let large = galerkin_eigs(&free_matrix(&BasisSpec::new(3, 5), &cfg)).unwrap();
        assert!(converged_filter(&small, &large, TOL_CONV).iter().all(|r| r.converged));
        let moved = [EigRecord::new(c(1.0, 1e-3), 1, &cfg)];
        assert!(!converged_filter(&moved, &large, TOL_CONV)[0].converged);
    }

    #[test]
    fn classify_examples() {
        let cfg = unit();
        let r = classify(&[EigRecord::new(c(1.3, 0.2), 1, &cfg)], &cfg, 0.5, 0.0)[0];
        assert!((r.dist_e - 0.13f64.sqrt()).abs() < 1e-15);
        assert!((r.dist_ess - 0.2).abs() < 1e-15);
        assert_eq!(r.nearest_level, 0);
        assert!(!r.anomaly);
        let bad = classify(&[EigRecord::new(c(2.0, -1.0), 1, &cfg)], &cfg, 0.5, 0.0)[0];
        assert!(bad.anomaly);
        let unconverged = EigRecord { converged: false, ..EigRecord::new(c(2.0, -1.0), 1, &cfg) };
        assert!(!classify(&[unconverged], &cfg, 0.5, 0.0)[0].anomaly);
    }

    #[test]
    fn pi_pattern() {
        let r = pi_rectangles(&unit(), 0..=1, 0.5, 1e-3, 1.0, true).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!((r[0].re_min, r[0].re_max), (0.5, 1.5));
        assert_eq!((r[1].im_min, r[1].im_max), (-1.0, -1e-3));
        assert_eq!(r[2].center().re, 3.0);
        assert!(pi_rectangles(&unit(), 0..=1, 1.0, 1e-3, 1.0, true).is_err());
    }

    #[test]
    fn synthetic_crosscheck() {
        let cfg = unit();
        let basis = BasisSpec::new(2, 4);
        let v = synthetic_diagonal(&[((0, 0), c(0.3, 0.2)), ((1, 2), c(-0.2, -0.1))], &basis, &cfg).unwrap();
        let recs = galerkin_eigs(&hamiltonian_matrix(&v)).unwrap();
        let rects = pi_rectangles(&cfg, 0..=2, 0.5, 1e-3, 0.5, true).unwrap();
        let cc = det_crosscheck(&v, &rects, 4, &recs, 1e-6, &ZeroOptions::default()).unwrap();
        assert!(cc.agrees(), "{cc:?}");
        assert_eq!(cc.matched.len(), 2);
        assert!(cc.max_distance < 1e-9);
        let zeros: Vec<Complex64> = cc.scans.iter().flat_map(|s| s.zeros.iter().map(|z| z.location)).collect();
        assert!(zeros.iter().any(|z| (z - c(1.3, 0.2)).norm() < 1e-9));
        assert!(zeros.iter().any(|z| (z - c(2.8, -0.1)).norm() < 1e-9));
    }

    #[test]
    fn free_determinant_has_no_zeros() {
        let cfg = unit();
        let basis = BasisSpec::new(2, 3);
        let v = potential_matrix(&Potential::zero(), &basis, &cfg).unwrap();
        let rects = pi_rectangles(&cfg, 0..=2, 0.5, 1e-3, 0.5, true).unwrap();
        let cc = det_crosscheck(&v, &rects, 4, &[], 1e-6, &ZeroOptions::default()).unwrap();
        assert!(cc.scans.iter().all(|s| s.zeros.is_empty()));
        assert!(cc.agrees());
    }

    #[test]
    fn gaussian_crosscheck_small() {
        let cfg = unit();
        let basis = BasisSpec::new(3, 8);
        let pot = Potential::gaussian(c(0.0, 0.2), 1.0).unwrap();
        let v = potential_matrix(&pot, &basis, &cfg).unwrap();
        let recs = galerkin_eigs(&hamiltonian_matrix(&v)).unwrap();
        let rects = pi_rectangles(&cfg, 0..=3, 0.5, 1e-3, 0.5, true).unwrap();
        let cc = det_crosscheck(&v, &rects, 4, &recs, 1e-6, &ZeroOptions::default()).unwrap();
        assert!(cc.agrees(), "{cc:?}");
        assert!(!cc.matched.is_empty());
        for r in classify(&recs, &cfg, pot.sup_norm(), 0.0) {
            assert!(!r.anomaly, "{r:?}");
        }
    }

    #[test]
    fn self_adjoint_spectrum_is_real() {
        let cfg = unit();
        let pot = Potential::gaussian(c(0.7, 0.0), 1.3).unwrap();
        let recs = spectrum_with_filter(&pot, &BasisSpec::new(4, 8), &BasisSpec::new(5, 10), &cfg, TOL_CONV).unwrap();
        for r in recs.iter().filter(|r| r.converged) {
            assert!(r.value.im.abs() < 1e-10, "{r:?}");
        }
    }

    #[test]
    fn method_roundtrip() {
        for m in [Method::Galerkin, Method::Determinant, Method::Both] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("x".parse::<Method>().is_err());
    }
}
