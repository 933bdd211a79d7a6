//! Stage orchestration and artifacts: CSV tables and SVG scatter plots.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::assembly::{hamiltonian_matrix, potential_matrix, synthetic_diagonal, TruncatedOperator};
use crate::config::{FunctionalChoice, Plan, RunConfig, Source, Stage};
use crate::conformal::{comparability_probe, halton_disk, region_split_check, sc_solve, Region};
use crate::error::{Error, Result};
use crate::holo::{bgk_sum, blaschke_k0, ComplexRectangle, ZeroOptions, ZeroRecord};
use crate::landau::{landau_level, BasisSpec, MagneticConfig};
use crate::lt::{lt_sum_2d, lt_sum_3d, tail_sum, LtReport, LtTerm, TailVariant};
use crate::spectrum::{classify, converged_filter, det_crosscheck, galerkin_eigs, EigRecord, Method, TOL_CONV};
use crate::sum::CompensatedSum;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Header comment carried by every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
}

impl Provenance {
    pub fn of(config: &RunConfig) -> Self {
        Self { config_sha256: config.sha256() }
    }

    fn line(&self) -> String {
        format!("landau-lt {TOOL_VERSION}; config sha256 {}", self.config_sha256)
    }
}

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub const EIGEN_COLUMNS: [&str; 8] = ["re", "im", "multiplicity", "nearest_level", "dist_E", "dist_ess", "converged", "method"];

fn writer(path: &Path, prov: &Provenance) -> Result<csv::Writer<fs::File>> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# {}", prov.line())?;
    Ok(csv::WriterBuilder::new().from_writer(f))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize, what: &str) -> Result<T> {
    rec.get(k)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Io(format!("bad {what} field in CSV row {:?}", rec.position().map(|p| p.line()))))
}

/// Eigenvalue table; header-only for an empty list.
pub fn emit_csv(records: &[EigRecord], path: &Path, prov: &Provenance) -> Result<()> {
    let mut w = writer(path, prov)?;
    w.write_record(EIGEN_COLUMNS)?;
    for r in records {
        w.write_record([
            fmt_f64(r.value.re),
            fmt_f64(r.value.im),
            r.multiplicity.to_string(),
            r.nearest_level.to_string(),
            fmt_f64(r.dist_e),
            fmt_f64(r.dist_ess),
            r.converged.to_string(),
            r.method.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<EigRecord>> {
    let mut rd = reader(path)?;
    if rd.headers()?.iter().ne(EIGEN_COLUMNS) {
        return Err(Error::Io(format!("{}: unexpected eigenvalue columns", path.display())));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        out.push(EigRecord {
            value: Complex64::new(field(&rec, 0, "re")?, field(&rec, 1, "im")?),
            multiplicity: field(&rec, 2, "multiplicity")?,
            nearest_level: field(&rec, 3, "nearest_level")?,
            dist_e: field(&rec, 4, "dist_E")?,
            dist_ess: field(&rec, 5, "dist_ess")?,
            converged: field(&rec, 6, "converged")?,
            method: field::<Method>(&rec, 7, "method")?,
            anomaly: false,
        });
    }
    Ok(out)
}

pub const LT_COLUMNS: [&str; 5] = ["row", "re", "im", "multiplicity", "term"];

/// One row per term, then `TOTAL` with the compensated sum in `term`.
pub fn emit_lt_csv(report: &LtReport, path: &Path, prov: &Provenance) -> Result<()> {
    let mut w = writer(path, prov)?;
    w.write_record(LT_COLUMNS)?;
    for (k, t) in report.terms.iter().enumerate() {
        w.write_record([k.to_string(), fmt_f64(t.value.re), fmt_f64(t.value.im), t.multiplicity.to_string(), fmt_f64(t.term)])?;
    }
    let count: u32 = report.terms.iter().map(|t| t.multiplicity).sum();
    w.write_record(["TOTAL".to_string(), String::new(), String::new(), count.to_string(), fmt_f64(report.total)])?;
    w.flush()?;
    Ok(())
}

/// Terms and the `TOTAL` value of an LT table.
pub fn read_lt_csv(path: &Path) -> Result<(Vec<LtTerm>, f64)> {
    let mut rd = reader(path)?;
    if rd.headers()?.iter().ne(LT_COLUMNS) {
        return Err(Error::Io(format!("{}: unexpected LT columns", path.display())));
    }
    let mut terms = Vec::new();
    let mut total = None;
    for rec in rd.records() {
        let rec = rec?;
        if rec.get(0) == Some("TOTAL") {
            total = Some(field(&rec, 4, "term")?);
            continue;
        }
        terms.push(LtTerm {
            value: Complex64::new(field(&rec, 1, "re")?, field(&rec, 2, "im")?),
            multiplicity: field(&rec, 3, "multiplicity")?,
            term: field(&rec, 4, "term")?,
        });
    }
    let total = total.ok_or_else(|| Error::Io(format!("{}: no TOTAL row", path.display())))?;
    Ok((terms, total))
}

/// Generic numeric table with the provenance header.
fn emit_table(path: &Path, prov: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path, prov)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// What to draw besides the eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgScene<'a> {
    pub cfg: &'a MagneticConfig,
    /// Levels `0..=j_max` get markers.
    pub j_max: usize,
    /// Half-width of the numerical-range strip.
    pub v_inf: f64,
    pub rects: &'a [ComplexRectangle],
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Standalone SVG: level markers, strip shading, rectangles, eigenvalue scatter.
pub fn render_svg(records: &[EigRecord], scene: &SvgScene, prov: &Provenance) -> String {
    let (w, h, pad) = (800.0, 500.0, 40.0);
    let top = landau_level(scene.cfg, scene.j_max);
    let mut x0 = -scene.v_inf - 1.0;
    let mut x1 = top + scene.cfg.b();
    let mut y1 = scene.v_inf + 1.0;
    for r in scene.rects {
        x0 = x0.min(r.re_min);
        x1 = x1.max(r.re_max);
        y1 = y1.max(r.im_max.abs()).max(r.im_min.abs());
    }
    for r in records {
        x0 = x0.min(r.value.re);
        x1 = x1.max(r.value.re);
        y1 = y1.max(r.value.im.abs());
    }
    let y0 = -y1;
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<!-- {} -->", xml_escape(&prov.line()).replace("--", "- -"));
    let _ = writeln!(s, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">");
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    // strip {Re λ ≥ −V∞, |Im λ| ≤ V∞}
    let (ax, ay) = (sx(-scene.v_inf), sy(scene.v_inf));
    let _ = writeln!(
        s,
        "<rect class=\"strip\" x=\"{ax:.3}\" y=\"{ay:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"#dde8f5\"/>",
        sx(x1) - ax,
        (sy(-scene.v_inf) - ay).max(0.5)
    );
    let _ = writeln!(s, "<line x1=\"{pad}\" y1=\"{:.3}\" x2=\"{}\" y2=\"{:.3}\" stroke=\"#888\" stroke-width=\"0.5\"/>", sy(0.0), w - pad, sy(0.0));
    for j in 0..=scene.j_max {
        let x = sx(landau_level(scene.cfg, j));
        let _ = writeln!(
            s,
            "<line class=\"level\" data-re=\"{}\" x1=\"{x:.3}\" y1=\"{pad}\" x2=\"{x:.3}\" y2=\"{}\" stroke=\"#c33\" stroke-width=\"0.8\" stroke-dasharray=\"4 3\"/>",
            landau_level(scene.cfg, j),
            h - pad
        );
    }
    for r in scene.rects {
        let _ = writeln!(
            s,
            "<rect class=\"scan\" x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"none\" stroke=\"#383\" stroke-width=\"0.8\"/>",
            sx(r.re_min),
            sy(r.im_max),
            sx(r.re_max) - sx(r.re_min),
            sy(r.im_min) - sy(r.im_max)
        );
    }
    for r in records {
        let fill = if r.converged { "#124" } else { "none" };
        let _ = writeln!(
            s,
            "<circle class=\"eig\" cx=\"{:.3}\" cy=\"{:.3}\" r=\"2.5\" fill=\"{fill}\" stroke=\"#124\" stroke-width=\"0.7\"/>",
            sx(r.value.re),
            sy(r.value.im)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(records: &[EigRecord], scene: &SvgScene, path: &Path, prov: &Provenance) -> Result<()> {
    fs::write(path, render_svg(records, scene, prov))?;
    Ok(())
}

/// Files written and checks made by [`run`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    /// Failed assertions; a nonempty list means exit status 1.
    pub failures: Vec<String>,
}

fn operator(plan: &Plan, basis: &BasisSpec) -> Result<TruncatedOperator> {
    match &plan.source {
        Source::Field(v) => potential_matrix(v, basis, &plan.cfg),
        Source::Synthetic(entries) => synthetic_diagonal(entries, basis, &plan.cfg),
    }
}

/// Execute the planned stages in dependency order and write their artifacts.
pub fn run(config: &RunConfig, stages: &[Stage]) -> Result<RunSummary> {
    let plan = config.plan(stages)?;
    let prov = Provenance::of(config);
    fs::create_dir_all(&plan.output)?;
    let mut out = RunSummary::default();
    let path = |name: &str| plan.output.join(name);
    let mut records: Vec<EigRecord> = Vec::new();
    let mut vm: Option<TruncatedOperator> = None;

    for stage in &plan.stages {
        match stage {
            Stage::Levels => {
                let rows: Vec<Vec<String>> = (0..=plan.basis.j_max)
                    .map(|j| vec![j.to_string(), fmt_f64(landau_level(&plan.cfg, j)), (plan.basis.m_max + 1).to_string()])
                    .collect();
                let p = path("levels.csv");
                emit_table(&p, &prov, &["j", "level", "multiplicity"], &rows)?;
                out.lines.push(format!("levels: {} levels, multiplicity {} in the basis", rows.len(), plan.basis.m_max + 1));
                out.files.push(p);
            }
            Stage::Spectrum => {
                let small = operator(&plan, &plan.basis)?;
                let coarse = galerkin_eigs(&hamiltonian_matrix(&small))?;
                let fine = galerkin_eigs(&hamiltonian_matrix(&operator(&plan, &plan.enlarged)?))?;
                records = classify(&converged_filter(&coarse, &fine, TOL_CONV), &plan.cfg, plan.v_inf, 0.0);
                vm = Some(small);
                let anomalies = records.iter().filter(|r| r.anomaly).count();
                if anomalies > 0 {
                    out.failures.push(format!("{anomalies} converged eigenvalues outside the numerical-range strip"));
                }
                let conv = records.iter().filter(|r| r.converged).count();
                out.lines.push(format!("spectrum: {} clusters ({conv} converged), N = {}", records.len(), plan.basis.dim()));
            }
            Stage::Detscan => {
                let v = vm.as_ref().expect("spectrum runs first");
                let cc = det_crosscheck(v, &plan.rects, plan.q, &records, plan.match_tol, &ZeroOptions::default())?;
                for r in cc.records.iter().filter(|r| r.method == Method::Both) {
                    if let Some(x) = records.iter_mut().find(|x| x.value == r.value) {
                        x.method = Method::Both;
                    }
                }
                let mut rows = Vec::new();
                for (ri, s) in cc.scans.iter().enumerate() {
                    for (k, z) in s.zeros.iter().enumerate() {
                        rows.push(zero_row(ri, z));
                        if cc.unmatched_zeros.contains(&(ri, k)) && !cc.matched.iter().any(|m| m.1 == ri && m.2 == k) {
                            records.push(EigRecord { method: Method::Determinant, ..EigRecord::new(z.location, z.multiplicity, &plan.cfg) });
                        }
                    }
                }
                let p = path("zeros.csv");
                emit_table(&p, &prov, &["rect", "re", "im", "multiplicity", "residual"], &rows)?;
                out.files.push(p);
                let conv_unmatched = cc.unmatched_galerkin.iter().filter(|&&i| cc.records[i].converged).count();
                if conv_unmatched > 0 || !cc.unmatched_zeros.is_empty() {
                    out.failures.push(format!(
                        "determinant cross-check: {conv_unmatched} converged eigenvalues and {} zeros unmatched",
                        cc.unmatched_zeros.len()
                    ));
                }
                out.lines.push(format!(
                    "detscan: {} rectangles, {} zeros, {} matched, max distance {:.1e}",
                    cc.scans.len(),
                    rows.len(),
                    cc.matched.len(),
                    cc.max_distance
                ));
            }
            Stage::Lt => {
                let l = plan.lt;
                let rep = match l.functional {
                    FunctionalChoice::None => None,
                    FunctionalChoice::Planar => Some(lt_sum_2d(&records, &plan.cfg, l.p)),
                    FunctionalChoice::Spatial => Some(lt_sum_3d(&records, &plan.cfg, l.p, l.eps, l.gamma)?),
                    FunctionalChoice::PlanarTail => Some(tail_sum(&records, &plan.cfg, l.p, l.tau, TailVariant::Planar)?),
                    FunctionalChoice::SpatialTail => {
                        Some(tail_sum(&records, &plan.cfg, l.p, l.tau, TailVariant::Spatial { eps: l.eps, gamma: l.gamma })?)
                    }
                };
                if let Some(rep) = rep {
                    let p = path("lt.csv");
                    emit_lt_csv(&rep, &p, &prov)?;
                    out.files.push(p);
                    out.lines.push(format!("lt ({}): {} terms, total {}", rep.functional.as_str(), rep.terms.len(), fmt_f64(rep.total)));
                    out.lines.extend(rep.warnings.iter().map(|w| format!("lt warning: {w}")));
                }
            }
            Stage::Conformal => conformal_stage(&plan, &prov, &mut out)?,
            Stage::Bgk => bgk_stage(&plan, &prov, &mut out)?,
        }
    }
    if plan.stages.contains(&Stage::Spectrum) {
        // rows are emitted after the cross-check has marked them
        let p = path("eigenvalues.csv");
        emit_csv(&records, &p, &prov)?;
        out.files.push(p);
        let svg = path("spectrum.svg");
        let scene = SvgScene { cfg: &plan.cfg, j_max: plan.basis.j_max, v_inf: plan.v_inf, rects: &plan.rects };
        emit_svg(&records, &scene, &svg, &prov)?;
        out.files.push(svg);
    }
    Ok(out)
}

fn zero_row(rect: usize, z: &ZeroRecord) -> Vec<String> {
    vec![rect.to_string(), fmt_f64(z.location.re), fmt_f64(z.location.im), z.multiplicity.to_string(), fmt_f64(z.residual)]
}

fn conformal_stage(plan: &Plan, prov: &Provenance, out: &mut RunSummary) -> Result<()> {
    let n = plan.probes.distortion_samples;
    if n > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        let top = landau_level(&plan.cfg, plan.basis.j_max) + 10.0 * plan.cfg.b();
        let lo = -plan.v_inf - 10.0;
        let mut rows = Vec::with_capacity(n);
        let (mut violations, mut min_ratio) = (0usize, f64::INFINITY);
        for _ in 0..n {
            let l = Complex64::new(rng.random_range(lo..top), rng.random_range(-10.0..10.0));
            let chk = region_split_check(l, &plan.cfg, plan.v_inf)?;
            let (region, a, b, ok) = match chk.region {
                Region::NearLevels { distortion: (lhs, rhs) } => {
                    if rhs > 0.0 {
                        min_ratio = min_ratio.min(lhs / rhs);
                    }
                    ("A", lhs, rhs, rhs == 0.0 || lhs > 0.0)
                }
                Region::Away { holds } => ("D", chk.dist_i, chk.dist_e, holds),
            };
            violations += usize::from(!ok);
            rows.push(vec![fmt_f64(l.re), fmt_f64(l.im), region.into(), fmt_f64(chk.dist_e), fmt_f64(chk.dist_i), fmt_f64(a), fmt_f64(b), ok.to_string()]);
        }
        let p = plan.output.join("distortion.csv");
        emit_table(&p, prov, &["re", "im", "region", "dist_E", "dist_I", "lhs", "rhs", "holds"], &rows)?;
        out.files.push(p);
        if violations > 0 {
            out.failures.push(format!("distortion probe: {violations} of {n} samples violate their bound"));
        }
        out.lines.push(format!("conformal: {n} distortion samples, {violations} violations, min ratio in A {min_ratio:.4}"));
    }
    if plan.probes.sc_samples > 0 {
        let samples = halton_disk(plan.probes.sc_samples, 0.98);
        let mut rows = Vec::new();
        for (k, r) in plan.rects.iter().enumerate() {
            let map = sc_solve(r)?;
            let cp = comparability_probe(&map, &samples)?;
            rows.push(vec![
                k.to_string(),
                fmt_f64(r.re_min),
                fmt_f64(r.re_max),
                fmt_f64(r.im_min),
                fmt_f64(r.im_max),
                fmt_f64(map.theta),
                fmt_f64(cp.min),
                fmt_f64(cp.max),
                fmt_f64(cp.edge_min),
                fmt_f64(cp.edge_max),
            ]);
        }
        let p = plan.output.join("sc.csv");
        let header = ["rect", "re_min", "re_max", "im_min", "im_max", "theta", "ratio_min", "ratio_max", "edge_min", "edge_max"];
        emit_table(&p, prov, &header, &rows)?;
        out.files.push(p);
        out.lines.push(format!("conformal: {} Schwarz-Christoffel maps", rows.len()));
    }
    Ok(())
}

fn bgk_stage(plan: &Plan, prov: &Provenance, out: &mut RunSummary) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed.wrapping_add(1));
    let zeros: Vec<Complex64> = (0..plan.probes.bgk_zeros)
        .map(|_| Complex64::from_polar(rng.random_range(0.3..0.9), rng.random_range(0.0..2.0 * PI)))
        .collect();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for &tau in &plan.probes.bgk_taus {
        for n in 1..=zeros.len() {
            let s = bgk_sum(&zeros[..n], 0.0, &[], tau)?;
            let k0 = blaschke_k0(&zeros[..n])?;
            worst = worst.max(s / k0);
            rows.push(vec![n.to_string(), fmt_f64(tau), fmt_f64(s), fmt_f64(k0), fmt_f64(s / k0)]);
        }
    }
    let p = plan.output.join("bgk.csv");
    emit_table(&p, prov, &["zeros", "tau", "sum", "k0", "ratio"], &rows)?;
    out.files.push(p);
    out.lines.push(format!("bgk: {} Blaschke products, largest sum/K0 {worst:.4}", rows.len()));
    Ok(())
}

/// Column sum of the `term` entries, for checking a `TOTAL` row.
pub fn resum(terms: &[LtTerm]) -> f64 {
    terms.iter().map(|t| t.term).collect::<CompensatedSum>().value()
}
