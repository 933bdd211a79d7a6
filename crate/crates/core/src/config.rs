//! Run configuration: `key = value` lines under bracketed sections.
//!
//! Every precondition of the numerical modules is checked by [`RunConfig::plan`]
//! before any computation starts, so a bad file fails with [`Error::Config`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::holo::ComplexRectangle;
use crate::landau::{BasisSpec, MagneticConfig};
use crate::lt::min_exponent;
use crate::potential::{AngularProfile, Potential};
use crate::spectrum::pi_rectangles;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Levels,
    Spectrum,
    Detscan,
    Lt,
    Conformal,
    Bgk,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::Levels, Stage::Spectrum, Stage::Detscan, Stage::Lt, Stage::Conformal, Stage::Bgk];

    /// Stages that must run before this one.
    pub fn requires(&self) -> &'static [Stage] {
        match self {
            Stage::Detscan | Stage::Lt => &[Stage::Spectrum],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
    /// Stages run by `report`; other subcommands pick their own.
    #[serde(default = "default_stages")]
    pub stages: Vec<Stage>,
    pub problem: ProblemSection,
    pub basis: BasisSection,
    #[serde(default)]
    pub potential: PotentialSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub lt: LtSection,
    #[serde(default)]
    pub probes: ProbeSection,
}

fn default_output() -> String {
    "out".into()
}

fn default_stages() -> Vec<Stage> {
    vec![Stage::Levels, Stage::Spectrum, Stage::Lt]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub b: f64,
    pub d: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub j_max: usize,
    pub m_max: usize,
    /// Enlarged cutoffs for the convergence filter; default `j_max + 2`, `m_max + 4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_max_enlarged: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max_enlarged: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    #[default]
    Zero,
    Constant,
    Gaussian,
    PowerDecay,
    /// Diagonal in the Landau basis, given by `entries_*`.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    pub kind: PotentialKind,
    /// Value (constant), amplitude (gaussian) or angular constant term (power decay).
    pub re: f64,
    pub im: f64,
    pub sigma: f64,
    pub c: f64,
    pub m_perp: f64,
    pub cos_re: Vec<f64>,
    pub cos_im: Vec<f64>,
    pub sin_re: Vec<f64>,
    pub sin_im: Vec<f64>,
    pub entries_j: Vec<usize>,
    pub entries_m: Vec<usize>,
    pub entries_re: Vec<f64>,
    pub entries_im: Vec<f64>,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self {
            kind: PotentialKind::Zero,
            re: 0.0,
            im: 0.0,
            sigma: 1.0,
            c: 1.0,
            m_perp: 3.0,
            cos_re: Vec::new(),
            cos_im: Vec::new(),
            sin_re: Vec::new(),
            sin_im: Vec::new(),
            entries_j: Vec::new(),
            entries_m: Vec::new(),
            entries_re: Vec::new(),
            entries_im: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    #[default]
    None,
    /// One rectangle per level in `j_min..=j_max`.
    Auto,
    /// Rectangles listed in `re_min`, `re_max`, `im_min`, `im_max`.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSection {
    pub mode: ScanMode,
    pub delta: f64,
    pub eta: f64,
    /// Default `2‖V‖∞ + 0.5`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    pub j_min: usize,
    /// Default: the basis cutoff.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    pub mirror: bool,
    pub re_min: Vec<f64>,
    pub re_max: Vec<f64>,
    pub im_min: Vec<f64>,
    pub im_max: Vec<f64>,
    pub q: u32,
    pub match_tol: f64,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            mode: ScanMode::None,
            delta: 0.5,
            eta: 1e-3,
            height: None,
            j_min: 0,
            j_max: None,
            mirror: true,
            re_min: Vec::new(),
            re_max: Vec::new(),
            im_min: Vec::new(),
            im_max: Vec::new(),
            q: 4,
            match_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalChoice {
    None,
    #[default]
    Planar,
    Spatial,
    PlanarTail,
    SpatialTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LtSection {
    pub functional: FunctionalChoice,
    pub p: f64,
    pub eps: f64,
    pub gamma: f64,
    pub tau: f64,
}

impl Default for LtSection {
    fn default() -> Self {
        Self { functional: FunctionalChoice::Planar, p: 4.0, eps: 0.5, gamma: 3.0, tau: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    /// Random points for the distortion and region checks.
    pub distortion_samples: usize,
    /// Disk samples per rectangle for the comparability probe.
    pub sc_samples: usize,
    pub bgk_zeros: usize,
    pub bgk_taus: Vec<f64>,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { distortion_samples: 1000, sc_samples: 2000, bgk_zeros: 6, bgk_taus: vec![0.25, 0.5, 1.0] }
    }
}

/// Where the potential comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Field(Potential),
    Synthetic(Vec<((usize, usize), Complex64)>),
}

/// The validated inputs of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub cfg: MagneticConfig,
    pub basis: BasisSpec,
    pub enlarged: BasisSpec,
    pub source: Source,
    pub v_inf: f64,
    pub rects: Vec<ComplexRectangle>,
    pub q: u32,
    pub match_tol: f64,
    pub lt: LtSection,
    pub probes: ProbeSection,
    pub stages: Vec<Stage>,
    pub output: PathBuf,
    pub seed: u64,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

fn pairs(re: &[f64], im: &[f64], what: &str) -> Result<Vec<Complex64>> {
    if re.len() != im.len() {
        return Err(bad(format!("{what}: {} real parts but {} imaginary parts", re.len(), im.len())));
    }
    Ok(re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical serialization; the basis of the provenance hash.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hash of the canonical form without the output directory, which does not
    /// affect any result.
    pub fn sha256(&self) -> String {
        let mut c = self.clone();
        c.output.clear();
        hex::encode(Sha256::digest(c.canonical().as_bytes()))
    }

    /// Validate everything and build the run plan for `stages` (dependencies added).
    pub fn plan(&self, stages: &[Stage]) -> Result<Plan> {
        let cfg = MagneticConfig::new(self.problem.b, self.problem.d).map_err(as_config)?;
        let basis = BasisSpec::new(self.basis.j_max, self.basis.m_max);
        let enlarged = BasisSpec::new(
            self.basis.j_max_enlarged.unwrap_or(self.basis.j_max + 2),
            self.basis.m_max_enlarged.unwrap_or(self.basis.m_max + 4),
        );
        if !basis.nested_in(&enlarged) {
            return Err(bad(format!("enlarged cutoffs ({}, {}) must not be below the basis", enlarged.j_max, enlarged.m_max)));
        }

        let mut run: Vec<Stage> = Vec::new();
        for s in stages {
            run.extend_from_slice(s.requires());
            run.push(*s);
        }
        if run.is_empty() {
            return Err(bad("no stages requested"));
        }
        run.sort();
        run.dedup();

        let (source, v_inf) = self.source(&cfg, &basis)?;
        let rects = if run.contains(&Stage::Detscan) || run.contains(&Stage::Conformal) {
            self.rects(&cfg, &basis, v_inf)?
        } else {
            Vec::new()
        };
        if run.contains(&Stage::Detscan) {
            if rects.is_empty() {
                return Err(bad("detscan needs scan rectangles: set scan.mode to auto or explicit"));
            }
            if self.scan.q == 0 {
                return Err(bad("scan.q must be >= 1"));
            }
            if !(self.scan.match_tol > 0.0) {
                return Err(bad(format!("scan.match_tol = {} must be > 0", self.scan.match_tol)));
            }
        }
        if run.contains(&Stage::Lt) {
            self.check_lt(&cfg)?;
        }
        if run.contains(&Stage::Conformal) && self.probes.sc_samples == 0 && self.probes.distortion_samples == 0 {
            return Err(bad("conformal stage with no samples requested"));
        }
        if run.contains(&Stage::Bgk) {
            if self.probes.bgk_zeros == 0 {
                return Err(bad("probes.bgk_zeros must be >= 1"));
            }
            if self.probes.bgk_taus.is_empty() || self.probes.bgk_taus.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
                return Err(bad("probes.bgk_taus must be a nonempty list of positive numbers"));
            }
        }
        Ok(Plan {
            cfg,
            basis,
            enlarged,
            source,
            v_inf,
            rects,
            q: self.scan.q,
            match_tol: self.scan.match_tol,
            lt: self.lt,
            probes: self.probes.clone(),
            stages: run,
            output: PathBuf::from(&self.output),
            seed: self.seed,
        })
    }

    fn source(&self, cfg: &MagneticConfig, basis: &BasisSpec) -> Result<(Source, f64)> {
        let p = &self.potential;
        let amp = Complex64::new(p.re, p.im);
        if !(amp.re.is_finite() && amp.im.is_finite()) {
            return Err(bad("potential value must be finite"));
        }
        let needs_d1 = matches!(p.kind, PotentialKind::Gaussian | PotentialKind::PowerDecay);
        if needs_d1 && cfg.d() != 1 {
            return Err(bad(format!("{:?} potentials are assembled for d = 1 only (got d = {})", p.kind, cfg.d())));
        }
        let field = |v: Potential| {
            let s = v.sup_norm();
            (Source::Field(v), s)
        };
        Ok(match p.kind {
            PotentialKind::Zero => field(Potential::zero()),
            PotentialKind::Constant => field(Potential::constant(amp)),
            PotentialKind::Gaussian => field(Potential::gaussian(amp, p.sigma).map_err(as_config)?),
            PotentialKind::PowerDecay => {
                let profile =
                    AngularProfile { constant: amp, cos: pairs(&p.cos_re, &p.cos_im, "cos")?, sin: pairs(&p.sin_re, &p.sin_im, "sin")? };
                field(Potential::power_decay(p.c, p.m_perp, profile).map_err(as_config)?)
            }
            PotentialKind::Synthetic => {
                let n = p.entries_j.len();
                if p.entries_m.len() != n || p.entries_re.len() != n || p.entries_im.len() != n {
                    return Err(bad("entries_j, entries_m, entries_re, entries_im must have equal length"));
                }
                let mut entries = Vec::with_capacity(n);
                let mut sup: f64 = 0.0;
                for k in 0..n {
                    let (j, m) = (p.entries_j[k], p.entries_m[k]);
                    if j > basis.j_max || m > basis.m_max {
                        return Err(bad(format!("synthetic entry ({j}, {m}) outside the basis")));
                    }
                    let v = Complex64::new(p.entries_re[k], p.entries_im[k]);
                    sup = sup.max(v.norm());
                    entries.push(((j, m), v));
                }
                (Source::Synthetic(entries), sup)
            }
        })
    }

    fn rects(&self, cfg: &MagneticConfig, basis: &BasisSpec, v_inf: f64) -> Result<Vec<ComplexRectangle>> {
        let s = &self.scan;
        let out = match s.mode {
            ScanMode::None => Vec::new(),
            ScanMode::Auto => {
                let j_max = s.j_max.unwrap_or(basis.j_max);
                if s.j_min > j_max || j_max > basis.j_max {
                    return Err(bad(format!("scan levels {}..={j_max} must lie within the basis (j <= {})", s.j_min, basis.j_max)));
                }
                let height = s.height.unwrap_or(2.0 * v_inf + 0.5);
                pi_rectangles(cfg, s.j_min..=j_max, s.delta, s.eta, height, s.mirror).map_err(as_config)?
            }
            ScanMode::Explicit => {
                let n = s.re_min.len();
                if n == 0 || s.re_max.len() != n || s.im_min.len() != n || s.im_max.len() != n {
                    return Err(bad("explicit scan needs re_min, re_max, im_min, im_max of equal nonzero length"));
                }
                let mut out = Vec::with_capacity(n);
                for k in 0..n {
                    let r = ComplexRectangle::new(s.re_min[k], s.re_max[k], s.im_min[k], s.im_max[k]).map_err(as_config)?;
                    if r.im_min <= 0.0 && r.im_max >= 0.0 {
                        return Err(bad(format!("rectangle {k} meets the real axis, where the levels are poles")));
                    }
                    out.push(r);
                }
                out
            }
        };
        Ok(out)
    }

    fn check_lt(&self, cfg: &MagneticConfig) -> Result<()> {
        let l = &self.lt;
        if l.functional == FunctionalChoice::None {
            return Ok(());
        }
        if !(l.p > 0.0 && l.p.is_finite()) {
            return Err(bad(format!("lt.p = {} must be a positive number (at least {} for the planar bound)", l.p, min_exponent(cfg.d()))));
        }
        if matches!(l.functional, FunctionalChoice::Spatial | FunctionalChoice::SpatialTail) {
            if !(l.eps > 0.0 && l.eps < 1.0) {
                return Err(bad(format!("lt.eps = {} must lie in (0, 1)", l.eps)));
            }
            let bound = cfg.d() as f64 + 1.5;
            if !(l.gamma > bound) {
                return Err(bad(format!("lt.gamma = {} must exceed d + 3/2 = {bound}", l.gamma)));
            }
        }
        if matches!(l.functional, FunctionalChoice::PlanarTail | FunctionalChoice::SpatialTail) && !(l.tau > 0.0) {
            return Err(bad(format!("lt.tau = {} must be > 0", l.tau)));
        }
        Ok(())
    }
}
