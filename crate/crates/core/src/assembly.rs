//! Truncated matrices of the free operator, the potential, the perturbed
//! operator, the Birman–Schwinger operator and resolvent differences.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::landau::{dist_to_levels, landau_level, laguerre, ln_factorial, orbital_numbers, BasisSpec, MagneticConfig};
use crate::linalg::{self, CMatrix};
use crate::potential::Potential;
use crate::quadrature::GaussLaguerre;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A dense finite section of an operator in the truncated Landau basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    pub matrix: CMatrix,
    pub basis: BasisSpec,
    pub cfg: MagneticConfig,
    pub label: String,
}

impl TruncatedOperator {
    pub fn new(matrix: CMatrix, basis: BasisSpec, cfg: MagneticConfig, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::InvalidParameter("operator label must be nonempty".into()));
        }
        let n = basis.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}x{}, basis has dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix, basis, cfg, label })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> f64 {
        linalg::singular_values(&self.matrix).first().copied().unwrap_or(0.0)
    }
}

/// Profile of the longitudinal factor `G` with its `L²` and `L∞` norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GProfile {
    /// `⟨x⟩^{-m}`, `m > 1/2`.
    Bracket(f64),
    /// `e^{-x²/(2σ²)}`.
    Gaussian(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDFactor {
    pub profile: GProfile,
    pub l2: f64,
    pub linf: f64,
}

impl OneDFactor {
    pub fn bracket(m: f64) -> Result<Self> {
        if !(m > 0.5) {
            return Err(Error::InvalidParameter(format!("G = <x>^-m needs m > 1/2, got {m}")));
        }
        use statrs::function::gamma::ln_gamma;
        // ∫ (1+x²)^{-m} dx = √π Γ(m−1/2)/Γ(m)
        let l2sq = std::f64::consts::PI.sqrt() * (ln_gamma(m - 0.5) - ln_gamma(m)).exp();
        Ok(Self { profile: GProfile::Bracket(m), l2: l2sq.sqrt(), linf: 1.0 })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must be > 0")));
        }
        // ∫ e^{-x²/σ²} dx = σ√π
        let l2 = (sigma * std::f64::consts::PI.sqrt()).sqrt();
        Ok(Self { profile: GProfile::Gaussian(sigma), l2, linf: 1.0 })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.profile {
            GProfile::Bracket(m) => (1.0 + x * x).powf(-0.5 * m),
            GProfile::Gaussian(s) => (-x * x / (2.0 * s * s)).exp(),
        }
    }
}

/// `Λ_j` for every basis index.
pub fn level_diagonal(basis: &BasisSpec, cfg: &MagneticConfig) -> Vec<f64> {
    (0..basis.dim()).map(|i| landau_level(cfg, basis.pair(i).0)).collect()
}

/// `H₀,⊥` on the truncated basis: exactly `diag(Λ_j)`.
pub fn free_matrix(basis: &BasisSpec, cfg: &MagneticConfig) -> TruncatedOperator {
    let d = level_diagonal(basis, cfg);
    let m = CMatrix::from_fn(d.len(), d.len(), |i, j| if i == j { Complex64::new(d[i], 0.0) } else { ZERO });
    TruncatedOperator { matrix: m, basis: *basis, cfg: *cfg, label: "H0".into() }
}

/// Quadrature weights and orbital samples `u_α(s_i)` with `Σ_i u_α u_β = ⟨φ_α, φ_β⟩`
/// for pairs whose angular momenta share parity with `rule.alpha`.
fn orbital_samples(basis: &BasisSpec, rule: &GaussLaguerre) -> DMatrix<f64> {
    let n = basis.dim();
    let odd_rule = rule.alpha != 0.0;
    let mut u = DMatrix::zeros(n, rule.len());
    for idx in 0..n {
        let (j, m) = basis.pair(idx);
        let (nr, abs_ell, _) = orbital_numbers(j, m);
        let ln_nu = 0.5 * (ln_factorial(nr) - ln_factorial(nr + abs_ell));
        // With the s^{1/2} weight, odd |ℓ| keep a whole power and even |ℓ|
        // lend half a power to the weight.
        let power = if odd_rule { 0.5 * (abs_ell as f64 - (abs_ell % 2) as f64) } else { 0.5 * abs_ell as f64 };
        for (i, (&s, &lw)) in rule.nodes.iter().zip(&rule.ln_weights).enumerate() {
            let l = laguerre(nr, abs_ell as f64, s);
            if l == 0.0 {
                continue;
            }
            let ln_abs = 0.5 * lw + ln_nu + power * s.ln() + l.abs().ln();
            u[(idx, i)] = l.signum() * ln_abs.exp();
        }
    }
    u
}

/// `G_{αβ} = Σ_i u_α(s_i) R(r_i) u_β(s_i)` for the radial factor `R`.
fn radial_gram(v: &Potential, basis: &BasisSpec, cfg: &MagneticConfig, rule: &GaussLaguerre) -> CMatrix {
    let u = orbital_samples(basis, rule);
    let b = cfg.b();
    let r: Vec<Complex64> = rule.nodes.iter().map(|&s| v.radial_factor((2.0 * s / b).sqrt())).collect();
    let uc = u.map(|x| Complex64::new(x, 0.0));
    let mut ur = uc.clone();
    for (i, ri) in r.iter().enumerate() {
        let mut col = ur.column_mut(i);
        col *= *ri;
    }
    ur * uc.transpose()
}

fn assemble_with_nodes(v: &Potential, basis: &BasisSpec, cfg: &MagneticConfig, nodes: usize) -> CMatrix {
    let n = basis.dim();
    let k_max = v.angular_bandwidth() as i64;
    let coeffs: Vec<Complex64> = (-k_max..=k_max).map(|k| v.angular_coefficient(k)).collect();
    let needs_odd = (-k_max..=k_max).any(|k| k % 2 != 0 && coeffs[(k + k_max) as usize] != ZERO);
    let even = radial_gram(v, basis, cfg, &GaussLaguerre::new(nodes));
    let odd = needs_odd.then(|| radial_gram(v, basis, cfg, &GaussLaguerre::generalized(nodes, 0.5)));
    let ell: Vec<i64> = (0..n).map(|i| basis.angular_momentum(i)).collect();
    CMatrix::from_fn(n, n, |a, bb| {
        let k = ell[a] - ell[bb];
        if k.abs() > k_max {
            return ZERO;
        }
        let c = coeffs[(k + k_max) as usize];
        if c == ZERO {
            return ZERO;
        }
        let g = if k % 2 == 0 { even[(a, bb)] } else { odd.as_ref().expect("odd rule")[(a, bb)] };
        c * g
    })
}

/// Largest Gauss–Laguerre rule tried before giving up.
pub const MAX_RADIAL_NODES: usize = 1024;

/// Galerkin matrix `⟨φ_α, V φ_β⟩`.
///
/// Radial integrals use Gauss–Laguerre in `s = b r²/2` (with an `s^{1/2}` weight
/// for odd angular couplings); angular integrals are exact through the
/// Fourier coefficients of the profile. The rule is doubled until two
/// successive node counts agree to `1e-8` (scaled by `max(1, ‖V‖∞)`).
pub fn potential_matrix(v: &Potential, basis: &BasisSpec, cfg: &MagneticConfig) -> Result<TruncatedOperator> {
    if cfg.d() != 1 {
        return Err(Error::UnsupportedDimension(cfg.d()));
    }
    let n = basis.dim();
    if let Some(c) = v.constant_value() {
        // orthonormal basis: c·I exactly
        return TruncatedOperator::new(CMatrix::identity(n, n) * c, *basis, *cfg, "V");
    }
    let tol = 1e-8 * v.sup_norm().max(1.0);
    let mut nodes = (basis.m_max + 2 * basis.j_max + 16).max(32);
    let mut coarse = assemble_with_nodes(v, basis, cfg, nodes);
    loop {
        let fine = assemble_with_nodes(v, basis, cfg, 2 * nodes);
        let disc = (&fine - &coarse).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !disc.is_finite() {
            return Err(Error::NonFinite);
        }
        if disc <= tol {
            return TruncatedOperator::new(fine, *basis, *cfg, "V");
        }
        if 2 * nodes >= MAX_RADIAL_NODES {
            return Err(Error::Accuracy { discrepancy: disc, tolerance: tol });
        }
        nodes *= 2;
        coarse = fine;
    }
}

/// Synthetic potential given directly by its diagonal in the Landau basis.
/// Not a multiplication operator; used for exactly solvable cross-checks.
pub fn synthetic_diagonal(entries: &[((usize, usize), Complex64)], basis: &BasisSpec, cfg: &MagneticConfig) -> Result<TruncatedOperator> {
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for &((j, mm), v) in entries {
        if j > basis.j_max || mm > basis.m_max {
            return Err(Error::InvalidParameter(format!("synthetic entry ({j},{mm}) outside basis")));
        }
        let i = basis.index(j, mm);
        m[(i, i)] += v;
    }
    TruncatedOperator::new(m, *basis, *cfg, "V[synthetic]")
}

/// `(H₀,⊥ − λ)⁻¹ = diag((Λ_j − λ)⁻¹)`.
pub fn free_resolvent_diag(lambda: Complex64, basis: &BasisSpec, cfg: &MagneticConfig) -> Result<TruncatedOperator> {
    if dist_to_levels(cfg, lambda) == 0.0 {
        return Err(Error::Pole(lambda));
    }
    let d = level_diagonal(basis, cfg);
    let m = CMatrix::from_fn(d.len(), d.len(), |i, j| {
        if i == j {
            (Complex64::new(d[i], 0.0) - lambda).inv()
        } else {
            ZERO
        }
    });
    TruncatedOperator::new(m, *basis, *cfg, format!("R0({lambda})"))
}

/// `T(λ) = V (H₀,⊥ − λ)⁻¹`, i.e. column `β` of `V` scaled by `(Λ_{j(β)} − λ)⁻¹`.
pub fn birman_schwinger(v: &TruncatedOperator, lambda: Complex64) -> Result<TruncatedOperator> {
    if dist_to_levels(&v.cfg, lambda) == 0.0 {
        return Err(Error::Pole(lambda));
    }
    let d = level_diagonal(&v.basis, &v.cfg);
    let mut t = v.matrix.clone();
    for (jcol, &l) in d.iter().enumerate() {
        let r = (Complex64::new(l, 0.0) - lambda).inv();
        let mut col = t.column_mut(jcol);
        col *= r;
    }
    TruncatedOperator::new(t, v.basis, v.cfg, format!("T({lambda})"))
}

/// `H⊥ = diag(Λ_j) + V`.
pub fn hamiltonian_matrix(v: &TruncatedOperator) -> TruncatedOperator {
    let d = level_diagonal(&v.basis, &v.cfg);
    let mut h = v.matrix.clone();
    for (i, &l) in d.iter().enumerate() {
        h[(i, i)] += l;
    }
    TruncatedOperator { matrix: h, basis: v.basis, cfg: v.cfg, label: "H".into() }
}

/// `A(μ) − A₀(μ) = −(H⊥ − μ)⁻¹ V (H₀,⊥ − μ)⁻¹`, by an LU solve.
pub fn resolvent_difference(v: &TruncatedOperator, mu: Complex64) -> Result<TruncatedOperator> {
    let t = birman_schwinger(v, mu)?;
    let mut h = hamiltonian_matrix(v).matrix;
    for i in 0..h.nrows() {
        h[(i, i)] -= mu;
    }
    let x = linalg::solve(&h, &t.matrix, mu)?;
    TruncatedOperator::new(-x, v.basis, v.cfg, format!("A-A0({mu})"))
}

/// Principal square root with the sign flipped so that `Im √z > 0`.
pub fn sqrt_upper(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::Branch(z));
    }
    let r = z.sqrt();
    Ok(if r.im < 0.0 { -r } else { r })
}

/// `‖G (D_x² + Λ_j − λ̄)⁻¹‖₂² = ‖G‖²_{L²}/(4|z| Im √z)`, `z = λ̄ − Λ_j`.
pub fn hs_norm_1d_resolvent(g: &OneDFactor, level: f64, lambda: Complex64) -> Result<f64> {
    let z = lambda.conj() - level;
    let root = sqrt_upper(z)?;
    if g.l2 == 0.0 {
        return Ok(0.0);
    }
    Ok(g.l2 * g.l2 / (4.0 * z.norm() * root.im))
}

/// `(‖F R₀(λ)‖_p, ((1+|λ|)^d / dist(λ,E)^p)^{1/p})` for a diagonal weight `F`.
pub fn sandwiched_norm_probe(
    fdiag: &[f64],
    lambda: Complex64,
    p: f64,
    basis: &BasisSpec,
    cfg: &MagneticConfig,
) -> Result<(f64, f64)> {
    if fdiag.len() != basis.dim() {
        return Err(Error::InvalidParameter(format!("weight length {} != basis dim {}", fdiag.len(), basis.dim())));
    }
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be >= 2")));
    }
    let dist = dist_to_levels(cfg, lambda);
    if dist == 0.0 {
        return Err(Error::Pole(lambda));
    }
    let d = level_diagonal(basis, cfg);
    let sum: crate::sum::CompensatedSum = fdiag
        .iter()
        .zip(&d)
        .map(|(&f, &l)| (f.abs() / (Complex64::new(l, 0.0) - lambda).norm()).powf(p))
        .collect();
    let lhs = sum.value().powf(1.0 / p);
    let rhs = ((1.0 + lambda.norm()).powf(cfg.d() as f64) / dist.powf(p)).powf(1.0 / p);
    Ok((lhs, rhs))
}
