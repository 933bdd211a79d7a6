//! Singular values, Schatten norms and regularized determinants.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, wrap_phase, CMatrix};
use crate::sum::CompensatedSum;

/// Singular values in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum {
    pub values: Vec<f64>,
    pub source_label: String,
}

impl SingularSpectrum {
    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidParameter(format!("Schatten exponent p = {p} must be >= 1")));
        }
        Ok(self.schatten_pow(p).powf(1.0 / p))
    }

    /// `Σ σ_i^p`.
    pub fn schatten_pow(&self, p: f64) -> f64 {
        let top = self.values.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0.0;
        }
        // Scale by σ_max so large p does not overflow.
        let s: CompensatedSum = self.values.iter().map(|&v| (v / top).powf(p)).collect();
        s.value() * top.powf(p)
    }
}

pub fn singular_values(m: &CMatrix) -> Result<SingularSpectrum> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(SingularSpectrum { values: linalg::singular_values(m), source_label: String::new() })
}

pub fn schatten_norm(m: &CMatrix, p: f64) -> Result<f64> {
    singular_values(m)?.schatten_norm(p)
}

/// A nonzero complex number in log form, `exp(ln_abs + i(phase + smooth_phase))`.
///
/// `phase` is a wrapped argument; `smooth_phase` is an exactly known part of
/// the argument that is carried unwrapped (for `det_q` it is `Im` of the
/// exponential correction, which varies wildly near the poles of `T(λ)`
/// while `det(I+T)` itself stays tame).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub ln_abs: f64,
    pub phase: f64,
    pub smooth_phase: f64,
    /// Part of `ln_abs` that is the real part of the same holomorphic
    /// logarithm whose imaginary part is `smooth_phase`.
    pub smooth_ln_abs: f64,
}

impl LogValue {
    pub fn from_complex(z: Complex64) -> Self {
        Self { ln_abs: z.norm().ln(), phase: z.arg(), smooth_phase: 0.0, smooth_ln_abs: 0.0 }
    }

    pub fn one() -> Self {
        Self { ln_abs: 0.0, phase: 0.0, smooth_phase: 0.0, smooth_ln_abs: 0.0 }
    }

    pub fn zero() -> Self {
        Self { ln_abs: f64::NEG_INFINITY, phase: 0.0, smooth_phase: 0.0, smooth_ln_abs: 0.0 }
    }

    /// The value with the smooth factor divided out; same zeros, tame modulus.
    pub fn reduced(&self) -> LogValue {
        LogValue { ln_abs: self.ln_abs - self.smooth_ln_abs, phase: self.phase, smooth_phase: 0.0, smooth_ln_abs: 0.0 }
    }

    pub fn is_zero(&self) -> bool {
        self.ln_abs == f64::NEG_INFINITY
    }

    /// The argument modulo 2π.
    pub fn arg(&self) -> f64 {
        wrap_phase(self.phase + wrap_phase(self.smooth_phase))
    }

    pub fn value(&self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_abs.exp(), self.arg())
    }

    pub fn mul(&self, o: &LogValue) -> LogValue {
        LogValue {
            ln_abs: self.ln_abs + o.ln_abs,
            phase: wrap_phase(self.phase + o.phase),
            smooth_phase: self.smooth_phase + o.smooth_phase,
            smooth_ln_abs: self.smooth_ln_abs + o.smooth_ln_abs,
        }
    }

    pub fn div(&self, o: &LogValue) -> LogValue {
        LogValue {
            ln_abs: self.ln_abs - o.ln_abs,
            phase: wrap_phase(self.phase - o.phase),
            smooth_phase: self.smooth_phase - o.smooth_phase,
            smooth_ln_abs: self.smooth_ln_abs - o.smooth_ln_abs,
        }
    }
}

/// `Σ_{k=1}^{q−1} (−1)^k tr(M^k)/k`, the exponent of the regularizing factor.
fn trace_correction(m: &CMatrix, q: u32) -> Complex64 {
    if q <= 1 || m.nrows() == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let mut g = -m.trace();
    if q == 2 {
        return g;
    }
    let mut power = m.clone();
    for k in 2..q {
        if k < q - 1 {
            power = &power * m;
            let t = power.trace();
            g += t * (if k % 2 == 0 { 1.0 } else { -1.0 } / k as f64);
        } else {
            // tr(P M) without forming the product.
            let t: Complex64 = power.iter().zip(m.transpose().iter()).map(|(a, b)| a * b).sum();
            g += t * (if k % 2 == 0 { 1.0 } else { -1.0 } / k as f64);
        }
    }
    g
}

/// `det_q(I + M) = Π_μ (1+μ) exp(Σ_{k<q} (−μ)^k/k)` over the eigenvalues `μ` of `M`.
pub fn regularized_det(m: &CMatrix, q: u32) -> Result<LogValue> {
    if q == 0 {
        return Err(Error::InvalidParameter("determinant order q must be >= 1".into()));
    }
    let mu = linalg::eigenvalues_blocked(m)?;
    let mut ln_abs = CompensatedSum::new();
    let mut phase = 0.0;
    let mut g_re = CompensatedSum::new();
    let mut g_im = CompensatedSum::new();
    for &u in &mu {
        let one_plus = Complex64::new(1.0, 0.0) + u;
        if one_plus.norm() == 0.0 {
            return Ok(LogValue::zero());
        }
        ln_abs.add(one_plus.norm().ln());
        phase = wrap_phase(phase + one_plus.arg());
        let mut pw = Complex64::new(1.0, 0.0);
        for k in 1..q {
            pw *= -u;
            let term = pw / k as f64;
            g_re.add(term.re);
            g_im.add(term.im);
        }
    }
    Ok(LogValue { ln_abs: ln_abs.value() + g_re.value(), phase, smooth_phase: g_im.value(), smooth_ln_abs: g_re.value() })
}

/// Same quantity as [`regularized_det`], via `det(I+M)` from LU and traces of powers.
pub fn regularized_det_lu(m: &CMatrix, q: u32) -> Result<LogValue> {
    regularized_det_lu_blocked(m, q, &[(0..m.nrows()).collect()])
}

/// [`regularized_det_lu`] evaluated on the diagonal blocks `blocks`, which must
/// partition the indices so that `M` has no entries between different blocks.
pub fn regularized_det_lu_blocked(m: &CMatrix, q: u32, blocks: &[Vec<usize>]) -> Result<LogValue> {
    if q == 0 {
        return Err(Error::InvalidParameter("determinant order q must be >= 1".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let subs: Vec<CMatrix> =
        blocks.iter().map(|b| if b.len() == m.nrows() { m.clone() } else { linalg::submatrix(m, b) }).collect();
    regularized_det_of_blocks(&subs, q)
}

/// `det_q` of the block-diagonal matrix with diagonal blocks `blocks`.
pub fn regularized_det_of_blocks(blocks: &[CMatrix], q: u32) -> Result<LogValue> {
    if q == 0 {
        return Err(Error::InvalidParameter("determinant order q must be >= 1".into()));
    }
    let mut ln_abs = CompensatedSum::new();
    let mut phase = 0.0;
    let mut g = Complex64::new(0.0, 0.0);
    for sub in blocks {
        let n = sub.nrows();
        let ipm = CMatrix::identity(n, n) + sub;
        match linalg::log_det(&ipm) {
            Some((l, ph)) => {
                ln_abs.add(l);
                phase = wrap_phase(phase + ph);
            }
            None => return Ok(LogValue::zero()),
        }
        g += trace_correction(sub, q);
    }
    Ok(LogValue { ln_abs: ln_abs.value() + g.re, phase, smooth_phase: g.im, smooth_ln_abs: g.re })
}

/// `(ln|det_q(I+M)|, ‖M‖_q^q)`.
pub fn det_bound_probe(m: &CMatrix, q: u32) -> Result<(f64, f64)> {
    let d = regularized_det(m, q)?;
    let s = singular_values(m)?.schatten_pow(q as f64);
    Ok((d.ln_abs, s))
}
