//! Dense complex linear algebra: eigenvalues by Hessenberg QR, LU-based
//! log-determinants and solves, singular values, block detection.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Reduce `a` to upper Hessenberg form by Householder similarity transforms.
pub fn hessenberg(a: &mut CMatrix) {
    let n = a.nrows();
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { Complex64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // A ← (I − β v v^H) A
        for j in k..n {
            let s: Complex64 = v.iter().enumerate().map(|(i, vi)| vi.conj() * a[(k + 1 + i, j)]).sum();
            let s = s * beta;
            for (i, vi) in v.iter().enumerate() {
                a[(k + 1 + i, j)] -= vi * s;
            }
        }
        // A ← A (I − β v v^H)
        for r in 0..n {
            let s: Complex64 = v.iter().enumerate().map(|(i, vi)| a[(r, k + 1 + i)] * vi).sum();
            let s = s * beta;
            for (i, vi) in v.iter().enumerate() {
                a[(r, k + 1 + i)] -= s * vi.conj();
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = ZERO;
        }
    }
}

/// `[c s; −s̄ c]` with `c` real, mapping `(a, b)` to `(r, 0)`.
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, ZERO);
    }
    if na == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let n = na.hypot(nb);
    (na / n, (a / na) * b.conj() / n)
}

/// All eigenvalues of a general complex matrix, in no particular order.
///
/// Single-shift QR on the Hessenberg form with Wilkinson shifts, deflation on
/// negligible subdiagonals and an exceptional shift every tenth stagnant sweep.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidParameter("eigenvalues of a non-square matrix".into()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut h = m.clone();
    hessenberg(&mut h);
    let mut eig = vec![ZERO; n];
    if n == 0 {
        return Ok(eig);
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    loop {
        if hi == 0 {
            eig[0] = h[(0, 0)];
            break;
        }
        // Find the start of the active unreduced block.
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { 1.0 } else { s };
            if h[(lo, lo - 1)].norm() <= eps * s {
                h[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            eig[hi] = h[(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > 100 * n.max(10) {
            return Err(Error::EigenFailure(hi + 1));
        }
        let shift = if its % 10 == 0 {
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            let tr = 0.5 * (a + d);
            let disc = (0.25 * (a - d) * (a - d) + b * c).sqrt();
            let r1 = tr + disc;
            let r2 = tr - disc;
            if (r1 - d).norm() < (r2 - d).norm() {
                r1
            } else {
                r2
            }
        };
        // One implicit single-shift QR sweep on rows/cols lo..=hi.
        let (mut c, mut s) = givens(h[(lo, lo)] - shift, h[(lo + 1, lo)]);
        for k in lo..hi {
            if k > lo {
                let g = givens(h[(k, k - 1)], h[(k + 1, k - 1)]);
                c = g.0;
                s = g.1;
            }
            let col0 = if k > lo { k - 1 } else { lo };
            for j in col0..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = x * c + s * y;
                h[(k + 1, j)] = -s.conj() * x + y * c;
            }
            if k > lo {
                h[(k + 1, k - 1)] = ZERO;
            }
            let row1 = (k + 2).min(hi);
            for r in lo..=row1 {
                let x = h[(r, k)];
                let y = h[(r, k + 1)];
                h[(r, k)] = x * c + s.conj() * y;
                h[(r, k + 1)] = -s * x + y * c;
            }
        }
    }
    Ok(eig)
}

/// `(ln|det M|, arg det M)` from a partial-pivoted LU, or `None` if singular.
pub fn log_det(m: &CMatrix) -> Option<(f64, f64)> {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut ln_abs = 0.0;
    let mut arg = 0.0;
    for i in 0..u.nrows() {
        let d = u[(i, i)];
        if d.norm() == 0.0 || !d.norm().is_finite() {
            return None;
        }
        ln_abs += d.norm().ln();
        arg += d.arg();
    }
    if lu.p().determinant::<f64>() < 0.0 {
        arg += std::f64::consts::PI;
    }
    Some((ln_abs, wrap_phase(arg)))
}

/// Map an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mut y = x.rem_euclid(tau);
    if y > std::f64::consts::PI {
        y -= tau;
    }
    y
}

/// `M⁻¹ B` by partial-pivoted LU; errors when `M` is numerically singular.
pub fn solve(m: &CMatrix, b: &CMatrix, at: Complex64) -> Result<CMatrix> {
    let lu = m.clone().lu();
    let u = lu.u();
    let diag_max = (0..u.nrows()).map(|i| u[(i, i)].norm()).fold(0.0, f64::max);
    let diag_min = (0..u.nrows()).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if u.nrows() > 0 && !(diag_min > 1e-14 * diag_max) {
        return Err(Error::NearSpectrum(at));
    }
    lu.solve(b).ok_or(Error::NearSpectrum(at))
}

/// Singular values in decreasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let sv: DVector<f64> = m.singular_values();
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Connected components of the graph `i ~ j ⇔ M_ij ≠ 0 or M_ji ≠ 0`, each sorted.
pub fn block_components(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Principal submatrix on `idx`.
pub fn submatrix(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Eigenvalues computed block by block along `block_components`.
pub fn eigenvalues_blocked(m: &CMatrix) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(m.nrows());
    for block in block_components(m) {
        if block.len() == 1 {
            out.push(m[(block[0], block[0])]);
        } else {
            out.extend(eigenvalues(&submatrix(m, &block))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hessenberg_is_similarity() {
        let a = random_matrix(9, 1);
        let mut h = a.clone();
        hessenberg(&mut h);
        for i in 2..9 {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], ZERO);
            }
        }
        assert!((h.trace() - a.trace()).norm() < 1e-12);
        let fro = |m: &CMatrix| m.iter().map(|z| z.norm_sqr()).sum::<f64>();
        assert!((fro(&h) - fro(&a)).abs() < 1e-11);
    }

    #[test]
    fn triangular_eigenvalues_are_diagonal() {
        let mut a = random_matrix(6, 2);
        for i in 0..6 {
            for j in 0..i {
                a[(i, j)] = ZERO;
            }
        }
        let mut ev = eigenvalues(&a).unwrap();
        let mut d: Vec<Complex64> = (0..6).map(|i| a[(i, i)]).collect();
        let key = |z: &Complex64| (z.re, z.im);
        ev.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        d.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        for (x, y) in ev.iter().zip(&d) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_satisfy_det_condition() {
        for seed in 0..5 {
            let a = random_matrix(30, 10 + seed);
            let ev = eigenvalues(&a).unwrap();
            let sum: Complex64 = ev.iter().sum();
            assert!((sum - a.trace()).norm() < 1e-10);
            for &l in &ev {
                let shifted = &a - CMatrix::identity(30, 30) * l;
                let sv = singular_values(&shifted);
                assert!(sv[29] < 1e-10 * sv[0], "sigma_min {} for {l}", sv[29]);
            }
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // (z-1)(z-2)(z-3i)(z+1+i)
        let roots = [c(1.0, 0.0), c(2.0, 0.0), c(0.0, 3.0), c(-1.0, -1.0)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for &r in &roots {
            let mut next = vec![ZERO; coeffs.len() + 1];
            for (k, &a) in coeffs.iter().enumerate() {
                next[k] += a;
                next[k + 1] -= a * r;
            }
            coeffs = next;
        }
        let n = roots.len();
        let mut comp = CMatrix::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -coeffs[j + 1];
        }
        for i in 1..n {
            comp[(i, i - 1)] = c(1.0, 0.0);
        }
        let ev = eigenvalues(&comp).unwrap();
        for r in roots {
            assert!(ev.iter().any(|e| (e - r).norm() < 1e-10));
        }
    }

    #[test]
    fn jordan_block_and_zero_matrix() {
        let mut j = CMatrix::zeros(4, 4);
        for i in 0..4 {
            j[(i, i)] = c(2.0, 1.0);
            if i < 3 {
                j[(i, i + 1)] = c(1.0, 0.0);
            }
        }
        for e in eigenvalues(&j).unwrap() {
            assert!((e - c(2.0, 1.0)).norm() < 1e-12);
        }
        assert_eq!(eigenvalues(&CMatrix::zeros(3, 3)).unwrap(), vec![ZERO; 3]);
        assert!(eigenvalues(&CMatrix::zeros(0, 0)).unwrap().is_empty());
    }

    #[test]
    fn log_det_matches_product() {
        let a = random_matrix(7, 3);
        let det = a.determinant();
        let (l, ph) = log_det(&a).unwrap();
        assert!((l - det.norm().ln()).abs() < 1e-12);
        assert!((wrap_phase(ph - det.arg())).abs() < 1e-12);
        assert!(log_det(&CMatrix::zeros(2, 2)).is_none());
    }

    #[test]
    fn blocks_split_disjoint_supports() {
        let mut m = CMatrix::zeros(5, 5);
        m[(0, 3)] = c(1.0, 0.0);
        m[(4, 1)] = c(0.0, 2.0);
        m[(2, 2)] = c(5.0, 0.0);
        assert_eq!(block_components(&m), vec![vec![0, 3], vec![1, 4], vec![2]]);
        let mut ev = eigenvalues_blocked(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert_eq!(ev.len(), 5);
        assert!((ev[4] - c(5.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn solve_reports_singularity() {
        let z = CMatrix::zeros(3, 3);
        assert!(matches!(solve(&z, &CMatrix::identity(3, 3), c(1.0, 0.0)), Err(Error::NearSpectrum(_))));
        let a = random_matrix(5, 4);
        let x = solve(&a, &CMatrix::identity(5, 5), ZERO).unwrap();
        assert!((&a * x - CMatrix::identity(5, 5)).norm() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn shift_moves_spectrum(seed in 0u64..1000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
            let a = random_matrix(8, seed);
            let s = c(re, im);
            let ev = eigenvalues(&a).unwrap();
            let ev2 = eigenvalues(&(&a + CMatrix::identity(8, 8) * s)).unwrap();
            for e in ev {
                proptest::prop_assert!(ev2.iter().any(|f| (f - e - s).norm() < 1e-9));
            }
        }
    }
}
