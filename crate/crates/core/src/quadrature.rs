//! Gauss rules and an adaptive Gauss-Legendre integrator.

use num_complex::Complex64;
use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Laguerre rule for the weight `x^α e^{-x}` on `[0, ∞)`.
///
/// Weights are returned as natural logarithms: for large `n` the trailing
/// weights are far below the smallest normal double while the integrand
/// (polynomial in `x`) is huge there, so callers combine them in log space.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub alpha: f64,
    pub nodes: Vec<f64>,
    pub ln_weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Self {
        Self::generalized(n, 0.0)
    }

    pub fn generalized(n: usize, alpha: f64) -> Self {
        assert!(n >= 1 && alpha > -1.0);
        let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0 + alpha).collect();
        let off: Vec<f64> = (1..n).map(|k| (k as f64 * (k as f64 + alpha)).sqrt()).collect();
        let mut guesses = tridiagonal_eigenvalues(&diag, &off);
        guesses.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let nf = n as f64;
        // ln Γ(n+α+1) − ln n!
        let ln_ratio = statrs::function::gamma::ln_gamma(nf + alpha + 1.0) - statrs::function::gamma::ln_gamma(nf + 1.0);
        let mut nodes = Vec::with_capacity(n);
        let mut ln_weights = Vec::with_capacity(n);
        for mut x in guesses {
            for _ in 0..50 {
                let (ln, lnm1, _) = scaled_laguerre_pair(n, alpha, x);
                // x L_n' = n L_n − (n+α) L_{n−1}; the ratio is scale-free.
                let dx = x * ln / (nf * ln - (nf + alpha) * lnm1);
                x -= dx;
                if dx.abs() <= 4.0 * f64::EPSILON * x.abs() {
                    break;
                }
            }
            let (lnp1, _, ln_scale) = scaled_laguerre_pair(n + 1, alpha, x);
            let ln_abs = lnp1.abs().ln() + ln_scale;
            let lw = ln_ratio + x.ln() - 2.0 * ((n + 1) as f64).ln() - 2.0 * ln_abs;
            nodes.push(x);
            ln_weights.push(lw);
        }
        Self { alpha, nodes, ln_weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `(L_n^α(x), L_{n-1}^α(x), ln_scale)` with both values divided by `e^{ln_scale}`.
fn scaled_laguerre_pair(n: usize, alpha: f64, x: f64) -> (f64, f64, f64) {
    let mut prev = 1.0;
    let mut cur = 1.0 + alpha - x;
    let mut ln_scale = 0.0;
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > 1e150 {
            cur *= 1e-150;
            prev *= 1e-150;
            ln_scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (cur, prev, ln_scale)
}

/// Eigenvalues of a symmetric tridiagonal matrix (implicit QL with Wilkinson shifts).
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 200, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d
}

/// Adaptive Gauss-Legendre on `[a, b]` for complex integrands.
///
/// Each panel is compared with its two halves; panels are accepted once they
/// agree to `abs_tol + rel_tol * |panel|`. Returns the integral and whether
/// every panel met the tolerance before `max_depth`.
pub fn adaptive_gauss_legendre<F>(f: &F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_depth: usize) -> (Complex64, bool)
where
    F: Fn(f64) -> Complex64,
{
    struct Panel {
        lo: f64,
        hi: f64,
        halves: (Complex64, Complex64),
        err: f64,
        depth: usize,
    }
    impl PartialEq for Panel {
        fn eq(&self, o: &Self) -> bool {
            self.err == o.err
        }
    }
    impl Eq for Panel {}
    impl PartialOrd for Panel {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Panel {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.err.total_cmp(&o.err)
        }
    }

    let rule = gauss_legendre(16);
    let rule_sum = |lo: f64, hi: f64| -> Complex64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        rule.0.iter().zip(&rule.1).map(|(&t, &w)| f(mid + half * t) * (w * half)).sum()
    };
    let make = |lo: f64, hi: f64, coarse: Complex64, depth: usize| -> Panel {
        let mid = 0.5 * (lo + hi);
        let halves = (rule_sum(lo, mid), rule_sum(mid, hi));
        let fine = halves.0 + halves.1;
        let mut err = (fine - coarse).norm();
        if err <= 64.0 * f64::EPSILON * (halves.0.norm() + halves.1.norm()) {
            err = 0.0;
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        Panel { lo, hi, halves, err, depth }
    };

    let mut heap = std::collections::BinaryHeap::new();
    heap.push(make(a, b, rule_sum(a, b), 0));
    let max_panels = 200 * max_depth.max(1);
    loop {
        let (total, err) = heap
            .iter()
            .fold((Complex64::new(0.0, 0.0), 0.0), |(v, e), p| (v + p.halves.0 + p.halves.1, e + p.err));
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return (total, true);
        }
        let worst = heap.peek().expect("nonempty");
        if !total.re.is_finite() || !total.im.is_finite() || worst.depth >= max_depth || heap.len() >= max_panels {
            return (total, false);
        }
        let p = heap.pop().expect("nonempty");
        let mid = 0.5 * (p.lo + p.hi);
        heap.push(make(p.lo, mid, p.halves.0, p.depth + 1));
        heap.push(make(mid, p.hi, p.halves.1, p.depth + 1));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_moments() {
        // ∫ x^k e^{-x} = k!
        for &n in &[1usize, 5, 24, 80, 300] {
            let gl = GaussLaguerre::new(n);
            for k in 0..(2 * n).min(30) {
                let s: f64 = gl
                    .nodes
                    .iter()
                    .zip(&gl.ln_weights)
                    .map(|(&x, &lw)| (lw + k as f64 * x.ln()).exp())
                    .sum();
                let fact: f64 = (1..=k).map(|i| i as f64).product();
                assert!((s / fact - 1.0).abs() < 1e-11, "n={n} k={k} {s} vs {fact}");
            }
        }
    }

    #[test]
    fn tridiagonal_matches_known_spectrum() {
        // Discrete Laplacian: eigenvalues 2 - 2 cos(k pi/(n+1)).
        let n = 12;
        let mut ev = tridiagonal_eigenvalues(&vec![2.0; n], &vec![-1.0; n - 1]);
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (k, e) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((e - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn adaptive_handles_endpoint_kink() {
        let f = |x: f64| Complex64::new(x.sqrt(), x.cbrt());
        let (v, ok) = adaptive_gauss_legendre(&f, 0.0, 1.0, 1e-13, 1e-13, 60);
        assert!(ok);
        assert!((v - Complex64::new(2.0 / 3.0, 0.75)).norm() < 1e-11);
    }

    #[test]
    fn generalized_laguerre_moments() {
        // ∫ x^k x^{1/2} e^{-x} dx = Γ(k + 3/2)
        use statrs::function::gamma::gamma;
        for &n in &[5usize, 40, 200] {
            let gl = GaussLaguerre::generalized(n, 0.5);
            for k in 0..(2 * n).min(30) {
                let q: f64 = gl.nodes.iter().zip(&gl.ln_weights).map(|(&x, &lw)| (lw + k as f64 * x.ln()).exp()).sum();
                let exact = gamma(k as f64 + 1.5);
                assert!((q / exact - 1.0).abs() < 1e-11, "n={n} k={k}: {q} vs {exact}");
            }
        }
    }
}
