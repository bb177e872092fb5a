//! Gauss-Legendre and Clenshaw-Curtis quadrature.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64 as C64;

/// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on the Legendre recurrence.
    pub fn compute(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared cached rule of order `n`.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        guard
            .entry(n)
            .or_insert_with(|| Box::leak(Box::new(GaussLegendre::compute(n))))
    }

    /// Nodes and weights mapped to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = 0.5 * (b - a);
        let c = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(x, w)| (c + h * x, h * w))
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { p0 } else { p1 };
    let dp = if n == 0 { 0.0 } else { n as f64 * (x * p1 - p0) / (x * x - 1.0) };
    (p, dp)
}

/// Fixed-order composite Gauss-Legendre over `panels` equal panels.
pub fn composite_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let rule = GaussLegendre::cached(order);
    let h = (b - a) / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let lo = a + h * k as f64;
        for (x, w) in rule.mapped(lo, lo + h) {
            sum += w * f(x);
        }
    }
    sum
}

/// Adaptive Gauss-Legendre: a panel is accepted when the 20-point value on it
/// and the sum over its two halves agree to `abs_tol + rel_tol |value|`.
pub fn adaptive_gl<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    let mut g = |x: f64| C64::new(f(x), 0.0);
    adaptive_gl_complex(&mut g, a, b, abs_tol, rel_tol).re
}

pub fn adaptive_gl_complex<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> C64 {
    const ORDER: usize = 20;
    const MAX_DEPTH: usize = 40;
    let rule = GaussLegendre::cached(ORDER);
    let panel = |lo: f64, hi: f64, f: &mut F| -> C64 {
        rule.mapped(lo, hi).map(|(x, w)| f(x) * w).sum()
    };
    let whole = panel(a, b, f);
    let mut stack = vec![(a, b, whole, 0usize)];
    let mut total = C64::new(0.0, 0.0);
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(lo, mid, f);
        let right = panel(mid, hi, f);
        let refined = left + right;
        let err = (refined - est).norm();
        if err <= abs_tol + rel_tol * refined.norm() || depth >= MAX_DEPTH {
            total += refined;
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    total
}

/// Clenshaw-Curtis rule on N+1 points x_k = cos(k pi / N), k = 0..=N
/// (descending), with weights for integration over [-1, 1].
pub fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let nf = n as f64;
    // cos(m pi / n) for every m mod 2n.
    let table: Vec<f64> = (0..2 * n).map(|m| (PI * m as f64 / nf).cos()).collect();
    let cosm = |m: usize| table[m % (2 * n)];
    let nodes: Vec<f64> = (0..=n).map(|k| if 2 * k == n { 0.0 } else { cosm(k) }).collect();
    let mut w = vec![0.0; n + 1];
    if n == 1 {
        return (nodes, vec![1.0, 1.0]);
    }
    let end = if n % 2 == 0 { 1.0 / (nf * nf - 1.0) } else { 1.0 / (nf * nf) };
    w[0] = end;
    w[n] = end;
    for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
        let mut v = 1.0;
        if n % 2 == 0 {
            for k in 1..n / 2 {
                v -= 2.0 * cosm(2 * k * i) / (4.0 * (k * k) as f64 - 1.0);
            }
            v -= cosm(n * i) / (nf * nf - 1.0);
        } else {
            for k in 1..=(n - 1) / 2 {
                v -= 2.0 * cosm(2 * k * i) / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        *wi = 2.0 * v / nf;
    }
    (nodes, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 20, 41] {
            let g = GaussLegendre::compute(n);
            for deg in 0..(2 * n) {
                let s: f64 = g.nodes.iter().zip(&g.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((s - exact).abs() < 1e-13, "n={n} deg={deg} s={s}");
            }
        }
    }

    #[test]
    fn clenshaw_curtis_even_and_odd_orders() {
        for n in [2usize, 7, 16, 2047] {
            let (x, w) = clenshaw_curtis(n);
            let total: f64 = w.iter().sum();
            assert!((total - 2.0).abs() < 1e-13);
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            assert!((s - 2.0 / 3.0).abs() < 1e-13);
            let e: f64 = x.iter().zip(&w).map(|(x, w)| w * x.exp()).sum();
            if n >= 16 {
                assert!((e - (1f64.exp() - (-1f64).exp())).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn adaptive_handles_a_peaked_integrand() {
        let v = adaptive_gl(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-13, 1e-13);
        let exact = 2.0 / 1e-2 * (1.0 / 1e-2f64).atan();
        assert!((v - exact).abs() / exact < 1e-11);
    }
}
