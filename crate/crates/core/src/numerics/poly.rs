//! Polynomial root finding: real cubics in closed form, complex quartics via
//! companion-matrix eigenvalues.

use nalgebra::Matrix4;
use num_complex::Complex64 as C64;

/// Evaluate sum c[k] x^k and its derivative by Horner.
pub fn horner_with_derivative(c: &[C64], x: C64) -> (C64, C64) {
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ck;
    }
    (p, dp)
}

/// Sum |c[k]| |x|^k, the natural scale for a relative residual.
pub fn residual_scale(c: &[C64], x: C64) -> f64 {
    let r = x.norm();
    c.iter().rev().fold(0.0, |acc, ck| acc * r + ck.norm())
}

/// Roots of x^4 + c3 x^3 + c2 x^2 + c1 x + c0 with `coef = [c0, c1, c2, c3]`.
///
/// The polynomial is rescaled so its coefficients are balanced, the roots are
/// read off the Schur form of the companion matrix, and each root then gets up
/// to ten Newton steps on the original polynomial, stopping once the residual
/// stops decreasing.
pub fn quartic_roots(coef: [C64; 4]) -> [C64; 4] {
    let mut s: f64 = 0.0;
    for (k, c) in coef.iter().enumerate() {
        let m = c.norm();
        if m > 0.0 {
            s = s.max(m.powf(1.0 / (4 - k) as f64));
        }
    }
    if s == 0.0 {
        return [C64::new(0.0, 0.0); 4];
    }
    // eta = xi / s is a root of eta^4 + sum (c_k / s^(4-k)) eta^k.
    let mut d = [C64::new(0.0, 0.0); 4];
    for k in 0..4 {
        d[k] = coef[k] / s.powi((4 - k) as i32);
    }
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let m = Matrix4::new(
        -d[3], -d[2], -d[1], -d[0], //
        one, zero, zero, zero, //
        zero, one, zero, zero, //
        zero, zero, one, zero,
    );
    let eig = m
        .schur()
        .eigenvalues()
        .expect("complex Schur form is triangular");
    let full = [coef[0], coef[1], coef[2], coef[3], one];
    let mut roots = [zero; 4];
    for (r, e) in roots.iter_mut().zip(eig.iter()) {
        *r = polish(&full, *e * s, 10);
    }
    roots
}

/// The two smallest roots of the monic quartic `coef`, read off as inverses of
/// the two largest roots of the reversed polynomial and polished on the
/// original. Keeps relative accuracy when the other pair is far larger.
pub fn smallest_pair(coef: [C64; 4]) -> [C64; 2] {
    let one = C64::new(1.0, 0.0);
    let c0 = coef[0];
    let mut inv = quartic_roots([one / c0, coef[3] / c0, coef[2] / c0, coef[1] / c0]);
    inv.sort_by(|p, q| q.norm().partial_cmp(&p.norm()).unwrap_or(std::cmp::Ordering::Equal));
    let full = [coef[0], coef[1], coef[2], coef[3], one];
    [polish(&full, one / inv[0], 10), polish(&full, one / inv[1], 10)]
}

/// Newton polish that never accepts a step increasing the residual.
pub fn polish(c: &[C64], x0: C64, iters: usize) -> C64 {
    let mut x = x0;
    let (mut p, mut dp) = horner_with_derivative(c, x);
    for _ in 0..iters {
        if p.norm() == 0.0 || dp.norm() == 0.0 {
            break;
        }
        let cand = x - p / dp;
        let (pc, dpc) = horner_with_derivative(c, cand);
        if !(pc.norm() < p.norm()) {
            break;
        }
        x = cand;
        p = pc;
        dp = dpc;
    }
    x
}

/// Roots of a real cubic c3 x^3 + c2 x^2 + c1 x + c0 (c3 != 0).
///
/// Three real roots come from the trigonometric form of the depressed cubic and
/// are returned in ascending order; otherwise Cardano gives one real root and a
/// conjugate pair (real root first, then the pair with positive imaginary part
/// first).
pub fn cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> [C64; 3] {
    let b = c2 / c3;
    let c = c1 / c3;
    let d = c0 / c3;
    let shift = -b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let poly = [C64::from(c0), C64::from(c1), C64::from(c2), C64::from(c3)];
    let mut out = if disc >= 0.0 && p < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut r = [0.0; 3];
        for (k, rk) in r.iter_mut().enumerate() {
            *rk = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift;
        }
        r.sort_by(|x, y| x.partial_cmp(y).unwrap());
        [C64::from(r[0]), C64::from(r[1]), C64::from(r[2])]
    } else if p == 0.0 && q == 0.0 {
        [C64::from(shift); 3]
    } else {
        // One real root u + v with u^3, v^3 the roots of w^2 + q w - p^3/27.
        let sq = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
        let u = (-q / 2.0 + if q > 0.0 { -sq } else { sq }).cbrt();
        let v = if u != 0.0 { -p / (3.0 * u) } else { 0.0 };
        let y1 = u + v;
        let re = -y1 / 2.0;
        let im = (3.0f64).sqrt() / 2.0 * (u - v).abs();
        [C64::from(y1 + shift), C64::new(re + shift, im), C64::new(re + shift, -im)]
    };
    for r in out.iter_mut() {
        *r = polish(&poly, *r, 2);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn quartic_recovers_known_roots() {
        let want = [c(1.0, 2.0), c(-3.0, 0.5), c(0.25, 0.0), c(1e-3, -1e-3)];
        // Expand prod (x - r).
        let mut p = vec![c(1.0, 0.0)];
        for r in want {
            let mut q = vec![c(0.0, 0.0); p.len() + 1];
            for (i, pi) in p.iter().enumerate() {
                q[i + 1] += *pi;
                q[i] -= *pi * r;
            }
            p = q;
        }
        let got = quartic_roots([p[0], p[1], p[2], p[3]]);
        for w in want {
            let best = got.iter().map(|g| (g - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-13, "root {w} missed by {best}");
        }
    }

    #[test]
    fn quartic_handles_widely_spread_roots() {
        // Roots 1e6, 2e6, 0.5, -0.25: the small ones must keep relative accuracy.
        let r = [1e6, 2e6, 0.5, -0.25];
        let e1: f64 = r.iter().sum();
        let e2 = r[0] * r[1] + r[0] * r[2] + r[0] * r[3] + r[1] * r[2] + r[1] * r[3] + r[2] * r[3];
        let e3 = r[0] * r[1] * r[2] + r[0] * r[1] * r[3] + r[0] * r[2] * r[3] + r[1] * r[2] * r[3];
        let e4 = r[0] * r[1] * r[2] * r[3];
        let got = quartic_roots([c(e4, 0.0), c(-e3, 0.0), c(e2, 0.0), c(-e1, 0.0)]);
        for w in r {
            let best = got
                .iter()
                .map(|g| (g - w).norm() / w.abs())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 1e-12, "root {w} relative miss {best}");
        }
    }

    #[test]
    fn smallest_pair_beside_a_tight_large_cluster() {
        // Roots 1e7 +- 3, 0.42, -0.42; the plain solve loses the small pair.
        let r = [1e7 + 3.0, 1e7 - 3.0, 0.42, -0.42];
        let e1: f64 = r.iter().sum();
        let e2 = r[0] * r[1] + r[0] * r[2] + r[0] * r[3] + r[1] * r[2] + r[1] * r[3] + r[2] * r[3];
        let e3 = r[0] * r[1] * r[2] + r[0] * r[1] * r[3] + r[0] * r[2] * r[3] + r[1] * r[2] * r[3];
        let e4 = r[0] * r[1] * r[2] * r[3];
        let got = smallest_pair([c(e4, 0.0), c(-e3, 0.0), c(e2, 0.0), c(-e1, 0.0)]);
        for w in [0.42, -0.42] {
            let best = got.iter().map(|g| (g - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-12, "root {w} missed by {best}");
        }
    }

    #[test]
    fn cubic_trigonometric_and_cardano_branches() {
        // (x-1)(x-2)(x+3) = x^3 - 7x + 6
        let r = cubic_roots(1.0, 0.0, -7.0, 6.0);
        let re: Vec<f64> = r.iter().map(|z| z.re).collect();
        assert!((re[0] + 3.0).abs() < 1e-14 && (re[1] - 1.0).abs() < 1e-14 && (re[2] - 2.0).abs() < 1e-14);
        assert!(r.iter().all(|z| z.im == 0.0));
        // (x-2)(x^2+1) = x^3 - 2x^2 + x - 2
        let r = cubic_roots(1.0, -2.0, 1.0, -2.0);
        assert!((r[0] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-14);
        assert!((r[2] - c(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn cubic_agrees_with_companion_matrix() {
        let (c3, c2, c1, c0) = (2.0, -3.0, -11.0, 6.0);
        let closed = cubic_roots(c3, c2, c1, c0);
        let m = nalgebra::Matrix3::new(-c2 / c3, -c1 / c3, -c0 / c3, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0);
        let eig = m.complex_eigenvalues();
        for e in eig.iter() {
            let best = closed.iter().map(|g| (g - e).norm()).fold(f64::INFINITY, f64::min);
            assert!(best < 1e-12);
        }
    }
}
