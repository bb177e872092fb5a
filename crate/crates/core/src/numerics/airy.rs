//! Airy function Ai and its derivative in double precision.
//!
//! Regions: Maclaurin series on [-4, 2]; Taylor stepping of Ai'' = x Ai
//! backwards from x = 9 on (2, 9) and outwards from x = -4 on (-15, -4);
//! the large-argument asymptotic expansions beyond.

use std::f64::consts::PI;

/// Ai(0).
pub const AI0: f64 = 0.355_028_053_887_817_239_26;
/// -Ai'(0).
pub const MINUS_AIP0: f64 = 0.258_819_403_792_806_798_41;

const SERIES_LO: f64 = -4.0;
const SERIES_HI: f64 = 2.0;
const ASYM_POS: f64 = 9.0;
const ASYM_NEG: f64 = -15.0;
const STEP: f64 = 0.5;

/// Returns (Ai(x), Ai'(x)).
pub fn airy(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if (SERIES_LO..=SERIES_HI).contains(&x) {
        maclaurin(x)
    } else if x >= ASYM_POS {
        asymptotic_pos(x)
    } else if x <= ASYM_NEG {
        asymptotic_neg(x)
    } else if x > SERIES_HI {
        let (y, dy) = asymptotic_pos(ASYM_POS);
        taylor_walk(ASYM_POS, y, dy, x)
    } else {
        let (y, dy) = maclaurin(SERIES_LO);
        taylor_walk(SERIES_LO, y, dy, x)
    }
}

pub fn ai(x: f64) -> f64 {
    airy(x).0
}

fn maclaurin(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    let (mut f, mut g) = (1.0, x);
    let (mut fp, mut gp) = (0.0, 1.0);
    let (mut tf, mut tg) = (1.0, x);
    let (mut tfp, mut tgp) = (x * x / 2.0, 1.0);
    fp += tfp;
    for k in 1..200 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tgp *= x3 / ((3.0 * kf) * (3.0 * kf - 2.0));
        if k >= 2 {
            tfp *= x3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0));
            fp += tfp;
        }
        f += tf;
        g += tg;
        gp += tgp;
        let scale = f.abs() + g.abs() + fp.abs() + gp.abs();
        if tf.abs() + tg.abs() + tfp.abs() + tgp.abs() < 1e-18 * scale {
            break;
        }
    }
    (AI0 * f - MINUS_AIP0 * g, AI0 * fp - MINUS_AIP0 * gp)
}

/// Integrate y'' = x y from (x0, y, dy) to `target` with Taylor steps.
fn taylor_walk(mut x0: f64, mut y: f64, mut dy: f64, target: f64) -> (f64, f64) {
    while (target - x0).abs() > 0.0 {
        let h = (target - x0).clamp(-STEP, STEP);
        let (ny, ndy) = taylor_step(x0, y, dy, h);
        y = ny;
        dy = ndy;
        x0 = if (target - x0).abs() <= STEP { target } else { x0 + h };
    }
    (y, dy)
}

fn taylor_step(x0: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    // y(x0 + s) = sum c_k s^k with (k+2)(k+1) c_{k+2} = x0 c_k + c_{k-1}.
    let mut c = [0.0f64; 64];
    c[0] = y;
    c[1] = dy;
    for k in 0..62 {
        let prev = if k >= 1 { c[k - 1] } else { 0.0 };
        c[k + 2] = (x0 * c[k] + prev) / (((k + 2) * (k + 1)) as f64);
    }
    let mut v = 0.0;
    let mut dv = 0.0;
    for k in (0..64).rev() {
        v = v * h + c[k];
        if k >= 1 {
            dv = dv * h + k as f64 * c[k];
        }
    }
    (v, dv)
}

/// Coefficients u_k, v_k of the asymptotic expansions.
fn uv(k_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![1.0];
    let mut v = vec![1.0];
    for k in 1..=k_max {
        let kf = k as f64;
        let prev = u[k - 1];
        let uk = prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        u.push(uk);
        v.push(-(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * uk);
    }
    (u, v)
}

/// Sum of sign^k c_k zeta^-k over the decreasing part of the series.
fn truncated(c: &[f64], zeta: f64, alternate: bool, stride: usize, offset: usize) -> f64 {
    let mut s = 0.0;
    let mut last = f64::INFINITY;
    for (j, k) in (offset..c.len()).step_by(stride).enumerate() {
        let sign = if alternate && j % 2 == 1 { -1.0 } else { 1.0 };
        let term = c[k] / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        s += sign * term;
        last = term.abs();
        if term.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    s
}

fn asymptotic_pos(x: f64) -> (f64, f64) {
    let (u, v) = uv(60);
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    // (-1)^k weighting: every term alternates.
    let su = truncated_alt(&u, zeta);
    let sv = truncated_alt(&v, zeta);
    (e / q * su, -e * q * sv)
}

fn truncated_alt(c: &[f64], zeta: f64) -> f64 {
    let mut s = 0.0;
    let mut last = f64::INFINITY;
    for (k, ck) in c.iter().enumerate() {
        let term = ck / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        s += if k % 2 == 1 { -term } else { term };
        last = term.abs();
        if term.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    s
}

fn asymptotic_neg(x: f64) -> (f64, f64) {
    let (u, v) = uv(60);
    let y = -x;
    let zeta = 2.0 / 3.0 * y * y.sqrt();
    let q = y.powf(0.25);
    let (s, c) = (zeta - PI / 4.0).sin_cos();
    let ue = truncated(&u, zeta, true, 2, 0);
    let uo = truncated(&u, zeta, true, 2, 1);
    let ve = truncated(&v, zeta, true, 2, 0);
    let vo = truncated(&v, zeta, true, 2, 1);
    let ai = (c * ue + s * uo) / (PI.sqrt() * q);
    let aip = q * (s * ve - c * vo) / PI.sqrt();
    (ai, aip)
}
