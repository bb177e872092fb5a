//! Exact finite-n correlation kernel by biorthogonalization in multiple
//! precision, the sine and Airy reference kernels, and the scaling checks
//! that compare them.

use std::f64::consts::PI;

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::curve::SpectralCurve;
use crate::density::{density_point, edge_fit, h_values, support, Edge};
use crate::error::{Error, Result};
use crate::numerics::airy::airy;
use crate::numerics::mp::{gauss_hermite, lu_full_pivot, unit_lower_inverse, upper_inverse, MpMatrix};
use crate::numerics::quad::composite_gl;
use crate::params::{ModelParams, Regime};

/// Largest supported path count.
pub const N_MAX: usize = 128;

const SIGNS: [f64; 2] = [1.0, -1.0];

/// Transition density of Brownian motion with variance 1/n from a to x in time t.
pub fn transition_density(t: f64, a: f64, x: f64, n: usize) -> f64 {
    let n = n as f64;
    (n / (2.0 * PI * t)).sqrt() * (-n * (x - a) * (x - a) / (2.0 * t)).exp()
}

/// The four Gaussian weights w_{1,i}, w_{2,k} (i, k in {1, 2}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSystem {
    pub params: ModelParams,
    pub n: usize,
}

impl WeightSystem {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Ok(WeightSystem { params: *params, n: params.require_n()? })
    }

    /// exp(-n/(2t) (x^2 - 2 s_i a x)) with s_1 = 1, s_2 = -1.
    pub fn w1(&self, i: usize, x: f64) -> f64 {
        let (a, t, n) = (self.params.a, self.params.t, self.n as f64);
        (-n / (2.0 * t) * (x * x - 2.0 * SIGNS[i - 1] * a * x)).exp()
    }

    /// exp(-n/(2(1-t)) (x^2 - 2 s_k b x)).
    pub fn w2(&self, k: usize, x: f64) -> f64 {
        let (b, t, n) = (self.params.b, self.params.t, self.n as f64);
        (-n / (2.0 * (1.0 - t)) * (x * x - 2.0 * SIGNS[k - 1] * b * x)).exp()
    }

    /// Coefficient of x^2 in log(w_{1,i} w_{2,k}); the same for all i, k.
    pub fn quadratic_coefficient(&self) -> f64 {
        let t = self.params.t;
        -(self.n as f64) / (2.0 * t * (1.0 - t))
    }
}

/// Working precision used when none is given.
pub fn default_precision(n: usize) -> u32 {
    if n <= 64 {
        256
    } else {
        768
    }
}

/// Biorthogonal functions phi_j = sum_i A_ji f_i and psi_j = sum_l B_jl g_l.
///
/// The left basis is f = r^p exp(-n (x - s a)^2 / (2t)) with
/// r = (x - s a) / sqrt(t/n), and the right basis g = r^q exp(-n (x - s b)^2
/// / (2(1-t))) with r = (x - s b) / sqrt((1-t)/n); p, q < n/2, first the
/// s = +1 block then s = -1. Each block spans the same functions as x^p w_{1,i}
/// (or x^q w_{2,k}), so K is unchanged, while the Gram matrix loses far fewer
/// bits in the factorization than with plain monomials.
#[derive(Debug, Clone)]
pub struct BiorthogonalSystem {
    pub params: ModelParams,
    pub n: usize,
    pub precision_bits: u32,
    pub gram: MpMatrix,
    pub a: MpMatrix,
    pub b: MpMatrix,
    pub pivot_spread_log2: f64,
    /// A^T B, so that K(x, y) = f(x)^T C g(y).
    coef: MpMatrix,
    left_centers: [Float; 2],
    right_centers: [Float; 2],
    left_scale: Float,
    right_scale: Float,
    left_width: Float,
    right_width: Float,
}

/// I[p][q] = int (x - alpha)^p (x - beta)^q exp(-(x - mu)^2 / (2 sigma^2)) dx
/// times the prefactor carried by `m0`, given d_a = mu - alpha and
/// d_b = mu - beta. Integration by parts gives
/// I(p+1, q) = d_a I(p, q) + sigma^2 (p I(p-1, q) + q I(p, q-1)),
/// and the same with the roles of p and q swapped.
fn pair_moments(half: usize, m0: &Float, da: &Float, db: &Float, sigma2: &Float) -> Vec<Vec<Float>> {
    let prec = m0.prec();
    let mut i = vec![vec![Float::new(prec); half]; half];
    i[0][0] = m0.clone();
    for q in 0..half {
        if q > 0 {
            let mut v = Float::with_val(prec, db * &i[0][q - 1]);
            if q > 1 {
                v += Float::with_val(prec, sigma2 * &i[0][q - 2]) * ((q - 1) as u32);
            }
            i[0][q] = v;
        }
        for p in 0..half - 1 {
            let mut v = Float::with_val(prec, da * &i[p][q]);
            if p > 0 {
                v += Float::with_val(prec, sigma2 * &i[p - 1][q]) * (p as u32);
            }
            if q > 0 {
                v += Float::with_val(prec, sigma2 * &i[p][q - 1]) * (q as u32);
            }
            i[p + 1][q] = v;
        }
    }
    i
}

/// Gram matrix and its biorthogonalization at `precision_bits`.
pub fn gram_matrix(params: &ModelParams, precision_bits: u32) -> Result<BiorthogonalSystem> {
    BiorthogonalSystem::new(params, precision_bits)
}

impl BiorthogonalSystem {
    pub fn new(params: &ModelParams, precision_bits: u32) -> Result<Self> {
        let n = params.require_n()?;
        if n > N_MAX {
            return Err(Error::Domain(format!("n = {n} exceeds the supported maximum {N_MAX}")));
        }
        let prec = precision_bits;
        let (a, b, t) = (params.a, params.b, params.t);
        let half = n / 2;
        let mp = |v: f64| Float::with_val(prec, v);
        let nf = mp(n as f64);
        let tf = mp(t);
        let sf = Float::with_val(prec, 1 - &tf);
        let left_centers = [mp(a), mp(-a)];
        let right_centers = [mp(b), mp(-b)];
        let left_scale = Float::with_val(prec, &nf / (2 * tf.clone()));
        let right_scale = Float::with_val(prec, &nf / (2 * sf.clone()));
        let sigma2 = Float::with_val(prec, &tf * &sf) / &nf;
        let root = Float::with_val(prec, 2 * Float::with_val(prec, Constant::Pi) * &sigma2).sqrt();

        let left_width = Float::with_val(prec, &tf / &nf).sqrt();
        let right_width = Float::with_val(prec, &sf / &nf).sqrt();
        let mut gram = MpMatrix::zeros(n, prec);
        for fl in 0..2 {
            for fr in 0..2 {
                let (al, be) = (&left_centers[fl], &right_centers[fr]);
                let mu = Float::with_val(prec, al * &sf) + Float::with_val(prec, be * &tf);
                let gap = Float::with_val(prec, al - be);
                let m0 = Float::with_val(prec, -(Float::with_val(prec, &gap * &gap) * &nf) / 2u32).exp() * &root;
                let i = pair_moments(half, &m0, &Float::with_val(prec, &mu - al), &Float::with_val(prec, &mu - be), &sigma2);
                for p in 0..half {
                    for q in 0..half {
                        let v = Float::with_val(prec, &i[p][q] / Float::with_val(prec, left_width.clone().pow(p as u32) * right_width.clone().pow(q as u32)));
                        *gram.get_mut(fl * half + p, fr * half + q) = v;
                    }
                }
            }
        }
        let lu = lu_full_pivot(&gram, prec / 2)?;
        // P G Q = L U gives A = L^-1 P and B = U^-T Q^T.
        let linv = unit_lower_inverse(&lu.l);
        let uinv = upper_inverse(&lu.u);
        let mut am = MpMatrix::zeros(n, prec);
        let mut bm = MpMatrix::zeros(n, prec);
        for j in 0..n {
            for k in 0..n {
                *am.get_mut(j, lu.row_perm[k]) = linv.get(j, k).clone();
                *bm.get_mut(j, lu.col_perm[k]) = uinv.get(k, j).clone();
            }
        }
        let coef = am.transpose().matmul(&bm);
        Ok(BiorthogonalSystem {
            params: *params,
            n,
            precision_bits,
            gram,
            a: am,
            b: bm,
            pivot_spread_log2: lu.pivot_spread_log2,
            coef,
            left_centers,
            right_centers,
            left_scale,
            right_scale,
            left_width,
            right_width,
        })
    }

    /// Build at the default precision, adding 128 bits after each precision
    /// failure up to 2048 bits.
    pub fn auto(params: &ModelParams) -> Result<Self> {
        let mut bits = default_precision(params.require_n()?);
        loop {
            match Self::new(params, bits) {
                Err(Error::Precision(_)) if bits < 2048 => bits += 128,
                other => return other,
            }
        }
    }

    fn basis(&self, x: f64, centers: &[Float; 2], scale: &Float, width: &Float) -> Vec<Float> {
        let prec = self.precision_bits;
        let half = self.n / 2;
        let xf = Float::with_val(prec, x);
        let mut out = Vec::with_capacity(self.n);
        for c in centers {
            let d = Float::with_val(prec, &xf - c);
            let r = Float::with_val(prec, &d / width);
            let mut v = Float::with_val(prec, -(Float::with_val(prec, &d * &d) * scale)).exp();
            for _ in 0..half {
                out.push(v.clone());
                v *= &r;
            }
        }
        out
    }

    fn left(&self, x: f64) -> Vec<Float> {
        self.basis(x, &self.left_centers, &self.left_scale, &self.left_width)
    }

    fn right(&self, y: f64) -> Vec<Float> {
        self.basis(y, &self.right_centers, &self.right_scale, &self.right_width)
    }

    /// f(x)^T C.
    fn left_row(&self, x: f64) -> Vec<Float> {
        let f = self.left(x);
        let n = self.n;
        let mut out = vec![Float::new(self.precision_bits); n];
        for (i, fi) in f.iter().enumerate() {
            for (l, o) in out.iter_mut().enumerate() {
                *o += fi * self.coef.get(i, l);
            }
        }
        out
    }

    fn dot(&self, r: &[Float], g: &[Float]) -> f64 {
        let mut acc = Float::new(self.precision_bits);
        for (x, y) in r.iter().zip(g) {
            acc += x * y;
        }
        acc.to_f64()
    }

    /// K_n(x, y) = sum_j phi_j(x) psi_j(y).
    pub fn kernel(&self, x: f64, y: f64) -> f64 {
        self.dot(&self.left_row(x), &self.right(y))
    }

    /// K_n(x_a, y_b) for all pairs, rows indexed by `xs`.
    pub fn kernel_matrix(&self, xs: &[f64], ys: &[f64]) -> Vec<Vec<f64>> {
        let rows: Vec<Vec<Float>> = xs.par_iter().map(|&x| self.left_row(x)).collect();
        let cols: Vec<Vec<Float>> = ys.par_iter().map(|&y| self.right(y)).collect();
        rows.par_iter().map(|r| cols.iter().map(|g| self.dot(r, g)).collect()).collect()
    }

    pub fn diagonal(&self, xs: &[f64]) -> Vec<f64> {
        xs.par_iter().map(|&x| self.kernel(x, x)).collect()
    }

    /// max |int phi_j psi_k - delta_jk| with the integrals taken by
    /// Gauss-Hermite quadrature instead of the moment recurrence.
    pub fn biorthogonality_residual(&self) -> f64 {
        let prec = self.precision_bits;
        let n = self.n;
        let half = n / 2;
        let (nodes, weights) = gauss_hermite(n, prec);
        let tf = Float::with_val(prec, self.params.t);
        let sf = Float::with_val(prec, 1 - &tf);
        let nf = Float::with_val(prec, n as f64);
        let sigma2 = Float::with_val(prec, &tf * &sf) / &nf;
        let width = Float::with_val(prec, 2 * sigma2).sqrt();
        let mut gq = MpMatrix::zeros(n, prec);
        for fl in 0..2 {
            for fr in 0..2 {
                let (al, be) = (&self.left_centers[fl], &self.right_centers[fr]);
                let mu = Float::with_val(prec, al * &sf) + Float::with_val(prec, be * &tf);
                let gap = Float::with_val(prec, al - be);
                let pref = Float::with_val(prec, -(Float::with_val(prec, &gap * &gap) * &nf) / 2u32).exp() * &width;
                // x = mu + width * y turns the Gaussian into the Hermite weight.
                for (y, w) in nodes.iter().zip(&weights) {
                    let x = Float::with_val(prec, &mu + Float::with_val(prec, &width * y));
                    let rl = Float::with_val(prec, &x - al) / &self.left_width;
                    let rr = Float::with_val(prec, &x - be) / &self.right_width;
                    let mut pl = Float::with_val(prec, w * &pref);
                    for p in 0..half {
                        let mut pr = pl.clone();
                        for q in 0..half {
                            *gq.get_mut(fl * half + p, fr * half + q) += &pr;
                            pr *= &rr;
                        }
                        pl *= &rl;
                    }
                }
            }
        }
        let prod = self.a.matmul(&gq).matmul(&self.b.transpose());
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let e = if j == k { 1.0 } else { 0.0 };
                let d = Float::with_val(prec, prod.get(j, k) - e).abs().to_f64();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Half-width of an interval holding all of K(x, x) up to a Gaussian tail
    /// of 1e-16.
    pub fn integration_bound(&self) -> f64 {
        let (a, b, t) = (self.params.a, self.params.b, self.params.t);
        let reach = SpectralCurve::new(self.params)
            .map(|c| c.branch.z1)
            .unwrap_or(a * (1.0 - t) + b * t + 2.0 * (t * (1.0 - t)).sqrt());
        reach + 10.0 * (t * (1.0 - t) / self.n as f64).sqrt() * (2.0 * 16.0 * 10f64.ln()).sqrt()
    }

    fn quadrature_nodes(&self) -> Vec<(f64, f64)> {
        let x = self.integration_bound();
        let panels = 8 * self.n + 40;
        let mut out = Vec::with_capacity(panels * 20);
        let h = 2.0 * x / panels as f64;
        let rule = crate::numerics::quad::GaussLegendre::cached(20);
        for k in 0..panels {
            let lo = -x + h * k as f64;
            out.extend(rule.mapped(lo, lo + h));
        }
        out
    }

    /// int K(x, x) dx, which equals n for a projection kernel.
    pub fn trace(&self) -> f64 {
        let q = self.quadrature_nodes();
        let xs: Vec<f64> = q.iter().map(|p| p.0).collect();
        let d = self.diagonal(&xs);
        d.iter().zip(&q).map(|(k, p)| k * p.1).sum()
    }

    /// sup |int K(x, s) K(s, y) ds - K(x, y)| / sup |K(x, y)| over the pairs
    /// formed from `xs` x `ys`.
    pub fn reproducing_residual(&self, xs: &[f64], ys: &[f64]) -> f64 {
        let q = self.quadrature_nodes();
        let s: Vec<f64> = q.iter().map(|p| p.0).collect();
        let left = self.kernel_matrix(xs, &s);
        let right = self.kernel_matrix(&s, ys);
        let direct = self.kernel_matrix(xs, ys);
        let norm = direct.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for (i, row) in left.iter().enumerate() {
            for j in 0..ys.len() {
                let conv: f64 = (0..s.len()).map(|k| row[k] * right[k][j] * q[k].1).sum();
                worst = worst.max((conv - direct[i][j]).abs());
            }
        }
        worst / norm
    }
}

// ------------------------------------------------------------------ gauge

/// Choice of h in the rescaled kernel exp(n (h(x) - h(y))) K(x, y).
#[derive(Debug, Clone, Copy)]
pub enum Gauge<'a> {
    Identity,
    /// The density module's h inside the support, 0 outside.
    Density(&'a SpectralCurve),
}

impl Gauge<'_> {
    pub fn h(&self, xs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Gauge::Identity => Ok(vec![0.0; xs.len()]),
            Gauge::Density(c) => {
                let inside: Vec<usize> = (0..xs.len())
                    .filter(|&i| support(c).iter().any(|&(lo, hi)| xs[i] > lo && xs[i] < hi))
                    .collect();
                let pts: Vec<f64> = inside.iter().map(|&i| xs[i]).collect();
                let mut out = vec![0.0; xs.len()];
                for (&i, v) in inside.iter().zip(h_values(c, &pts)?) {
                    out[i] = v.0;
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEvaluation {
    pub x: f64,
    pub y: f64,
    pub k: f64,
    pub k_hat: f64,
    pub n: usize,
}

pub fn kernel_eval(x: f64, y: f64, sys: &BiorthogonalSystem, gauge: Gauge) -> Result<KernelEvaluation> {
    let k = sys.kernel(x, y);
    let h = gauge.h(&[x, y])?;
    let k_hat = (sys.n as f64 * (h[0] - h[1])).exp() * k;
    Ok(KernelEvaluation { x, y, k, k_hat, n: sys.n })
}

// ------------------------------------------------------- reference kernels

pub fn sine_kernel(u: f64, v: f64) -> f64 {
    let d = u - v;
    if d == 0.0 {
        1.0
    } else {
        (PI * d).sin() / (PI * d)
    }
}

pub fn airy_kernel(u: f64, v: f64) -> f64 {
    if (u - v).abs() < 1e-6 {
        let w = 0.5 * (u + v);
        let (ai, aip) = airy(w);
        return aip * aip - w * ai * ai;
    }
    airy_numerator(u, v) / (u - v)
}

/// Ai(u) Ai'(v) - Ai'(u) Ai(v).
pub fn airy_numerator(u: f64, v: f64) -> f64 {
    let (au, apu) = airy(u);
    let (av, apv) = airy(v);
    au * apv - apu * av
}

// --------------------------------------------------------- scaling checks

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingMode {
    Bulk,
    Edge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeId {
    Z1,
    Z2,
    MinusZ1,
    MinusZ2,
}

/// Square grid of (u, v) pairs with `points` values per axis on [lo, hi].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl ScalingGrid {
    pub fn bulk() -> Self {
        ScalingGrid { lo: -2.0, hi: 2.0, points: 9 }
    }

    pub fn edge() -> Self {
        ScalingGrid { lo: -2.0, hi: 3.0, points: 11 }
    }

    pub fn axis(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        (0..self.points).map(|k| self.lo + (self.hi - self.lo) * k as f64 / (self.points - 1) as f64).collect()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let ax = self.axis();
        ax.iter().flat_map(|&u| ax.iter().map(move |&v| (u, v))).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub mode: ScalingMode,
    pub edge: Option<EdgeId>,
    /// Bulk point or edge location.
    pub x0: f64,
    /// n rho(x0) in the bulk, (c n)^(2/3) at an edge, both per unit n.
    pub local_scale: f64,
    pub n_list: Vec<usize>,
    pub grid: Vec<(f64, f64)>,
    /// measured[i][k]: gauge-invariant product at n_list[i], grid[k].
    pub measured: Vec<Vec<f64>>,
    pub reference: Vec<f64>,
    pub sup_errors: Vec<f64>,
    /// Least-squares slope of log sup_error against log n.
    pub rate: f64,
}

fn fitted_rate(ns: &[usize], errs: &[f64]) -> f64 {
    if ns.len() < 2 {
        return f64::NAN;
    }
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Compare K(x, y) K(y, x) / scale^2 with reference(u, v)^2 at
/// x = map(n, u), y = map(n, v). The product is formed from the unrescaled
/// kernel, so the conjugation by h drops out exactly.
fn scaling_sweep(
    params: &ModelParams,
    n_list: &[usize],
    grid: &ScalingGrid,
    map: impl Fn(usize, f64) -> f64,
    scale: impl Fn(usize) -> f64,
    reference: impl Fn(f64, f64) -> f64,
) -> Result<(Vec<(f64, f64)>, Vec<Vec<f64>>, Vec<f64>, Vec<f64>)> {
    let ax = grid.axis();
    let pairs = grid.pairs();
    let refs: Vec<f64> = pairs.iter().map(|&(u, v)| reference(u, v).powi(2)).collect();
    let mut measured = Vec::with_capacity(n_list.len());
    let mut sup = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sys = BiorthogonalSystem::auto(&params.with_n(n)?)?;
        let pts: Vec<f64> = ax.iter().map(|&u| map(n, u)).collect();
        let k = sys.kernel_matrix(&pts, &pts);
        let s2 = scale(n).powi(2);
        let m = ax.len();
        let vals: Vec<f64> = (0..m * m).map(|idx| k[idx / m][idx % m] * k[idx % m][idx / m] / s2).collect();
        let err = vals.iter().zip(&refs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        measured.push(vals);
        sup.push(err);
    }
    Ok((pairs, measured, refs, sup))
}

pub fn bulk_scaling_check(x0: f64, n_list: &[usize], grid: &ScalingGrid, params: &ModelParams) -> Result<ScalingReport> {
    let curve = SpectralCurve::new(*params)?;
    let inside = support(&curve).iter().any(|&(lo, hi)| x0 > lo + curve.tau_bp() && x0 < hi - curve.tau_bp());
    if !inside {
        return Err(Error::Domain(format!("x0 = {x0} is not inside the support away from its edges")));
    }
    let rho = density_point(&curve, x0)?.rho;
    let (grid_pts, measured, reference, sup_errors) = scaling_sweep(
        params,
        n_list,
        grid,
        |n, u| x0 + u / (n as f64 * rho),
        |n| n as f64 * rho,
        sine_kernel,
    )?;
    Ok(ScalingReport {
        mode: ScalingMode::Bulk,
        edge: None,
        x0,
        local_scale: rho,
        n_list: n_list.to_vec(),
        grid: grid_pts,
        measured,
        reference,
        rate: fitted_rate(n_list, &sup_errors),
        sup_errors,
    })
}

pub fn edge_scaling_check(edge: EdgeId, n_list: &[usize], grid: &ScalingGrid, params: &ModelParams) -> Result<ScalingReport> {
    let curve = SpectralCurve::new(*params)?;
    let inner = matches!(edge, EdgeId::Z2 | EdgeId::MinusZ2);
    if inner && curve.branch.regime == Regime::OneCut {
        return Err(Error::Domain("z2 is not a real edge in the one-cut regime".into()));
    }
    let c = edge_fit(&curve, if inner { Edge::Z2 } else { Edge::Z1 })?.constant;
    let (z1, z2) = (curve.branch.z1, curve.branch.z2);
    // Position of the edge and the direction in which u points outward.
    let (e, out) = match edge {
        EdgeId::Z1 => (z1, 1.0),
        EdgeId::MinusZ1 => (-z1, -1.0),
        EdgeId::Z2 => (z2, -1.0),
        EdgeId::MinusZ2 => (-z2, 1.0),
    };
    let (grid_pts, measured, reference, sup_errors) = scaling_sweep(
        params,
        n_list,
        grid,
        |n, u| e + out * u / (c * n as f64).powf(2.0 / 3.0),
        |n| (c * n as f64).powf(2.0 / 3.0),
        airy_kernel,
    )?;
    Ok(ScalingReport {
        mode: ScalingMode::Edge,
        edge: Some(edge),
        x0: e,
        local_scale: c.powf(2.0 / 3.0),
        n_list: n_list.to_vec(),
        grid: grid_pts,
        measured,
        reference,
        rate: fitted_rate(n_list, &sup_errors),
        sup_errors,
    })
}

// --------------------------------------------------------- diagonal vs rho

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagRow {
    pub x: f64,
    pub k_over_n: f64,
    pub rho: f64,
    pub abs_err: f64,
}

/// `m` evenly spaced support points at distance more than `margin` from
/// every edge.
pub fn bulk_points(curve: &SpectralCurve, margin: f64, m: usize) -> Vec<f64> {
    let mut out = vec![];
    for (lo, hi) in support(curve) {
        let (l, h) = (lo + margin, hi - margin);
        if h <= l {
            continue;
        }
        out.extend((0..m).map(|k| l + (h - l) * (k as f64 + 0.5) / m as f64));
    }
    out
}

/// (1/n) K_n(x, x) next to rho(x).
pub fn density_comparison(params: &ModelParams, xs: &[f64]) -> Result<Vec<DiagRow>> {
    let n = params.require_n()?;
    let curve = SpectralCurve::new(*params)?;
    let sys = BiorthogonalSystem::auto(params)?;
    let diag = sys.diagonal(xs);
    xs.iter()
        .zip(diag)
        .map(|(&x, k)| {
            let rho = density_point(&curve, x)?.rho;
            let k_over_n = k / n as f64;
            Ok(DiagRow { x, k_over_n, rho, abs_err: (k_over_n - rho).abs() })
        })
        .collect()
}

/// Sup over `xs` of |(1/n) K_n(x, x) - rho(x)|.
pub fn density_sup_error(params: &ModelParams, xs: &[f64]) -> Result<f64> {
    Ok(density_comparison(params, xs)?.iter().map(|r| r.abs_err).fold(0.0, f64::max))
}

pub fn integrate_diagonal(sys: &BiorthogonalSystem, lo: f64, hi: f64, panels: usize) -> f64 {
    composite_gl(|x| sys.kernel(x, x), lo, hi, panels, 20)
}
