//! Limiting mean density, support, edge constants and the rescaling function h.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{Side, SpectralCurve};
use crate::error::{Error, Result};
use crate::numerics::quad::clenshaw_curtis;
use crate::params::{ModelParams, Regime};
use crate::C64;

/// Points per chain when boundary values are evaluated in parallel.
const CHUNK: usize = 128;

/// A density sample with its accuracy flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    pub x: f64,
    pub rho: f64,
    /// Set when x is within the branch point tolerance of a support edge.
    pub low_accuracy: bool,
}

/// Which real edge an edge constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Edge {
    Z1,
    Z2,
}

/// Result of the log-log edge fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeFit {
    pub edge: Edge,
    pub exponent: f64,
    /// c with rho(x) ~ (c / pi) |x - e|^(1/2).
    pub constant: f64,
    /// The same constant from the square-root behavior of xi_1 just outside
    /// the support.
    pub constant_from_sheet: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Clenshaw-Curtis nodes per support interval, endpoints included.
    pub nodes_per_interval: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { nodes_per_interval: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub params: ModelParams,
    pub support: Vec<(f64, f64)>,
    /// Increasing nodes, clustered at the edges of every support interval.
    pub grid: Vec<f64>,
    pub rho: Vec<f64>,
    /// Quadrature weights on `grid`; their dot product with `rho` is `mass`.
    pub weights: Vec<f64>,
    pub mass: f64,
    pub c1: f64,
    pub c2: Option<f64>,
    pub h_grid: Vec<f64>,
    /// Largest |Im| of the lambda combination behind `h_grid`.
    pub h_imag_max: f64,
}

impl DensityProfile {
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.rho.len();
        (0..n).map(|i| (self.rho[i] - self.rho[n - 1 - i]).abs()).fold(0.0, f64::max)
    }
}

pub fn support(curve: &SpectralCurve) -> Vec<(f64, f64)> {
    let b = &curve.branch;
    match b.regime {
        Regime::TwoCuts => vec![(-b.z1, -b.z2), (b.z2, b.z1)],
        Regime::OneCut => vec![(-b.z1, b.z1)],
    }
}

fn in_open_support(curve: &SpectralCurve, x: f64) -> bool {
    support(curve).iter().any(|&(lo, hi)| x > lo && x < hi)
}

/// Tiny offset used in place of x = 0, where the vertical cut meets the axis.
fn origin_offset(curve: &SpectralCurve) -> f64 {
    1e-9 * curve.scale()
}

fn rho_from(curve: &SpectralCurve, x: f64, bv: &[C64; 4]) -> f64 {
    let v = if x >= 0.0 { bv[0] } else { bv[1] };
    let im = v.im / std::f64::consts::PI;
    if im.abs() < curve.tol.class {
        0.0
    } else {
        im.max(0.0)
    }
}

/// Density at x from the boundary values of sheet 1 (x > 0) or sheet 2 (x < 0).
pub fn density_point(curve: &SpectralCurve, x: f64) -> Result<DensityValue> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {x}")));
    }
    let low_accuracy = curve.branch.real_edges().iter().any(|e| (x.abs() - e).abs() <= curve.tau_bp());
    if !in_open_support(curve, x) {
        return Ok(DensityValue { x, rho: 0.0, low_accuracy });
    }
    let rho = if x.abs() < origin_offset(curve) {
        let d = origin_offset(curve);
        let p = rho_from(curve, d, &curve.boundary_values(d, Side::Above)?);
        let m = rho_from(curve, -d, &curve.boundary_values(-d, Side::Above)?);
        0.5 * (p + m)
    } else {
        rho_from(curve, x, &curve.boundary_values(x, Side::Above)?)
    };
    Ok(DensityValue { x, rho, low_accuracy })
}

pub fn density_at(x: f64, params: &ModelParams) -> Result<f64> {
    Ok(density_point(&SpectralCurve::new(*params)?, x)?.rho)
}

/// Density on same-sign points, chained in parallel chunks.
fn density_chain(curve: &SpectralCurve, xs: &[f64]) -> Result<Vec<f64>> {
    let parts: Vec<Result<Vec<f64>>> = xs
        .par_chunks(CHUNK)
        .map(|c| {
            let bv = curve.boundary_values_grid(c, Side::Above)?;
            Ok(c.iter().zip(&bv).map(|(&x, v)| rho_from(curve, x, v)).collect())
        })
        .collect();
    let mut out = Vec::with_capacity(xs.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Points at distances 10^-6 .. 10^-3 times z1 from an edge, log-spaced.
fn fit_distances(z1: f64) -> Vec<f64> {
    let m = 25;
    (0..m).map(|k| z1 * 10f64.powf(-6.0 + 3.0 * k as f64 / (m - 1) as f64)).collect()
}

pub fn edge_fit(curve: &SpectralCurve, edge: Edge) -> Result<EdgeFit> {
    let b = &curve.branch;
    let (e, inward) = match (edge, b.regime) {
        (Edge::Z1, _) => (b.z1, -1.0),
        (Edge::Z2, Regime::TwoCuts) => (b.z2, 1.0),
        (Edge::Z2, Regime::OneCut) => {
            return Err(Error::Domain("z2 is not a real edge in the one-cut regime".into()));
        }
    };
    let ds = fit_distances(b.z1);
    let mut lx = Vec::with_capacity(ds.len());
    let mut ly = Vec::with_capacity(ds.len());
    for &d in &ds {
        let rho = density_point(curve, e + inward * d)?.rho;
        if !(rho > 0.0) {
            return Err(Error::EdgeFit { exponent: f64::NAN, band: 0.02 });
        }
        lx.push(d.ln());
        ly.push(rho.ln());
    }
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    if (exponent - 0.5).abs() > 0.02 {
        return Err(Error::EdgeFit { exponent, band: 0.02 });
    }
    // Fixed square-root slope, weighted to the innermost decade.
    let inner: Vec<usize> = (0..lx.len()).filter(|&i| ds[i] <= 1e-5 * b.z1).collect();
    let amp = inner.iter().map(|&i| ly[i] - 0.5 * lx[i]).sum::<f64>() / inner.len() as f64;
    let constant = std::f64::consts::PI * amp.exp();
    let constant_from_sheet = sheet_constant(curve, e, -inward)?;
    Ok(EdgeFit { edge, exponent, constant, constant_from_sheet })
}

/// lim |xi_1(e + s d) - xi_1(e)| / sqrt(d) for d -> 0 outside the support,
/// by Neville extrapolation in sqrt(d).
fn sheet_constant(curve: &SpectralCurve, e: f64, outward: f64) -> Result<f64> {
    let star = curve.branch_value(e);
    let z1 = curve.branch.z1;
    let ds = [1e-3 * z1, 1e-4 * z1, 1e-5 * z1, 1e-6 * z1];
    let mut s = [0.0; 4];
    let mut r = [0.0; 4];
    for (k, &d) in ds.iter().enumerate() {
        let f = curve.frame(C64::new(e + outward * d, 0.0), None)?;
        s[k] = d.sqrt();
        r[k] = (f.sheet(1) - star).norm() / s[k];
    }
    // Neville at s = 0.
    let mut p = r;
    for lvl in 1..4 {
        for i in 0..4 - lvl {
            p[i] = (s[i + lvl] * p[i] - s[i] * p[i + 1]) / (s[i + lvl] - s[i]);
        }
    }
    Ok(p[0])
}

pub fn edge_constant(edge: Edge, params: &ModelParams) -> Result<f64> {
    Ok(edge_fit(&SpectralCurve::new(*params)?, edge)?.constant)
}

/// Imaginary part of the lambda combination modulo pi/2: the half-integer
/// periods make lambda_j ambiguous by multiples of pi*i.
fn reduced_imag(im: f64) -> f64 {
    let q = std::f64::consts::FRAC_PI_2;
    im - q * (im / q).round()
}

fn h_point(curve: &SpectralCurve, x: f64) -> Result<f64> {
    if !in_open_support(curve, x) {
        return Err(Error::Domain(format!("h is defined on the open support; got x = {x}")));
    }
    Ok(if x.abs() < origin_offset(curve) { origin_offset(curve) } else { x })
}

/// h(x) and the imaginary part of the lambda combination it is built from.
pub fn h_value(curve: &SpectralCurve, x: f64) -> Result<(f64, f64)> {
    let x = h_point(curve, x)?;
    let (j, k) = if x > 0.0 { (1, 3) } else { (2, 4) };
    let z = C64::new(x, 0.0);
    let s = curve.lambda(j, z, Some(Side::Above))? + curve.lambda(k, z, Some(Side::Above))?;
    Ok((0.5 * s.re - x * x / (2.0 * (1.0 - curve.params.t)), reduced_imag(0.5 * s.im)))
}

pub fn h_function(x: f64, params: &ModelParams) -> Result<f64> {
    Ok(h_value(&SpectralCurve::new(*params)?, x)?.0)
}

/// h at many support points, integrated along the real axis inward from
/// each outer edge. Much cheaper than repeated `h_value` on a fine grid.
pub fn h_values(curve: &SpectralCurve, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    let pts: Vec<f64> = xs.iter().map(|&x| h_point(curve, x)).collect::<Result<_>>()?;
    let mut out = vec![(0.0, 0.0); xs.len()];
    let mut pos: Vec<usize> = (0..pts.len()).filter(|&i| pts[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..pts.len()).filter(|&i| pts[i] < 0.0).collect();
    pos.sort_by(|&i, &k| pts[k].partial_cmp(&pts[i]).unwrap());
    neg.sort_by(|&i, &k| pts[i].partial_cmp(&pts[k]).unwrap());
    for idx in [&pos, &neg] {
        let chain: Vec<f64> = idx.iter().map(|&i| pts[i]).collect();
        for (&i, v) in idx.iter().zip(h_chain(curve, &chain)?) {
            out[i] = v;
        }
    }
    Ok(out)
}

/// h at same-sign support points ordered away from the outer edge.
fn h_chain(curve: &SpectralCurve, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    if xs.is_empty() {
        return Ok(vec![]);
    }
    let right = xs[0] > 0.0;
    let lam = curve.lambda_boundary_along(right, xs)?;
    let (j, k) = if right { (0, 2) } else { (1, 3) };
    let q = 2.0 * (1.0 - curve.params.t);
    Ok(xs
        .iter()
        .zip(&lam)
        .map(|(&x, l)| (0.5 * (l[j].re + l[k].re) - x * x / q, reduced_imag(0.5 * (l[j].im + l[k].im))))
        .collect())
}

pub fn density_profile(curve: &SpectralCurve, spec: GridSpec) -> Result<DensityProfile> {
    let m = spec.nodes_per_interval;
    if m < 3 {
        return Err(Error::Domain("a density grid needs at least three nodes per interval".into()));
    }
    // An even panel count would put a node at x = 0 in the one-cut regime.
    let (nodes, w) = clenshaw_curtis(m - 1);
    let sup = support(curve);
    let mut grid = Vec::with_capacity(m * sup.len());
    let mut weights = Vec::with_capacity(m * sup.len());
    for &(lo, hi) in &sup {
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for k in (0..m).rev() {
            let x = match k {
                0 => hi,
                _ if k == m - 1 => lo,
                _ => c + r * nodes[k],
            };
            grid.push(x);
            weights.push(r * w[k]);
        }
    }
    // Mirror the negative half so the grid is exactly symmetric.
    let n = grid.len();
    for i in 0..n / 2 {
        grid[i] = -grid[n - 1 - i];
        weights[i] = weights[n - 1 - i];
    }
    let edges = curve.branch.real_edges();
    let is_edge = |x: f64| edges.iter().any(|e| x.abs() == *e);
    let pos: Vec<usize> = (0..n).filter(|&i| grid[i] > 0.0 && !is_edge(grid[i])).collect();
    let neg: Vec<usize> = (0..n).filter(|&i| grid[i] < 0.0 && !is_edge(grid[i])).collect();
    let mut rho = vec![0.0; n];
    for idx in [&pos, &neg] {
        let xs: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        for (&i, v) in idx.iter().zip(density_chain(curve, &xs)?) {
            rho[i] = v;
        }
    }
    let mass = rho.iter().zip(&weights).map(|(r, w)| r * w).sum();

    let q = 2.0 * (1.0 - curve.params.t);
    let z1 = curve.branch.z1;
    // lambda_1 and lambda_3 vanish at z1, and lambda_2, lambda_4 at -z1 up to
    // imaginary constants.
    let mut h_grid: Vec<f64> = grid.iter().map(|x| -x * x / q).collect();
    let mut h_imag_max = 0.0f64;
    let inner = |x: f64| x.abs() != z1;
    let pos_h: Vec<usize> = (0..n).rev().filter(|&i| grid[i] > 0.0 && inner(grid[i])).collect();
    let neg_h: Vec<usize> = (0..n).filter(|&i| grid[i] < 0.0 && inner(grid[i])).collect();
    for idx in [&pos_h, &neg_h] {
        let xs: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
        for (&i, (h, im)) in idx.iter().zip(h_chain(curve, &xs)?) {
            h_grid[i] = h;
            h_imag_max = h_imag_max.max(im.abs());
        }
    }

    let c1 = edge_fit(curve, Edge::Z1)?.constant;
    let c2 = match curve.branch.regime {
        Regime::TwoCuts => Some(edge_fit(curve, Edge::Z2)?.constant),
        Regime::OneCut => None,
    };
    Ok(DensityProfile { params: curve.params, support: sup, grid, rho, weights, mass, c1, c2, h_grid, h_imag_max })
}

pub fn density_profile_for(params: &ModelParams, spec: GridSpec) -> Result<DensityProfile> {
    density_profile(&SpectralCurve::new(*params)?, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(a: f64, b: f64, t: f64) -> SpectralCurve {
        SpectralCurve::new(ModelParams::new(a, b, t).unwrap()).unwrap()
    }

    #[test]
    fn zero_off_support() {
        let c = curve(0.6, 0.6, 0.25);
        assert_eq!(density_point(&c, 1.1 * c.branch.z1).unwrap().rho, 0.0);
        assert_eq!(density_point(&c, 0.5 * c.branch.z2).unwrap().rho, 0.0);
    }

    #[test]
    fn z2_edge_rejected_in_one_cut() {
        let c = curve(0.6, 0.6, 0.45);
        assert!(matches!(edge_fit(&c, Edge::Z2), Err(Error::Domain(_))));
    }
}
