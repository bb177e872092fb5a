use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::curve::{branch_points, discriminant_coefficients, BranchPointSet, DiscriminantData, Layout, Side};
use crate::error::{Error, Result};
use crate::numerics::poly::{quartic_roots, residual_scale, smallest_pair};
use crate::params::{ModelParams, Tolerances};
use crate::C64;

/// The four labeled sheet values at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiFrame {
    pub z: C64,
    /// xi[j - 1] is the value on sheet j.
    pub xi: [C64; 4],
    /// Vertices of the continuation path from the far-field anchor, in the
    /// closed upper half plane; the result was conjugated when `conjugated`.
    pub labeling_path: Vec<C64>,
    pub conjugated: bool,
    pub side: Option<Side>,
    /// Set when z lies within the branch point tolerance of a branch point.
    pub ill_conditioned: bool,
}

impl XiFrame {
    pub fn sheet(&self, j: usize) -> C64 {
        self.xi[j - 1]
    }
}

/// The spectral curve for one parameter set, with cached far-field labels.
#[derive(Debug)]
pub struct SpectralCurve {
    pub params: ModelParams,
    pub tol: Tolerances,
    pub branch: BranchPointSet,
    pub layout: Layout,
    pub disc: DiscriminantData,
    /// Real anchor point where labels are read off the large-z expansions.
    pub z_far: f64,
    /// Cached labeled frame at `hub`, the start of every continuation path.
    pub hub: C64,
    hub_xi: [C64; 4],
    pub(crate) lambda_const: OnceLock<std::result::Result<C64, String>>,
}

/// Ratio of root gap to predictor error below which a continuation step is
/// retried with half the length.
const GAP_RATIO: f64 = 10.0;

impl SpectralCurve {
    pub fn new(params: ModelParams) -> Result<Self> {
        Self::with_tolerances(params, Tolerances::default())
    }

    pub fn with_tolerances(params: ModelParams, tol: Tolerances) -> Result<Self> {
        let branch = branch_points(&params, &tol)?;
        let layout = Layout::new(&params, &branch);
        let disc = discriminant_coefficients(&params);
        let z_far = 1e6 * branch.z1.max(1.0);
        let h = 2.0 * branch.z1.max(branch.z3) + 1.0;
        let hub = C64::new(h, h);
        let mut curve = SpectralCurve {
            params,
            tol,
            branch,
            layout,
            disc,
            z_far,
            hub,
            hub_xi: [C64::new(0.0, 0.0); 4],
            lambda_const: OnceLock::new(),
        };
        let anchor = curve.anchor_frame()?;
        let mid = curve.continue_along(C64::new(z_far, 0.0), anchor, C64::new(h, 0.0))?;
        curve.hub_xi = curve.continue_along(C64::new(h, 0.0), mid, hub)?;
        Ok(curve)
    }

    pub fn scale(&self) -> f64 {
        self.branch.z1.max(1.0)
    }

    pub fn tau_bp(&self) -> f64 {
        self.tol.bp_rel * self.branch.z1
    }

    /// [c0, c1, c2, c3] of the monic quartic in xi.
    pub fn coefficients(&self, z: C64) -> [C64; 4] {
        let (a, b, t) = (self.params.a, self.params.b, self.params.t);
        let s = 1.0 - t;
        let u = t * s;
        let c3 = -2.0 * z / u;
        let c2 = z * z / (u * u) - a * a / (t * t) - b * b / (s * s) + 1.0 / u;
        let c1 = (2.0 * b * b / (t * s * s * s) - 1.0 / (u * u)) * z;
        let c0 = -b * b * z * z / (t * t * s.powi(4));
        [c0, c1, c2, c3]
    }

    fn coefficient_derivatives(&self, z: C64) -> [C64; 4] {
        let (b, t) = (self.params.b, self.params.t);
        let s = 1.0 - t;
        let u = t * s;
        [
            -2.0 * b * b * z / (t * t * s.powi(4)),
            C64::from(2.0 * b * b / (t * s * s * s) - 1.0 / (u * u)),
            2.0 * z / (u * u),
            C64::from(-2.0 / u),
        ]
    }

    /// |F(xi, z)| relative to the sum of the magnitudes of its terms.
    pub fn residual(&self, z: C64, xi: C64) -> f64 {
        let c = self.coefficients(z);
        let full = [c[0], c[1], c[2], c[3], C64::new(1.0, 0.0)];
        let (p, _) = crate::numerics::poly::horner_with_derivative(&full, xi);
        let s = residual_scale(&full, xi);
        if s == 0.0 {
            0.0
        } else {
            p.norm() / s
        }
    }

    /// Unlabeled roots at z. Once z/(t(1-t)) dominates, the clustered large
    /// pair is taken from the shifted quartic instead.
    pub fn roots(&self, z: C64) -> [C64; 4] {
        let t = self.params.t;
        let m = z / (t * (1.0 - t));
        if m.norm() < 64.0 * self.small_root_scale() {
            return quartic_roots(self.coefficients(z));
        }
        let low = smallest_pair(self.coefficients(z));
        let eta = smallest_pair(self.shifted_coefficients(z));
        [eta[0] + m, eta[1] + m, low[0], low[1]]
    }

    /// Size of the roots that stay bounded as z grows.
    pub(crate) fn small_root_scale(&self) -> f64 {
        let (a, b, t) = (self.params.a, self.params.b, self.params.t);
        a / t + b / (1.0 - t) + 1.0 / (t * (1.0 - t)).sqrt() + 1.0
    }

    /// Large-z expansions of the four sheets through order 1/z.
    pub fn expansions(&self, z: C64) -> [C64; 4] {
        let (a, b, t) = (self.params.a, self.params.b, self.params.t);
        let u = t * (1.0 - t);
        let h = 0.5 / z;
        [
            z / u - a / t - h,
            z / u + a / t - h,
            b / (1.0 - t) + h,
            -b / (1.0 - t) + h,
        ]
    }

    /// Vieta defects (sum, product), each relative to its natural scale.
    pub fn vieta_defects(&self, z: C64, xi: &[C64; 4]) -> (f64, f64) {
        let t = self.params.t;
        let want_sum = 2.0 * z / (t * (1.0 - t));
        let sum: C64 = xi.iter().sum();
        let sum_scale: f64 = xi.iter().map(|x| x.norm()).sum::<f64>().max(f64::MIN_POSITIVE);
        let prod = xi[0] * xi[1] * xi[2] * xi[3];
        let want_prod = self.coefficients(z)[0];
        let prod_scale = xi.iter().map(|x| x.norm()).product::<f64>().max(want_prod.norm());
        let d_prod = if prod_scale == 0.0 { 0.0 } else { (prod - want_prod).norm() / prod_scale };
        ((sum - want_sum).norm() / sum_scale, d_prod)
    }

    /// The double root of F at a real branch point e, taken from the
    /// critical points of F in xi.
    pub fn branch_value(&self, e: f64) -> f64 {
        let z = C64::new(e, 0.0);
        let c = self.coefficients(z);
        let crit = crate::numerics::poly::cubic_roots(4.0, 3.0 * c[3].re, 2.0 * c[2].re, c[1].re);
        crit.iter()
            .filter(|r| r.im == 0.0)
            .map(|r| r.re)
            .min_by(|p, q| {
                let rp = self.residual(z, C64::from(*p));
                let rq = self.residual(z, C64::from(*q));
                rp.partial_cmp(&rq).unwrap()
            })
            .unwrap_or(crit[0].re)
    }

    pub fn distance_to_branch_point(&self, z: C64) -> f64 {
        self.branch.points().iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Roots eta of F(z/(t(1-t)) + eta, z) = 0. The coefficients are exact
    /// closed forms, so the two small roots (sheets 1 and 2 at large z) keep
    /// full relative accuracy where xi itself would not.
    pub fn shifted_roots(&self, z: C64) -> [C64; 4] {
        let c = self.shifted_coefficients(z);
        let mut all = quartic_roots(c);
        all.sort_by(|p, q| p.norm().partial_cmp(&q.norm()).unwrap_or(std::cmp::Ordering::Equal));
        let small = smallest_pair(c);
        [small[0], small[1], all[2], all[3]]
    }

    fn shifted_coefficients(&self, z: C64) -> [C64; 4] {
        let (a, b, t) = (self.params.a, self.params.b, self.params.t);
        let s = 1.0 - t;
        let u = t * s;
        let m = z / u;
        let k = -a * a / (t * t) - b * b / (s * s) + 1.0 / u;
        let l = 2.0 * b * b / (t * s * s * s) - 1.0 / (u * u);
        let bb = b * b / (t * t * s.powi(4));
        [m * m * (k + l * u - bb * u * u), m * (2.0 * k + l * u), m * m + k, 2.0 * m]
    }

    /// Deviations |xi_j - expansion_j| at real z, with sheets 1 and 2 measured
    /// through the shifted roots.
    pub fn far_field_deviation(&self, z: f64) -> Result<[f64; 4]> {
        let zc = C64::new(z, 0.0);
        let (a, t) = (self.params.a, self.params.t);
        let exp = self.expansions(zc);
        let eta = self.shifted_roots(zc);
        let eta_exp = [C64::from(-a / t) - 0.5 / zc, C64::from(a / t) - 0.5 / zc];
        let nearest = |w: C64| {
            eta.iter().cloned().min_by(|p, q| (p - w).norm().partial_cmp(&(q - w).norm()).unwrap()).unwrap()
        };
        let small = [nearest(eta_exp[0]), nearest(eta_exp[1])];
        let roots = self.roots(zc);
        let (big, _) = match_roots(&exp, &roots)
            .ok_or_else(|| Error::Numerical("far-field roots do not match the expansions".into()))?;
        Ok([
            (small[0] - eta_exp[0]).norm(),
            (small[1] - eta_exp[1]).norm(),
            (big[2] - exp[2]).norm(),
            (big[3] - exp[3]).norm(),
        ])
    }

    fn anchor_frame(&self) -> Result<[C64; 4]> {
        let z = C64::new(self.z_far, 0.0);
        let dev = self.far_field_deviation(self.z_far)?;
        let u = self.params.t * (1.0 - self.params.t);
        let bound = 1e3 * self.scale() / (u * u * self.z_far * self.z_far);
        for (j, d) in dev.iter().enumerate() {
            if !(*d <= bound) {
                return Err(Error::Numerical(format!(
                    "sheet {} misses its far-field expansion by {d:e} at z = {}",
                    j + 1,
                    self.z_far
                )));
            }
        }
        let (xi, _) = match_roots(&self.expansions(z), &self.roots(z))
            .ok_or_else(|| Error::Numerical("far-field roots do not match the expansions".into()))?;
        Ok(xi)
    }

    /// d xi_j / dz = -F_z / F_xi with F_xi written as a product of root gaps.
    fn derivative(&self, z: C64, xi: &[C64; 4]) -> [C64; 4] {
        let d = self.coefficient_derivatives(z);
        let mut out = [C64::new(0.0, 0.0); 4];
        for j in 0..4 {
            let x = xi[j];
            let fz = ((d[3] * x + d[2]) * x + d[1]) * x + d[0];
            let mut fxi = C64::new(1.0, 0.0);
            for k in 0..4 {
                if k != j {
                    fxi *= x - xi[k];
                }
            }
            out[j] = -fz / fxi;
        }
        out
    }

    /// Continue the labeled values `xi0` at z0 along the straight segment to z1.
    pub fn continue_along(&self, z0: C64, xi0: [C64; 4], z1: C64) -> Result<[C64; 4]> {
        let dz = z1 - z0;
        if dz.norm() == 0.0 {
            return Ok(xi0);
        }
        let mut s = 0.0f64;
        let mut z = z0;
        let mut xi = xi0;
        let mut ds = 1.0f64;
        while s < 1.0 {
            let step = ds.min(1.0 - s);
            let last = s + step >= 1.0;
            let zn = if last { z1 } else { z0 + dz * (s + step) };
            let d = self.derivative(z, &xi);
            let mut pred = xi;
            for j in 0..4 {
                pred[j] += d[j] * (zn - z);
            }
            let roots = self.roots(zn);
            match match_roots(&pred, &roots) {
                Some((next, ratio)) if ratio >= GAP_RATIO && next.iter().all(|v| v.is_finite()) => {
                    xi = next;
                    z = zn;
                    s = if last { 1.0 } else { s + step };
                    ds = if ratio > 100.0 * GAP_RATIO { step * 2.0 } else { step };
                }
                _ => {
                    ds = step * 0.5;
                    if ds < 1e-14 {
                        return Err(Error::Path(format!(
                            "continuation from {z0} to {z1} stalled at {z}: roots collide (branch point or cut on the path)"
                        )));
                    }
                }
            }
        }
        Ok(xi)
    }

    /// Continue along a polyline whose first vertex carries `xi0`.
    pub fn continue_polyline(&self, xi0: [C64; 4], pts: &[C64]) -> Result<[C64; 4]> {
        let mut xi = xi0;
        for w in pts.windows(2) {
            xi = self.continue_along(w[0], xi, w[1])?;
        }
        Ok(xi)
    }

    fn on_real_cut(&self, x: f64) -> bool {
        match self.layout {
            Layout::TwoCuts { z1, z2, .. } => x.abs() >= z2 && x.abs() <= z1,
            Layout::OneCut { z1, .. } => x.abs() <= z1,
        }
    }

    fn on_vertical_cut(&self, y: f64) -> bool {
        !self.layout.vertical_pairs_at(y).is_empty() || (y == 0.0 && matches!(self.layout, Layout::TwoCuts { .. }))
    }

    /// Continuation path (upper half plane) from the hub to `w`.
    fn path_to(&self, w: C64, side: Option<Side>) -> Vec<C64> {
        let h = self.hub.re;
        let y = h.max(w.im);
        let mut pts = vec![self.hub];
        if y > h {
            pts.push(C64::new(h, y));
        }
        let approach = match side {
            Some(Side::Left) | Some(Side::Right) => {
                let gap = self.distance_to_branch_point(w).min(self.scale());
                let delta = 1e-3 * gap;
                let sign = if side == Some(Side::Right) { 1.0 } else { -1.0 };
                Some(w + C64::new(sign * delta, 0.0))
            }
            _ => None,
        };
        let pre = approach.unwrap_or(w);
        pts.push(C64::new(pre.re, y));
        pts.push(pre);
        if approach.is_some() {
            pts.push(w);
        }
        pts.dedup();
        pts
    }

    /// Labeled frame at z. Points on the cross need a `side`.
    pub fn frame(&self, z: C64, side: Option<Side>) -> Result<XiFrame> {
        let eps = 1e-14 * self.scale();
        let on_real = z.im.abs() <= eps && self.on_real_cut(z.re);
        let on_vert = z.re.abs() <= eps && self.on_vertical_cut(z.im);
        let z = C64::new(if on_vert { 0.0 } else { z.re }, if on_real { 0.0 } else { z.im });
        match side {
            None if on_real || on_vert => {
                return Err(Error::Path(format!("{z} lies on a cut; choose the side it is approached from")));
            }
            Some(Side::Above) | Some(Side::Below) if on_vert && !on_real => {
                return Err(Error::Path(format!("{z} lies on the vertical cut; use side Left or Right")));
            }
            Some(Side::Left) | Some(Side::Right) if on_real && !on_vert => {
                return Err(Error::Path(format!("{z} lies on a real cut; use side Above or Below")));
            }
            _ => {}
        }
        let conjugated = z.im < 0.0 || (z.im == 0.0 && side == Some(Side::Below));
        let w = if conjugated { z.conj() } else { z };
        let path = self.path_to(w, side);
        let mut xi = self.continue_polyline(self.hub_xi, &path)?;
        if conjugated {
            for v in xi.iter_mut() {
                *v = v.conj();
            }
        }
        let ill = self.distance_to_branch_point(z) <= self.tau_bp();
        Ok(XiFrame { z, xi, labeling_path: path, conjugated, side, ill_conditioned: ill })
    }

    /// Heights for the boundary-value extrapolation: 1e-6 of the scale away
    /// from branch points, shrinking in proportion to the distance near them.
    fn richardson_heights(&self, x: f64) -> [f64; 3] {
        let z = C64::new(x, 0.0);
        let mut d = self.distance_to_branch_point(z);
        if x != 0.0 {
            // The vertical cut meets the axis at 0.
            d = d.min(x.abs());
        }
        let s = self.scale();
        let h = (1e-6 * s).min(1e-4 * d).max(1e-11 * s);
        [h, 0.1 * h, 0.01 * h]
    }

    /// Boundary values xi_{j,+}(x) (side Above) or xi_{j,-}(x) (Below) on the
    /// real axis by Richardson extrapolation of xi(x + i eps).
    pub fn boundary_values(&self, x: f64, side: Side) -> Result<[C64; 4]> {
        Ok(self.boundary_values_grid(&[x], side)?.remove(0))
    }

    /// Boundary values along a list of real points; successive points are
    /// connected by continuation in the upper half plane.
    pub fn boundary_values_grid(&self, xs: &[f64], side: Side) -> Result<Vec<[C64; 4]>> {
        if !matches!(side, Side::Above | Side::Below) {
            return Err(Error::Domain("real boundary values are taken from Above or Below".into()));
        }
        if xs.is_empty() {
            return Ok(vec![]);
        }
        let heights: Vec<[f64; 3]> = xs.iter().map(|&x| self.richardson_heights(x)).collect();
        let mut levels: Vec<Vec<[C64; 4]>> = Vec::with_capacity(3);
        for k in 0..3 {
            let pts: Vec<C64> = xs.iter().zip(&heights).map(|(&x, h)| C64::new(x, h[k])).collect();
            let first = self.frame(pts[0], None)?.xi;
            let mut vals = Vec::with_capacity(xs.len());
            vals.push(first);
            let mut cur = first;
            for w in pts.windows(2) {
                cur = self.continue_along(w[0], cur, w[1])?;
                vals.push(cur);
            }
            levels.push(vals);
        }
        let mut out = Vec::with_capacity(xs.len());
        for i in 0..xs.len() {
            let e = heights[i];
            let mut v = [C64::new(0.0, 0.0); 4];
            for j in 0..4 {
                let f = [levels[0][i][j], levels[1][i][j], levels[2][i][j]];
                v[j] = neville_at_zero(&e, &f);
                if side == Side::Below {
                    v[j] = v[j].conj();
                }
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Value at 0 of the polynomial through (e_k, f_k).
fn neville_at_zero(e: &[f64; 3], f: &[C64; 3]) -> C64 {
    let mut p = *f;
    for m in 1..3 {
        for i in 0..(3 - m) {
            p[i] = (p[i + 1] * e[i] - p[i] * e[i + m]) / (e[i] - e[i + m]);
        }
    }
    p[0]
}

/// Assign roots to predictions by nearest distance. Returns the assignment and
/// the ratio (minimal root gap) / (largest prediction error), or `None` when two
/// predictions claim the same root.
fn match_roots(pred: &[C64; 4], roots: &[C64; 4]) -> Option<([C64; 4], f64)> {
    let mut used = [false; 4];
    let mut out = [C64::new(0.0, 0.0); 4];
    let mut err: f64 = 0.0;
    for j in 0..4 {
        let mut best = usize::MAX;
        let mut bd = f64::INFINITY;
        for (k, r) in roots.iter().enumerate() {
            let d = (r - pred[j]).norm();
            if d < bd {
                bd = d;
                best = k;
            }
        }
        if best == usize::MAX || used[best] {
            return None;
        }
        used[best] = true;
        out[j] = roots[best];
        err = err.max(bd);
    }
    let mut gap = f64::INFINITY;
    for i in 0..4 {
        for k in (i + 1)..4 {
            gap = gap.min((roots[i] - roots[k]).norm());
        }
    }
    let ratio = if err == 0.0 { f64::INFINITY } else { gap / err };
    Some((out, ratio))
}

/// Labeled frame at z for a one-off evaluation.
pub fn xi_frame(z: C64, params: &ModelParams) -> Result<XiFrame> {
    SpectralCurve::new(*params)?.frame(z, None)
}
