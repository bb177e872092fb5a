//! Integrals of the sheet functions along paths: periods and the primitives
//! lambda_j.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curve::{Side, SpectralCurve, Segment};
use crate::error::{Error, Result};
use crate::numerics::quad::GaussLegendre;
use crate::params::ModelParams;
use crate::C64;

const GL_ORDER: usize = 20;
const MAX_PANELS: usize = 1 << 12;

/// Closed polyline; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub vertices: Vec<C64>,
}

impl Contour {
    /// Regular m-gon inscribed in the circle |z - center| = radius,
    /// counterclockwise, starting on the positive real direction.
    pub fn circle(center: C64, radius: f64, m: usize) -> Self {
        let vertices = (0..m)
            .map(|k| center + C64::from_polar(radius, 2.0 * PI * k as f64 / m as f64))
            .collect();
        Contour { vertices }
    }

    /// Counterclockwise ellipse polyline with semi-axes rx, ry.
    pub fn ellipse(center: C64, rx: f64, ry: f64, m: usize) -> Self {
        let vertices = (0..m)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / m as f64;
                center + C64::new(rx * th.cos(), ry * th.sin())
            })
            .collect();
        Contour { vertices }
    }

    pub fn edges(&self) -> Vec<Segment> {
        let n = self.vertices.len();
        (0..n).map(|k| Segment::new(self.vertices[k], self.vertices[(k + 1) % n])).collect()
    }
}

/// Straight piece of an integration path. A singular end sits on a branch
/// point and is handled by the substitution s = end + L tau^2.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Leg {
    pub from: C64,
    pub to: C64,
    pub singular_from: bool,
    pub singular_to: bool,
}

impl Leg {
    pub fn regular(from: C64, to: C64) -> Self {
        Leg { from, to, singular_from: false, singular_to: false }
    }

    /// Quadrature nodes and weights (already including ds/dtau), in path order.
    fn nodes(&self, panels: usize) -> Vec<(C64, C64)> {
        let rule = GaussLegendre::cached(GL_ORDER);
        let d = self.to - self.from;
        let mut out = Vec::with_capacity(panels * GL_ORDER);
        match (self.singular_from, self.singular_to) {
            (false, false) => {
                for p in 0..panels {
                    let lo = p as f64 / panels as f64;
                    let hi = (p + 1) as f64 / panels as f64;
                    for (u, w) in rule.mapped(lo, hi) {
                        out.push((self.from + d * u, d * w));
                    }
                }
            }
            (true, false) => {
                for p in 0..panels {
                    let lo = p as f64 / panels as f64;
                    let hi = (p + 1) as f64 / panels as f64;
                    for (tau, w) in rule.mapped(lo, hi) {
                        out.push((self.from + d * (tau * tau), d * (2.0 * tau * w)));
                    }
                }
            }
            (false, true) => {
                for p in (0..panels).rev() {
                    let lo = p as f64 / panels as f64;
                    let hi = (p + 1) as f64 / panels as f64;
                    let mut panel: Vec<(C64, C64)> = rule
                        .mapped(lo, hi)
                        .map(|(tau, w)| (self.to - d * (tau * tau), d * (2.0 * tau * w)))
                        .collect();
                    panel.reverse();
                    out.extend(panel);
                }
            }
            (true, true) => {
                let mid = self.from + d * 0.5;
                out.extend(Leg { to: mid, singular_to: false, ..*self }.nodes(panels));
                out.extend(Leg { from: mid, singular_from: false, ..*self }.nodes(panels));
            }
        }
        out
    }

    /// A point strictly inside the leg, used to seed the labels.
    fn interior(&self) -> C64 {
        self.from + (self.to - self.from) * 0.5
    }
}

impl SpectralCurve {
    /// Integrals of all four continued sheet values along consecutive legs,
    /// minus their polynomial parts when `reduce` is set. Labels are seeded at
    /// the start of the first leg (or at its midpoint when the start is a
    /// branch point), approached from `side` if it lies on a cut, and
    /// thereafter continued along the path. Entry j is meaningful only when
    /// the path avoids the cuts of sheet j + 1.
    pub(crate) fn integrate_legs(&self, legs: &[Leg], side: Option<Side>, reduce: bool) -> Result<[C64; 4]> {
        let first = legs.first().ok_or_else(|| Error::Path("empty path".into()))?;
        let seed = if first.singular_from { first.interior() } else { first.from };
        let mut state = (seed, self.frame(seed, side)?.xi);
        let mut total = [C64::new(0.0, 0.0); 4];
        for (i, leg) in legs.iter().enumerate() {
            if leg.singular_from && i > 0 {
                return Err(Error::Path("only the first leg may start at a branch point".into()));
            }
            if leg.singular_to && i + 1 < legs.len() {
                return Err(Error::Path("only the last leg may end at a branch point".into()));
            }
            let (val, end_state) = self.integrate_leg(leg, state, reduce)?;
            for j in 0..4 {
                total[j] += val[j];
            }
            state = end_state;
        }
        Ok(total)
    }

    /// xi_j - p_j with the large pair taken from the shifted roots, so the
    /// difference keeps its relative accuracy far out. Also returns the
    /// magnitudes the rounding errors are relative to.
    fn reduced(&self, z: C64, xi: &[C64; 4]) -> ([C64; 4], [f64; 4]) {
        let p = self.polynomial_parts(z);
        let mut out = [C64::new(0.0, 0.0); 4];
        let mut mag = [0.0; 4];
        for j in 0..4 {
            out[j] = xi[j] - p[j];
            mag[j] = xi[j].norm();
        }
        let (a, t) = (self.params.a, self.params.t);
        let m = z / (t * (1.0 - t));
        if m.norm() >= 64.0 * self.small_root_scale() {
            let eta = self.shifted_roots(z);
            for (j, shift) in [(0, a / t), (1, -a / t)] {
                let target = xi[j] - m;
                let e = eta
                    .iter()
                    .cloned()
                    .min_by(|u, v| (u - target).norm().partial_cmp(&(v - target).norm()).unwrap())
                    .unwrap();
                out[j] = e + shift;
                mag[j] = e.norm() + shift.abs();
            }
        }
        (out, mag)
    }

    /// Smallest distance from the segment to a branch point.
    fn leg_clearance(&self, leg: &Leg) -> f64 {
        let seg = Segment::new(leg.from, leg.to);
        self.branch.points().iter().map(|p| seg.distance(*p)).fold(f64::INFINITY, f64::min)
    }

    /// Integrate a leg as a chain of pieces no longer than twice their
    /// distance to the nearest branch point.
    fn integrate_leg(&self, leg: &Leg, start: (C64, [C64; 4]), reduce: bool) -> Result<([C64; 4], (C64, [C64; 4]))> {
        let mut pieces = Vec::new();
        self.subdivide(*leg, &mut pieces);
        let mut total = [C64::new(0.0, 0.0); 4];
        let mut state = start;
        for piece in &pieces {
            let (v, end) = self.integrate_piece(piece, state, reduce)?;
            for j in 0..4 {
                total[j] += v[j];
            }
            state = end;
        }
        Ok((total, state))
    }

    fn subdivide(&self, leg: Leg, out: &mut Vec<Leg>) {
        let length = (leg.to - leg.from).norm();
        let clearance = self.leg_clearance(&leg).max(1e-3 * self.scale());
        if length <= 2.0 * clearance || out.len() > 4096 {
            out.push(leg);
            return;
        }
        let mid = leg.interior();
        self.subdivide(Leg { to: mid, singular_to: false, ..leg }, out);
        self.subdivide(Leg { from: mid, singular_from: false, ..leg }, out);
    }

    fn integrate_piece(&self, leg: &Leg, start: (C64, [C64; 4]), reduce: bool) -> Result<([C64; 4], (C64, [C64; 4]))> {
        let length = (leg.to - leg.from).norm();
        let clearance = self.leg_clearance(leg).max(1e-3 * self.scale());
        let mut panels = ((length / clearance).ceil() as usize).clamp(2, 64);
        let mut prev: Option<[C64; 4]> = None;
        loop {
            let mut cur = start;
            let mut sum = [C64::new(0.0, 0.0); 4];
            // Roundoff floor: each sheet value carries errors relative to `mag`.
            let mut floor = [0.0f64; 4];
            for (s, w) in leg.nodes(panels) {
                let xi = self.continue_along(cur.0, cur.1, s)?;
                cur = (s, xi);
                let (f, mag) = if reduce {
                    self.reduced(s, &xi)
                } else {
                    (xi, [xi[0].norm(), xi[1].norm(), xi[2].norm(), xi[3].norm()])
                };
                for j in 0..4 {
                    sum[j] += f[j] * w;
                    floor[j] += 1e-14 * mag[j] * w.norm();
                }
            }
            if let Some(p) = prev {
                let ok = (0..4).all(|j| {
                    let err = (sum[j] - p[j]).norm();
                    err <= 1e-12 * sum[j].norm().max(self.scale()) + floor[j]
                });
                if ok {
                    let end = if leg.singular_to { cur } else { (leg.to, self.continue_along(cur.0, cur.1, leg.to)?) };
                    return Ok((sum, end));
                }
            }
            if panels >= MAX_PANELS {
                return Err(Error::Numerical(format!(
                    "path integral from {} to {} did not converge with {MAX_PANELS} panels",
                    leg.from, leg.to
                )));
            }
            prev = Some(sum);
            panels *= 2;
        }
    }

    /// Polynomial part of the large-z expansion of each sheet.
    fn polynomial_parts(&self, z: C64) -> [C64; 4] {
        let (a, b, t) = (self.params.a, self.params.b, self.params.t);
        let u = t * (1.0 - t);
        [z / u - a / t, z / u + a / t, C64::from(b / (1.0 - t)), C64::from(-b / (1.0 - t))]
    }

    /// (1 / 2 pi i) times the integral of xi_sheet around the closed contour.
    pub fn period(&self, sheet: usize, contour: &Contour) -> Result<C64> {
        check_sheet(sheet)?;
        let mut all = self.periods(contour)?;
        std::mem::replace(&mut all[sheet - 1], Err(Error::Path(String::new())))
    }

    /// Periods of all four sheets from one pass around the contour. A sheet
    /// whose cut the contour meets gets a PathError.
    pub fn periods(&self, contour: &Contour) -> Result<[Result<C64>; 4]> {
        if contour.vertices.len() < 3 {
            return Err(Error::Domain("a contour needs at least three vertices".into()));
        }
        let edges = contour.edges();
        let blocked: Vec<Option<Segment>> = (1..=4)
            .map(|j| {
                edges.iter().find(|e| self.layout.sheet_cuts(j).iter().any(|c| e.distance_to_segment(c) <= self.tau_bp())).cloned()
            })
            .collect();
        let legs: Vec<Leg> = edges.iter().map(|e| Leg::regular(e.a, e.b)).collect();
        let side = self.side_hint(contour.vertices[0]);
        let v = self.integrate_legs(&legs, side, true)?;
        Ok(std::array::from_fn(|j| match &blocked[j] {
            Some(e) => Err(Error::Path(format!("contour edge {} -> {} meets a cut of sheet {}", e.a, e.b, j + 1))),
            None => Ok(v[j] / C64::new(0.0, 2.0 * PI)),
        }))
    }

    /// A side for a seed point that sits on some other sheet's cut.
    fn side_hint(&self, z: C64) -> Option<Side> {
        let eps = 1e-14 * self.scale();
        if z.im.abs() <= eps && self.layout.distance_to_cross(z) <= eps {
            Some(Side::Above)
        } else if z.re.abs() <= eps && self.layout.distance_to_cross(z) <= eps {
            Some(Side::Right)
        } else {
            None
        }
    }

    fn route_height(&self, z: C64) -> f64 {
        self.hub.re.max(z.im.abs())
    }

    /// Path legs from the base point of `sheet` to `z`. `upper` says whether z
    /// is reached from the upper half plane.
    fn lambda_legs(&self, sheet: usize, z: C64, upper: bool) -> Vec<Leg> {
        let z1 = self.branch.z1;
        let h = self.hub.re;
        let y = self.route_height(z);
        let sgn = if upper { 1.0 } else { -1.0 };
        let c = |re: f64, im: f64| C64::new(re, im);
        let mut pts: Vec<C64> = Vec::new();
        let first = match sheet {
            1 | 3 => {
                pts.push(c(h, 0.0));
                Leg { from: c(z1, 0.0), to: c(h, 0.0), singular_from: true, singular_to: false }
            }
            _ => {
                // Base point -z1 approached from above (sheet 2) or below (sheet 4).
                let base_up = sheet == 2;
                let bs = if base_up { 1.0 } else { -1.0 };
                pts.push(c(-h, 0.0));
                pts.push(c(-h, bs * y));
                if base_up != upper {
                    pts.push(c(h, bs * y));
                    pts.push(c(h, 0.0));
                }
                Leg { from: c(-z1, 0.0), to: c(-h, 0.0), singular_from: true, singular_to: false }
            }
        };
        let last = *pts.last().unwrap();
        if last.im == 0.0 {
            pts.push(c(last.re, sgn * y));
        }
        pts.push(c(z.re, sgn * y));
        pts.push(z);
        pts.dedup();
        let mut legs = vec![first];
        for w in pts.windows(2) {
            legs.push(Leg::regular(w[0], w[1]));
        }
        legs
    }

    fn lambda_raw(&self, sheet: usize, z: C64, upper: bool, singular_end: bool) -> Result<C64> {
        let mut legs = self.lambda_legs(sheet, z, upper);
        if singular_end {
            legs.last_mut().unwrap().singular_to = true;
        }
        let v = self.integrate_legs(&legs, None, true)?;
        let base = legs[0].from;
        let j = sheet - 1;
        Ok(v[j] + self.polynomial_primitives(z)[j] - self.polynomial_primitives(base)[j])
    }

    /// Primitives of `polynomial_parts` vanishing at 0.
    fn polynomial_primitives(&self, z: C64) -> [C64; 4] {
        let (a, b, t) = (self.params.a, self.params.b, self.params.t);
        let q = z * z / (2.0 * t * (1.0 - t));
        [q - a * z / t, q + a * z / t, b * z / (1.0 - t), -b * z / (1.0 - t)]
    }

    /// The constant c added to lambda_2 and lambda_4.
    pub fn lambda_constant(&self) -> Result<C64> {
        self.lambda_const
            .get_or_init(|| {
                let iz3 = C64::new(0.0, self.branch.z3);
                let r = if self.params.t < self.params.t_swap() {
                    self.lambda_raw(3, iz3, true, true)
                        .and_then(|l3| self.lambda_raw(4, iz3, true, true).map(|l4| l3 - l4))
                } else {
                    self.lambda_raw(1, iz3, true, true)
                        .and_then(|l1| self.lambda_raw(2, iz3, true, true).map(|l2| l1 - l2))
                };
                r.map_err(|e| e.to_string())
            })
            .clone()
            .map_err(Error::Numerical)
    }

    /// lambda_sheet(z) for z off (-inf, z1] and off the vertical cut; points
    /// on (-z1, z1) are reached from `side` (Above or Below).
    pub fn lambda(&self, sheet: usize, z: C64, side: Option<Side>) -> Result<C64> {
        check_sheet(sheet)?;
        let z1 = self.branch.z1;
        let upper = if z.im != 0.0 {
            z.im > 0.0
        } else if z.re > z1 {
            !matches!(side, Some(Side::Below))
        } else {
            if z.re <= -z1 {
                return Err(Error::Domain(format!("lambda is cut along (-inf, -z1]; got {z}")));
            }
            match side {
                Some(Side::Above) => true,
                Some(Side::Below) => false,
                _ => return Err(Error::Path(format!("{z} lies on (-z1, z1); choose side Above or Below"))),
            }
        };
        if z.re == 0.0 && z.im.abs() < self.branch.z3 && z.im != 0.0 {
            return Err(Error::Path(format!("{z} lies on the vertical cut")));
        }
        if (z - C64::new(z1, 0.0)).norm() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let mut v = self.lambda_raw(sheet, z, upper, false)?;
        if sheet == 2 || sheet == 4 {
            v += self.lambda_constant()?;
        }
        Ok(v)
    }

    /// Boundary values lambda_{j,+}(x) for every sheet at points of the real
    /// segment [e, x] approached from above, where e = z1 for sheets 1, 3 and
    /// e = -z1 for sheets 2, 4 (without the constant c). Points must be ordered
    /// moving away from e; a branch point may only come last.
    pub fn lambda_boundary_along(&self, from_right: bool, xs: &[f64]) -> Result<Vec<[C64; 4]>> {
        let e = if from_right { self.branch.z1 } else { -self.branch.z1 };
        let mut out = Vec::with_capacity(xs.len());
        let mut acc = [C64::new(0.0, 0.0); 4];
        let mut state: Option<(C64, [C64; 4])> = None;
        let mut prev = e;
        for &x in xs {
            let singular_to = self.branch.real_edges().iter().any(|r| x.abs() == *r);
            let leg = if state.is_none() {
                Leg { from: C64::new(e, 0.0), to: C64::new(x, 0.0), singular_from: true, singular_to }
            } else {
                Leg { from: C64::new(prev, 0.0), to: C64::new(x, 0.0), singular_from: false, singular_to }
            };
            let start = match state {
                Some(s) => s,
                None => {
                    let m = leg.interior();
                    (m, self.frame(m, Some(Side::Above))?.xi)
                }
            };
            let (v, end) = self.integrate_leg(&leg, start, false)?;
            for j in 0..4 {
                acc[j] += v[j];
            }
            out.push(acc);
            state = Some(end);
            prev = x;
        }
        Ok(out)
    }
}

fn check_sheet(sheet: usize) -> Result<()> {
    if (1..=4).contains(&sheet) {
        Ok(())
    } else {
        Err(Error::Domain(format!("sheet index must be 1..=4, got {sheet}")))
    }
}

pub fn period_integral(sheet: usize, contour: &Contour, params: &ModelParams) -> Result<f64> {
    Ok(SpectralCurve::new(*params)?.period(sheet, contour)?.re)
}

pub fn lambda(sheet: usize, z: C64, params: &ModelParams) -> Result<C64> {
    SpectralCurve::new(*params)?.lambda(sheet, z, None)
}
