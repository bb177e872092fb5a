use serde::{Deserialize, Serialize};

use crate::curve::BranchPointSet;
use crate::params::{ModelParams, Regime};
use crate::C64;

/// Side from which a point on a cut is approached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Above,
    Below,
    Left,
    Right,
}

/// Closed straight segment [a, b] in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: C64,
    pub b: C64,
}

impl Segment {
    pub fn new(a: C64, b: C64) -> Self {
        Segment { a, b }
    }

    pub fn distance(&self, z: C64) -> f64 {
        let d = self.b - self.a;
        let len2 = d.norm_sqr();
        if len2 == 0.0 {
            return (z - self.a).norm();
        }
        let s = ((z - self.a) * d.conj()).re / len2;
        let p = self.a + d * s.clamp(0.0, 1.0);
        (z - p).norm()
    }

    /// Distance between two segments (zero when they intersect).
    pub fn distance_to_segment(&self, other: &Segment) -> f64 {
        if segments_cross(self, other) {
            return 0.0;
        }
        self.distance(other.a)
            .min(self.distance(other.b))
            .min(other.distance(self.a))
            .min(other.distance(self.b))
    }
}

fn orient(p: C64, q: C64, r: C64) -> f64 {
    ((q - p).conj() * (r - p)).im
}

fn segments_cross(s: &Segment, t: &Segment) -> bool {
    let d1 = orient(s.a, s.b, t.a);
    let d2 = orient(s.a, s.b, t.b);
    let d3 = orient(t.a, t.b, s.a);
    let d4 = orient(t.a, t.b, s.b);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// How the four sheets are glued. The real cuts always join sheets 1-3 (right)
/// and 2-4 (left); the layout records which pairs share the vertical cuts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Layout {
    /// Real cuts [z2, z1] and [-z1, -z2]; [-i z3, i z3] joins sheets 3-4
    /// (`vertical_joins_34`) or 1-2.
    TwoCuts { z1: f64, z2: f64, z3: f64, vertical_joins_34: bool },
    /// Real cuts [0, z1] and [-z1, 0]; vertical cuts of half-heights `h12` for
    /// sheets 1-2 and `h34` for sheets 3-4.
    OneCut { z1: f64, h12: f64, h34: f64 },
}

impl Layout {
    pub fn new(params: &ModelParams, bp: &BranchPointSet) -> Self {
        let early = params.t <= params.t_swap();
        match bp.regime {
            Regime::TwoCuts => Layout::TwoCuts { z1: bp.z1, z2: bp.z2, z3: bp.z3, vertical_joins_34: early },
            Regime::OneCut => {
                let (h12, h34) = if early { (bp.z2, bp.z3) } else { (bp.z3, bp.z2) };
                Layout::OneCut { z1: bp.z1, h12, h34 }
            }
        }
    }

    /// Cuts of the sheet function xi_j, j in 1..=4.
    pub fn sheet_cuts(&self, sheet: usize) -> Vec<Segment> {
        assert!((1..=4).contains(&sheet), "sheet index {sheet} not in 1..=4");
        let right = sheet == 1 || sheet == 3;
        let low_pair = sheet <= 2;
        let re = |x: f64| C64::new(x, 0.0);
        let im = |y: f64| C64::new(0.0, y);
        match *self {
            Layout::TwoCuts { z1, z2, z3, vertical_joins_34 } => {
                let mut v = vec![if right { Segment::new(re(z2), re(z1)) } else { Segment::new(re(-z1), re(-z2)) }];
                if vertical_joins_34 != low_pair {
                    v.push(Segment::new(im(-z3), im(z3)));
                }
                v
            }
            Layout::OneCut { z1, h12, h34 } => {
                let h = if low_pair { h12 } else { h34 };
                vec![
                    if right { Segment::new(re(0.0), re(z1)) } else { Segment::new(re(-z1), re(0.0)) },
                    Segment::new(im(-h), im(h)),
                ]
            }
        }
    }

    /// Union of all cuts (the cross).
    pub fn cross(&self) -> Vec<Segment> {
        let re = |x: f64| C64::new(x, 0.0);
        let im = |y: f64| C64::new(0.0, y);
        match *self {
            Layout::TwoCuts { z1, z2, z3, .. } => vec![
                Segment::new(re(z2), re(z1)),
                Segment::new(re(-z1), re(-z2)),
                Segment::new(im(-z3), im(z3)),
            ],
            Layout::OneCut { z1, h12, h34 } => {
                vec![Segment::new(re(-z1), re(z1)), Segment::new(im(-h12.max(h34)), im(h12.max(h34)))]
            }
        }
    }

    /// Distance from z to the cross.
    pub fn distance_to_cross(&self, z: C64) -> f64 {
        self.cross().iter().map(|s| s.distance(z)).fold(f64::INFINITY, f64::min)
    }

    /// Sheet pairs glued along the vertical cut through z = i y, if any.
    pub fn vertical_pairs_at(&self, y: f64) -> Vec<(usize, usize)> {
        let y = y.abs();
        match *self {
            Layout::TwoCuts { z3, vertical_joins_34, .. } => {
                if y < z3 {
                    vec![if vertical_joins_34 { (3, 4) } else { (1, 2) }]
                } else {
                    vec![]
                }
            }
            Layout::OneCut { h12, h34, .. } => {
                let mut v = vec![];
                if y < h12 {
                    v.push((1, 2));
                }
                if y < h34 {
                    v.push((3, 4));
                }
                v
            }
        }
    }
}
