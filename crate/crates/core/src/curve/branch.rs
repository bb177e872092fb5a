use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::poly::cubic_roots;
use crate::params::{ModelParams, Regime, Separation, Tolerances};
use crate::C64;

/// The two times at which the groups of paths merge and split again.
pub fn critical_times(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!("a and b must be positive, got a={a}, b={b}")));
    }
    let q = 4.0 * a * a * b * b;
    if q >= 1.0 {
        return Err(Error::Domain(format!(
            "critical times exist only for ab < 1/2, got ab = {}",
            a * b
        )));
    }
    let s = (1.0 - q).sqrt();
    let d = 2.0 * (1.0 + a * a + b * b);
    // 1 - s = q / (1 + s) avoids cancellation for small ab.
    let t1 = (2.0 * a * a + q / (1.0 + s)) / d;
    let t2 = (1.0 + 2.0 * a * a + s) / d;
    Ok((t1, t2))
}

/// Coefficients of p1(x) = a3 x^3 + a2 x^2 + a1 x + a0. The discriminant of the
/// quartic in xi is z^2 p1(z^2) / (t(1-t))^10.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantData {
    pub a3: f64,
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl DiscriminantData {
    pub fn p1(&self, x: f64) -> f64 {
        ((self.a3 * x + self.a2) * x + self.a1) * x + self.a0
    }

    /// Largest |coefficient|, the scale used for relative statements.
    pub fn scale(&self) -> f64 {
        self.a3.abs().max(self.a2.abs()).max(self.a1.abs()).max(self.a0.abs())
    }

    /// Discriminant of the quartic in xi at z.
    pub fn discriminant(&self, z: C64, t: f64) -> C64 {
        let x = z * z;
        let p = ((x * self.a3 + self.a2) * x + self.a1) * x + self.a0;
        x * p / (t * (1.0 - t)).powi(10)
    }
}

pub fn discriminant_coefficients(params: &ModelParams) -> DiscriminantData {
    let (a, b, t) = (params.a, params.b, params.t);
    let a2_ = a * a;
    let b2 = b * b;
    let a4 = a2_ * a2_;
    let b4 = b2 * b2;
    let a6 = a4 * a2_;
    let b6 = b4 * b2;
    let a3 = 16.0 * a2_ * b2;
    let a2 = (4.0 * a2_ + 4.0 * b2 + 96.0 * a2_ * b2 - 48.0 * a4 * b2 - 48.0 * a2_ * b4) * t * t
        + (96.0 * a4 * b2 - 96.0 * a2_ * b2 - 8.0 * a2_) * t
        + 4.0 * a2_
        - 48.0 * a4 * b2;
    let k4 = 48.0 * a6 * b2 - 336.0 * a4 * b4 - 48.0 * a4 * b2 - 8.0 * a4 + 48.0 * a2_ * b6
        - 48.0 * a2_ * b4
        + 104.0 * a2_ * b2
        + 20.0 * a2_
        - 8.0 * b4
        + 20.0 * b2
        + 1.0;
    let k3 = -192.0 * a6 * b2 + 672.0 * a4 * b4 + 144.0 * a4 * b2 + 32.0 * a4 + 48.0 * a2_ * b4
        - 208.0 * a2_ * b2
        - 60.0 * a2_
        - 20.0 * b2
        - 2.0;
    let k2 = 288.0 * a6 * b2 - 336.0 * a4 * b4 - 144.0 * a4 * b2 - 48.0 * a4 + 104.0 * a2_ * b2
        + 60.0 * a2_
        + 1.0;
    let k1 = -192.0 * a6 * b2 + 48.0 * a4 * b2 + 32.0 * a4 - 20.0 * a2_;
    let k0 = 48.0 * a6 * b2 - 8.0 * a4;
    let a1 = (((k4 * t + k3) * t + k2) * t + k1) * t + k0;
    let g = a2_ * (1.0 - t) * (1.0 - t) + b2 * t * t - t * (1.0 - t);
    let a0 = 4.0 * (1.0 - 4.0 * a2_ * b2) * g * g * g;
    DiscriminantData { a3, a2, a1, a0 }
}

/// Branch points of the curve: +-z1 and +-z2 real with +-i z3 (two cuts), or
/// +-z1 real with +-i z2, +-i z3 (one cut).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPointSet {
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub regime: Regime,
    pub t_c1: Option<f64>,
    pub t_c2: Option<f64>,
    /// Roots of p1 in ascending order.
    pub x_roots: [f64; 3],
}

impl BranchPointSet {
    /// Number of real and of purely imaginary branch points besides z = 0,
    /// read off the signs of the roots of p1.
    pub fn counts(&self) -> (usize, usize) {
        let pos = self.x_roots.iter().filter(|&&x| x > 0.0).count();
        let neg = self.x_roots.iter().filter(|&&x| x < 0.0).count();
        (2 * pos, 2 * neg)
    }

    /// All six nonzero branch points.
    pub fn points(&self) -> [C64; 6] {
        let (z1, z2, z3) = (self.z1, self.z2, self.z3);
        match self.regime {
            Regime::TwoCuts => [
                C64::new(z1, 0.0),
                C64::new(-z1, 0.0),
                C64::new(z2, 0.0),
                C64::new(-z2, 0.0),
                C64::new(0.0, z3),
                C64::new(0.0, -z3),
            ],
            Regime::OneCut => [
                C64::new(z1, 0.0),
                C64::new(-z1, 0.0),
                C64::new(0.0, z2),
                C64::new(0.0, -z2),
                C64::new(0.0, z3),
                C64::new(0.0, -z3),
            ],
        }
    }

    /// Real support edges, positive side only.
    pub fn real_edges(&self) -> Vec<f64> {
        match self.regime {
            Regime::TwoCuts => vec![self.z2, self.z1],
            Regime::OneCut => vec![self.z1],
        }
    }
}

pub fn branch_points(params: &ModelParams, tol: &Tolerances) -> Result<BranchPointSet> {
    if params.separation == Separation::Supercritical {
        return Err(Error::Domain(format!(
            "branch points are classified only for ab < 1/2 (got ab = {})",
            params.a * params.b
        )));
    }
    let tc = params.critical_times();
    if let Some((t1, t2)) = tc {
        for t_c in [t1, t2] {
            if (params.t - t_c).abs() <= tol.crit {
                return Err(Error::CriticalTime { t: params.t, t_c, tol: tol.crit });
            }
        }
    }
    let d = discriminant_coefficients(params);
    let mut roots = cubic_roots(d.a3, d.a2, d.a1, d.a0);
    let scale = roots.iter().map(|r| r.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let complex: Vec<usize> = (0..3).filter(|&i| roots[i].im.abs() > tol.class * scale).collect();
    if !complex.is_empty() {
        // A conjugate pair this close to the axis is a rounded double root; the
        // root of p1' recovers it to full accuracy.
        let im = roots[complex[0]].im.abs();
        if complex.len() == 2 && im <= 1e-6 * scale {
            let re = roots[complex[0]].re;
            let (qa, qb, qc) = (3.0 * d.a3, 2.0 * d.a2, d.a1);
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0).sqrt();
            let cands = [(-qb + disc) / (2.0 * qa), (-qb - disc) / (2.0 * qa)];
            let dbl = if (cands[0] - re).abs() < (cands[1] - re).abs() { cands[0] } else { cands[1] };
            for &i in &complex {
                roots[i] = C64::new(dbl, 0.0);
            }
        } else {
            return Err(Error::Classification(format!(
                "discriminant roots {roots:?} have imaginary parts above {:e}",
                tol.class * scale
            )));
        }
    }
    let mut x: Vec<f64> = roots.iter().map(|r| r.re).collect();
    x.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let pos: Vec<f64> = x.iter().cloned().filter(|&v| v > 0.0).collect();
    let neg: Vec<f64> = x.iter().cloned().filter(|&v| v < 0.0).collect();
    if pos.len() + neg.len() != 3 {
        return Err(Error::Classification(format!("discriminant root at zero: {x:?}")));
    }
    let found = match (pos.len(), neg.len()) {
        (2, 1) => Regime::TwoCuts,
        (1, 2) => Regime::OneCut,
        _ => {
            return Err(Error::Classification(format!(
                "sign pattern of discriminant roots {x:?} matches no regime"
            )))
        }
    };
    let expected = params.regime();
    if found != expected {
        return Err(Error::Classification(format!(
            "roots {x:?} give {found:?} but t = {} predicts {expected:?}",
            params.t
        )));
    }
    let (z1, z2, z3) = match found {
        Regime::TwoCuts => (pos[1].sqrt(), pos[0].sqrt(), (-neg[0]).sqrt()),
        // neg is ascending, so neg[1] is the one closest to zero.
        Regime::OneCut => (pos[0].sqrt(), (-neg[1]).sqrt(), (-neg[0]).sqrt()),
    };
    Ok(BranchPointSet {
        z1,
        z2,
        z3,
        regime: found,
        t_c1: tc.map(|p| p.0),
        t_c2: tc.map(|p| p.1),
        x_roots: [x[0], x[1], x[2]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_times_sum_rule() {
        for (a, b) in [(0.6, 0.6), (0.4, 0.3), (0.1, 2.0), (1.3, 0.2)] {
            let (t1, t2) = critical_times(a, b).unwrap();
            assert!(0.0 < t1 && t1 < a / (a + b) && a / (a + b) < t2 && t2 < 1.0);
            assert!((t1 + t2 - (1.0 + 2.0 * a * a) / (1.0 + a * a + b * b)).abs() < 1e-15);
        }
        assert!(critical_times(1.0, 0.5).is_err());
        assert!(critical_times(1.0, 0.7).is_err());
    }

    #[test]
    fn critical_times_tend_to_the_endpoints() {
        let (t1, t2) = critical_times(1e-5, 1e-5).unwrap();
        assert!(t1 < 1e-9 && (1.0 - t2) < 1e-9);
    }
}
