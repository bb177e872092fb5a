use serde::{Deserialize, Serialize};

use crate::curve::SpectralCurve;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::C64;

/// Which sheet's cut plane the image of a parameter value lies in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SheetRegion {
    Omega(usize),
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametrizationPoint {
    pub v: C64,
    pub xi: C64,
    pub z: C64,
    pub sheet_region: SheetRegion,
    /// Relative quartic residual of (xi, z).
    pub residual: f64,
}

impl SpectralCurve {
    /// The point (xi(v), z(v)) of the rational parametrization.
    pub fn parametrize(&self, v: C64) -> Result<ParametrizationPoint> {
        let (a, b, t) = (self.params.a, self.params.b, self.params.t);
        let s = 1.0 - t;
        let tol = self.tol.pole;
        for p in [a, -a, 0.5 / b] {
            if (v - p).norm() <= tol {
                return Err(Error::Pole { v: format!("{v}"), tol });
            }
        }
        let num = b * v * v - v + a * a * b;
        let xi = num / (s * (a * a - v * v));
        let z = num * (s * v * v - 2.0 * t * b * v + t - s * a * a) / ((2.0 * b * v - 1.0) * (v * v - a * a));
        let residual = self.residual(z, xi);
        if !(residual <= self.tol.resid) {
            return Err(Error::Numerical(format!("parametrization residual {residual:e} at v = {v}")));
        }
        let sheet_region = self.region_of(z, xi);
        Ok(ParametrizationPoint { v, xi, z, sheet_region, residual })
    }

    /// The sheet whose labeled value at z equals xi; `Boundary` on the cross
    /// or where two sheets agree.
    fn region_of(&self, z: C64, xi: C64) -> SheetRegion {
        if !z.is_finite() || self.layout.distance_to_cross(z) <= self.tau_bp() {
            return SheetRegion::Boundary;
        }
        let frame = match self.frame(z, None) {
            Ok(f) => f,
            Err(_) => return SheetRegion::Boundary,
        };
        let mut d: Vec<(f64, usize)> = frame.xi.iter().enumerate().map(|(j, x)| ((x - xi).norm(), j + 1)).collect();
        d.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
        let scale = xi.norm().max(1.0);
        if d[0].0 <= 1e-7 * scale && d[1].0 > 1e-4 * scale {
            SheetRegion::Omega(d[0].1)
        } else {
            SheetRegion::Boundary
        }
    }
}

pub fn parametrize(v: C64, params: &ModelParams) -> Result<ParametrizationPoint> {
    SpectralCurve::new(*params)?.parametrize(v)
}
