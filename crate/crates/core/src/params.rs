use serde::{Deserialize, Serialize};

use crate::curve::critical_times;
use crate::error::{Error, Result};

/// Numerical tolerances. Every field can be overridden; the defaults are tuned
/// for double precision with well-conditioned closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative quartic residual accepted for a root.
    pub resid: f64,
    /// Minimum distance to a branch point, relative to z1.
    pub bp_rel: f64,
    /// Imaginary part below which a root of the discriminant counts as real.
    pub class: f64,
    /// Exclusion radius around the critical times and around ab = 1/2.
    pub crit: f64,
    /// Distance to the nearest half-integer accepted for a period.
    pub period: f64,
    /// Exclusion radius around the poles of the rational parametrization.
    pub pole: f64,
    /// Accepted deviation of the density mass from 1.
    pub mass: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            resid: 1e-9,
            bp_rel: 1e-6,
            class: 1e-8,
            crit: 1e-6,
            period: 1e-6,
            pole: 1e-8,
            mass: 1e-8,
        }
    }
}

/// Whether the two groups of paths can touch (ab < 1/2) or stay apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Separation {
    Subcritical,
    Supercritical,
}

/// Number of real intervals in the support of the limiting density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    TwoCuts,
    OneCut,
}

/// Physical parameters of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub t: f64,
    pub n: Option<usize>,
    pub separation: Separation,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, t: f64) -> Result<Self> {
        Self::with_tolerances(a, b, t, &Tolerances::default())
    }

    pub fn with_tolerances(a: f64, b: f64, t: f64, tol: &Tolerances) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("a must be positive, got {a}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Domain(format!("b must be positive, got {b}")));
        }
        if !(t.is_finite() && t > 0.0 && t < 1.0) {
            return Err(Error::Domain(format!("t must lie in (0, 1), got {t}")));
        }
        let ab = a * b;
        if (ab - 0.5).abs() <= tol.crit {
            return Err(Error::CriticalSeparation { ab, tol: tol.crit });
        }
        let separation = if ab < 0.5 {
            let (t1, t2) = critical_times(a, b)?;
            for t_c in [t1, t2] {
                if (t - t_c).abs() <= tol.crit {
                    return Err(Error::CriticalTime { t, t_c, tol: tol.crit });
                }
            }
            Separation::Subcritical
        } else {
            Separation::Supercritical
        };
        Ok(ModelParams { a, b, t, n: None, separation })
    }

    /// Attach a path count. It must be even and positive.
    pub fn with_n(mut self, n: usize) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::Domain(format!("n must be even and positive, got {n}")));
        }
        self.n = Some(n);
        Ok(self)
    }

    pub fn require_n(&self) -> Result<usize> {
        self.n.ok_or_else(|| Error::Domain("this operation needs the path count n".into()))
    }

    /// Critical times, or `None` when ab > 1/2.
    pub fn critical_times(&self) -> Option<(f64, f64)> {
        match self.separation {
            Separation::Subcritical => critical_times(self.a, self.b).ok(),
            Separation::Supercritical => None,
        }
    }

    /// The time a/(a+b) at which the two imaginary branch points coincide.
    pub fn t_swap(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    /// Regime predicted from t and the critical times.
    pub fn regime(&self) -> Regime {
        match self.critical_times() {
            Some((t1, t2)) if self.t > t1 && self.t < t2 => Regime::OneCut,
            _ => Regime::TwoCuts,
        }
    }

    /// The same model seen with x negated and time reversed: (a, b, t) -> (b, a, 1-t).
    pub fn time_reversed(&self) -> Result<Self> {
        let p = ModelParams::new(self.b, self.a, 1.0 - self.t)?;
        Ok(ModelParams { n: self.n, ..p })
    }
}
