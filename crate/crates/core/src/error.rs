use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error class, used by front ends to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The caller asked for something outside the model's domain.
    Domain,
    /// A computation lost accuracy or a certificate failed.
    Numerical,
    /// Sampling cannot reach the requested count in reasonable time.
    Infeasible,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("a*b = {ab} is within {tol:e} of the critical separation 1/2")]
    CriticalSeparation { ab: f64, tol: f64 },

    #[error("t = {t} is within {tol:e} of the critical time {t_c}")]
    CriticalTime { t: f64, t_c: f64, tol: f64 },

    #[error("branch point classification failed: {0}")]
    Classification(String),

    #[error("continuation path error: {0}")]
    Path(String),

    #[error("parameter v = {v} is within {tol:e} of a pole")]
    Pole { v: String, tol: f64 },

    #[error("edge fit failed: exponent {exponent} outside 0.5 +- {band}")]
    EdgeFit { exponent: f64, band: f64 },

    #[error("precision loss: {0}; retry with more precision bits")]
    Precision(String),

    #[error("infeasible sampling: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_)
            | Error::CriticalSeparation { .. }
            | Error::CriticalTime { .. }
            | Error::Pole { .. } => ErrorKind::Domain,
            Error::Infeasible(_) => ErrorKind::Infeasible,
            Error::Classification(_)
            | Error::Path(_)
            | Error::EdgeFit { .. }
            | Error::Precision(_)
            | Error::Numerical(_) => ErrorKind::Numerical,
        }
    }

    /// Stable short identifier for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "Domain",
            Error::CriticalSeparation { .. } => "CriticalSeparation",
            Error::CriticalTime { .. } => "CriticalTime",
            Error::Classification(_) => "Classification",
            Error::Path(_) => "Path",
            Error::Pole { .. } => "Pole",
            Error::EdgeFit { .. } => "EdgeFit",
            Error::Precision(_) => "Precision",
            Error::Infeasible(_) => "Infeasible",
            Error::Numerical(_) => "Numerical",
        }
    }
}
