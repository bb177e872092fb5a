//! Spectral curve, limiting mean density and finite-n correlation kernel for
//! n non-intersecting Brownian motions with variance 1/n, half of them running
//! from `a` to `b` and half from `-a` to `-b` on the time interval [0, 1].
//!
//! The crate is organised by task:
//!
//! * [`curve`] solves the quartic spectral curve, classifies its branch points
//!   and continues the four sheet functions along paths.
//! * [`density`] turns sheet boundary values into the limiting density, its
//!   edge constants and the rescaling function `h`.
//! * [`kernel`] builds the exact finite-n kernel by biorthogonalization in
//!   multiple precision and compares it with the sine and Airy kernels.
//! * [`simulate`] samples path bundles on a time grid.

pub mod curve;
pub mod density;
pub mod error;
pub mod kernel;
pub mod numerics;
pub mod params;
pub mod simulate;

pub use error::{Error, ErrorKind, Result};
pub use params::{ModelParams, Regime, Separation, Tolerances};

/// Complex double, used for every curve computation.
pub type C64 = num_complex::Complex64;
