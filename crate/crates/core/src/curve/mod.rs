//! The quartic spectral curve F(xi, z) = 0, its branch points, sheet structure,
//! rational parametrization, periods and primitives.

mod branch;
mod frame;
mod integrate;
mod param;
mod sheets;

pub use branch::{
    branch_points, critical_times, discriminant_coefficients, BranchPointSet, DiscriminantData,
};
pub use frame::{xi_frame, SpectralCurve, XiFrame};
pub use integrate::{lambda, period_integral, Contour};
pub use param::{parametrize, ParametrizationPoint, SheetRegion};
pub use sheets::{Layout, Segment, Side};
