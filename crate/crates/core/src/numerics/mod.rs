//! Numerical building blocks shared by the model modules.

pub mod airy;
pub mod mp;
pub mod poly;
pub mod quad;
