//! Numerical building blocks: quadrature, special functions, interpolation,
//! series acceleration and line fits.

pub mod accel;
pub mod fit;
pub mod interp;
pub mod quadrature;
pub mod special;

pub use fit::{linear_fit, LinearFit};
pub use interp::UniformTable;
pub use quadrature::{adaptive, GaussLegendre, QuadResult};
