//! Scalar numerical kernels shared by the solvers.

pub mod golden;
pub mod quadrature;
pub mod roots;

pub use golden::{golden_section_min, Minimum};
pub use quadrature::{integrate, integrate_many, GaussLegendre};
pub use roots::{brent, expand_upper, RootError};
