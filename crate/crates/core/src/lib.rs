//! Numerical kit for lifting planar foliations through a contact-type
//! distribution `dz - P dx - Q dy`.
//!
//! The crate is organised bottom-up:
//!
//! * [`expr`]: rational expressions in `x, y, z` with complex coefficients.
//! * [`quadrature`] and [`ode`]: adaptive Gauss–Kronrod and Dormand–Prince kernels.
//! * [`geometry`]: parametrized paths in `C^N`, arc length, contour integrals, winding numbers.
//! * [`foliation`]: the logarithmic foliation with a real center, its holonomy and
//!   the connecting curves between `(r, 0)` and `(r/2, 0)`.
//! * [`lifting`]: distribution charts and the path-lifting ODE `z' = P x' + Q y'`.
//! * [`analysis`]: displacement law, Stokes cross-check, Gronwall transport and the
//!   accumulation experiment.
//! * [`selftest`]: the acceptance checks, callable from tests and from the CLI.

pub mod analysis;
pub mod error;
pub mod expr;
pub mod foliation;
pub mod geometry;
pub mod lifting;
pub mod ode;
pub mod quadrature;
pub mod selftest;

pub use error::{Error, NormalFormViolation, Result};

/// Working complex scalar.
pub type C64 = num_complex::Complex64;

/// Build a complex number from real and imaginary parts.
#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
