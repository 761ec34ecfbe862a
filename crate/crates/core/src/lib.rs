//! Wave equation on `[0, L(t)]` with a moving right boundary.
//!
//! The solution is written through a strictly increasing transform `R`
//! satisfying `R(t + L(t)) - R(t - L(t)) = 2`. This crate provides exact
//! transforms, Moore's perturbation series, an interpolation-based
//! reconstruction of `R` (and of the characteristic function `w`), a
//! backtracing reference, modal solutions, and error metrics.

pub mod backtrace;
pub mod boundary;
pub mod characteristics;
pub mod error;
pub mod imr;
pub mod metrics;
pub mod modes;
pub mod moore;
pub mod quadrature;
pub mod roots;
pub mod seed;
pub mod spline;
pub mod transform;

pub use boundary::{BoundaryMotion, MotionKind};
pub use error::{Error, Result};
pub use imr::{ImrOptions, KnotPolicy, PiecewiseTransform};
pub use moore::MooreSeries;
pub use seed::{SeedDegree, SeedPolynomial};
pub use transform::{Transform, TransformFn};
