//! Two-mirror periscope synthesis and verification.
//!
//! * [`spherical`]: mirrors returning every ray from the origin back to it.
//! * [`reversed`]: mirrors turning upward vertical rays into downward ones.
//! * [`trace`]: ray tracing through synthesized pairs, with closure residuals.
//! * [`frobenius`]: the `α∧dα` integrability defect of vector fields on 3-dimensional charts.
//! * [`scenario`]: JSON-configured batch runs and canned demos behind the `periscope` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > y)` is how NaN gets rejected

pub mod error;
pub mod frobenius;
pub mod geom;
pub mod grid;
pub mod numeric;
pub mod reversed;
pub mod scalar_field;
pub mod scenario;
pub mod spherical;
pub mod trace;

pub use error::{Error, Result};
pub use geom::{Ray, Vector};
pub use scalar_field::{Bump, Family, GradientMode, ScalarField};
