//! Numerical laboratory for the delay logistic equation with positive
//! instantaneous feedback,
//!
//! ```text
//! x'(t) = r x(t) (1 + alpha x(t) - x(t - 1)),
//! ```
//!
//! and its multi-delay generalisation `x' = r x (1 + sum a_i x(t - tau_i))`.
//!
//! The crate integrates the equation by the method of steps with an adaptive
//! Dormand-Prince pair, follows solutions through finite-time blow-up by
//! switching to the reciprocal coordinate `w = 1/x`, classifies the
//! `(alpha, r)` parameter plane and runs executable verification suites for
//! the blow-up, exponential-solution and ordering results.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod history;
pub mod integrator;
pub mod model;
pub mod roots;
pub mod scenarios;

pub use error::{Error, Result};
pub use history::{HistoryFn, OrderCertificate, OrderRelation, Profile};
pub use integrator::{
    integrate, integrate_gen, integrate_z, BlowUpReport, SolverConfig, Status, Trajectory,
};
pub use model::{Equilibrium, GenParams, Params, RawParams};
