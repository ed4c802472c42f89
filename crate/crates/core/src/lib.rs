//! Terminal-manifold control of the forced Van der Pol oscillator.
//!
//! The closed loop steers the plant onto a periodic curve `r = g(theta)` with a
//! backstepping law, and an identification loop rescales the gain so the law
//! stays inside its saturation bounds when the manifold or plant parameters jump.

// negated comparisons are deliberate: they reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptation;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod io;
pub mod manifold;
pub mod metrics;
pub mod plot;
pub mod runner;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
