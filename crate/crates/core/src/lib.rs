//! Time-limited H2-optimal model order reduction.
//!
//! Reduces `x' = Ax + Bu, y = Cx` to a small model whose impulse response
//! matches the original on a finite window `[0, tau]`. The main entry points
//! are [`reducers::lt_irka`] (limited-time IRKA), [`reducers::irka`] and
//! [`reducers::tl_tsia`]; [`metrics`] evaluates H2(tau) errors and the
//! first-order optimality residuals.

pub mod error;
pub mod harness;
pub mod metrics;
pub mod models;
pub mod numerics;
pub mod projectors;
pub mod reducers;
pub mod system;
pub mod verification;

pub use error::{MorError, Result};
pub use system::{ReducedModel, StateSpaceSystem};
