//! Continuous-time identification and finite-time state estimation with
//! modulating functions, plus a simulated RC thermal plant and a scenario
//! runner.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod lti;
pub mod model;
pub mod modfunc;
pub mod plant;

pub use error::{Error, Result};
