//! Parameter and state estimators. Every estimator is a single-writer state
//! machine advanced with one `(u, y)` sample per tick, first sample at `t = 0`.

pub mod batch;
pub mod direct;
pub mod fit;
pub mod gramian;
pub mod luenberger;
pub mod normalized;
pub mod regression;
pub mod state;

pub use batch::{estimate_batch, BatchEstimator};
pub use direct::DirectCtEstimator;
pub use fit::{fit_percent, resimulate};
pub use gramian::{GramianEstimator, GramianKernel};
pub use luenberger::{default_poles, place_poles, Luenberger};
pub use normalized::NormalizedEstimator;
pub use regression::{alpha_regression, regression_rows, RegressionSample};
pub use state::{MfStateEstimator, StateMode};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lti::IoCoefficients;
use crate::model::ModelStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Batch,
    Gramian,
    Normalized,
    DirectCt,
    LeftMf,
    RightMf,
    Luenberger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub time: f64,
    /// In structure term order: `[d?, −a₀ … −aₙ₋₁, b₀ … bₙ₋₁]` for the full model.
    pub theta: Vec<f64>,
    pub coefficients: IoCoefficients,
    pub valid_from: f64,
    pub method: Method,
    pub condition: f64,
    /// Set when the current solve failed and the last valid value is repeated.
    pub stale: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateEstimate {
    pub time: f64,
    pub x_hat: Vec<f64>,
    pub method: Method,
}

/// Common tick interface of the parameter estimators.
///
/// `Ok(None)` until the first estimate is defined; afterwards either a fresh
/// estimate, the previous one flagged `stale`, or the error when no valid
/// estimate has been produced yet.
pub trait ParameterEstimator {
    fn method(&self) -> Method;
    fn structure(&self) -> &ModelStructure;
    /// Earliest time an estimate can be emitted.
    fn valid_from(&self) -> f64;
    fn tick(&mut self, u: f64, y: f64) -> Result<Option<ParameterEstimate>>;
}

/// Emits `fresh` or, on failure, the last good estimate marked stale.
pub(crate) fn with_fallback(
    last: &mut Option<ParameterEstimate>,
    fresh: Result<ParameterEstimate>,
    time: f64,
) -> Result<Option<ParameterEstimate>> {
    match fresh {
        Ok(est) => {
            *last = Some(est.clone());
            Ok(Some(est))
        }
        Err(e) => match last {
            Some(prev) => {
                let mut p = prev.clone();
                p.stale = true;
                p.time = time;
                Ok(Some(p))
            }
            None => Err(e),
        },
    }
}

/// Sample counter shared by the tick-driven estimators.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Clock {
    ticks: u64,
}

impl Clock {
    pub fn advance(&mut self) -> u64 {
        self.ticks += 1;
        self.ticks - 1
    }

    pub fn time(&self, ts: f64) -> f64 {
        self.ticks.saturating_sub(1) as f64 * ts
    }
}
