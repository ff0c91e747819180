//! Instantaneous least squares over one window: `θ̂ = (WᵀW)⁻¹ Wᵀ z`.

use nalgebra::{DMatrix, DVector};

use super::regression::{check_bank, regression_rows};
use super::{with_fallback, Clock, Method, ParameterEstimate, ParameterEstimator};
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::model::ModelStructure;
use crate::modfunc::{FixedBank, SignalWindow};

/// Solves the stacked regression; returns `(θ̂, condition)` where the
/// condition number is that of the column-scaled `WᵀW`. The solve itself
/// works on `W` (QR), so only `cond(W)` is gated.
pub fn estimate_batch(w: &DMatrix<f64>, z: &DVector<f64>) -> Result<(DVector<f64>, f64)> {
    if w.nrows() != z.len() {
        return Err(Error::DimensionMismatch(format!("W has {} rows, z has {}", w.nrows(), z.len())));
    }
    if w.nrows() < w.ncols() {
        return Err(Error::SingularGramian { condition: f64::INFINITY });
    }
    let (theta, c) = lstsq(w, z);
    let condition = c * c;
    match theta {
        Some(theta) => Ok((theta, condition)),
        _ => Err(Error::SingularGramian { condition }),
    }
}

#[derive(Debug, Clone)]
pub struct BatchEstimator {
    st: ModelStructure,
    bank: FixedBank,
    window: SignalWindow,
    clock: Clock,
    last: Option<ParameterEstimate>,
}

impl BatchEstimator {
    pub fn new(st: ModelStructure, bank: FixedBank) -> Result<Self> {
        check_bank(&bank, &st)?;
        let window = SignalWindow::new(bank.ts(), bank.samples() - 1)?;
        Ok(Self { st, bank, window, clock: Clock::default(), last: None })
    }
}

impl ParameterEstimator for BatchEstimator {
    fn method(&self) -> Method {
        Method::Batch
    }

    fn structure(&self) -> &ModelStructure {
        &self.st
    }

    fn valid_from(&self) -> f64 {
        self.window.horizon()
    }

    fn tick(&mut self, u: f64, y: f64) -> Result<Option<ParameterEstimate>> {
        self.clock.advance();
        self.window.push(u, y);
        if !self.window.is_ready() {
            return Ok(None);
        }
        let time = self.clock.time(self.window.ts());
        let fresh = (|| {
            let r = regression_rows(&self.bank, &self.window.u()?, &self.window.y()?, &self.st, time)?;
            let (theta, condition) = estimate_batch(&r.w, &r.z)?;
            let theta: Vec<f64> = theta.iter().copied().collect();
            Ok(ParameterEstimate {
                time,
                coefficients: self.st.coefficients(&theta),
                theta,
                valid_from: self.valid_from(),
                method: Method::Batch,
                condition,
                stale: false,
            })
        })();
        with_fallback(&mut self.last, fresh, time)
    }
}
