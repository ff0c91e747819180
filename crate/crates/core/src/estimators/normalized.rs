//! Time-varying normalized kernels (`W = I`): the instantaneous parameter
//! vector is `z(t)`, averaged over `[t − T′, t]`.

use std::collections::VecDeque;

use nalgebra::DVector;

use super::{with_fallback, Clock, Method, ParameterEstimate, ParameterEstimator};
use crate::error::{Error, Result};
use crate::model::ModelStructure;
use crate::modfunc::alpha::solve_alpha_slices;
use crate::modfunc::window::intervals;
use crate::modfunc::{Quadrature, SignalWindow};

#[derive(Debug, Clone)]
pub struct NormalizedEstimator {
    st: ModelStructure,
    quadrature: Quadrature,
    window: SignalWindow,
    average: f64,
    /// recompute the bank every `stride` ticks, holding `z` in between
    stride: usize,
    ring: VecDeque<Option<DVector<f64>>>,
    ring_len: usize,
    held: Option<(DVector<f64>, f64)>,
    last_error: Option<Error>,
    since_solve: usize,
    clock: Clock,
    last: Option<ParameterEstimate>,
}

impl NormalizedEstimator {
    pub fn new(
        st: ModelStructure,
        ts: f64,
        horizon: f64,
        average: f64,
        quadrature: Quadrature,
        stride: usize,
    ) -> Result<Self> {
        let window = SignalWindow::with_horizon(ts, horizon)?;
        // T′ = 0 emits the instantaneous z(t) without averaging
        let ring_len = if average == 0.0 { 1 } else { intervals(average, ts)? + 1 };
        if stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        Ok(Self {
            st,
            quadrature,
            window,
            average,
            stride,
            ring: VecDeque::with_capacity(ring_len),
            ring_len,
            held: None,
            last_error: None,
            since_solve: 0,
            clock: Clock::default(),
            last: None,
        })
    }

    /// Instantaneous `z(t)` of the latest solved bank, with its condition number.
    pub fn instantaneous(&self) -> Option<&(DVector<f64>, f64)> {
        self.held.as_ref()
    }

    fn solve(&mut self) {
        let (u, y) = match (self.window.u(), self.window.y()) {
            (Ok(u), Ok(y)) => (u, y),
            _ => return,
        };
        match solve_alpha_slices(&u, &y, self.window.ts(), &self.st, self.quadrature) {
            Ok(bank) => {
                self.held = Some((bank.z, bank.condition));
                self.last_error = None;
            }
            Err(e) => {
                self.held = None;
                self.last_error = Some(e);
            }
        }
    }

    fn average(&self) -> Result<DVector<f64>> {
        let mut acc = DVector::zeros(self.st.len());
        let n = self.ring.len();
        if n == 1 {
            return self.ring[0].clone().ok_or_else(|| {
                self.last_error.clone().unwrap_or(Error::RankDeficient { rank: 0, required: self.st.len() + self.st.n })
            });
        }
        for (k, z) in self.ring.iter().enumerate() {
            let z = z.as_ref().ok_or_else(|| {
                self.last_error.clone().unwrap_or(Error::RankDeficient { rank: 0, required: self.st.len() + self.st.n })
            })?;
            let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
            acc += z * w;
        }
        Ok(acc * (self.window.ts() / self.average))
    }
}

impl ParameterEstimator for NormalizedEstimator {
    fn method(&self) -> Method {
        Method::Normalized
    }

    fn structure(&self) -> &ModelStructure {
        &self.st
    }

    fn valid_from(&self) -> f64 {
        self.window.horizon() + self.average
    }

    fn tick(&mut self, u: f64, y: f64) -> Result<Option<ParameterEstimate>> {
        self.clock.advance();
        self.window.push(u, y);
        if !self.window.is_ready() {
            return Ok(None);
        }
        if self.since_solve.is_multiple_of(self.stride) {
            self.solve();
        }
        self.since_solve += 1;
        if self.ring.len() == self.ring_len {
            self.ring.pop_front();
        }
        self.ring.push_back(self.held.as_ref().map(|(z, _)| z.clone()));
        if self.ring.len() < self.ring_len {
            return Ok(None);
        }
        let time = self.clock.time(self.window.ts());
        let condition = self.held.as_ref().map_or(f64::INFINITY, |(_, c)| *c);
        let fresh = self.average().map(|theta| {
            let theta: Vec<f64> = theta.iter().copied().collect();
            ParameterEstimate {
                time,
                coefficients: self.st.coefficients(&theta),
                theta,
                valid_from: self.valid_from(),
                method: Method::Normalized,
                condition,
                stale: false,
            }
        });
        with_fallback(&mut self.last, fresh, time)
    }
}
