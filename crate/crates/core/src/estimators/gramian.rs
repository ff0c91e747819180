//! Second receding-horizon stage: `θ̂ = (∫ WᵀW)⁻¹ ∫ Wᵀz` over `[t − T′, t]`,
//! with a uniform or a `ψ`-shaped weight.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::regression::{check_bank, regression_rows};
use super::{with_fallback, Clock, Method, ParameterEstimate, ParameterEstimator};
use crate::error::{Error, Result};
use crate::linalg::solve_equilibrated;
use crate::model::ModelStructure;
use crate::modfunc::window::intervals;
use crate::modfunc::{
    make_beta_mf, make_mf_generator, FixedBank, GeneratorSpec, GramianFilter, Hold, MfGenerator, SignalWindow,
};

/// Weight of the averaging stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum GramianKernel {
    /// trapezoidal `∫` over `[t − T′, t]`
    #[default]
    Uniform,
    /// reversed `sᵖ(1 − s)^q` realized by Kronecker-lifted filters
    Beta { p: u32, q: u32 },
    /// exponential generator
    Exponential { rates: Vec<f64> },
}

impl GramianKernel {
    pub fn generator(&self, horizon: f64) -> Result<Option<MfGenerator>> {
        let spec = match self {
            GramianKernel::Uniform => return Ok(None),
            GramianKernel::Beta { p, q } => GeneratorSpec::Reversed { mf: make_beta_mf(*p, *q, horizon)? },
            GramianKernel::Exponential { rates } => GeneratorSpec::Exponential { rates: rates.clone() },
        };
        make_mf_generator(&spec, horizon).map(Some)
    }
}

/// Sliding trapezoidal integral of `[h | G]` stacks.
#[derive(Debug, Clone)]
pub(crate) struct SlidingIntegral {
    ts: f64,
    len: usize,
    ring: VecDeque<DMatrix<f64>>,
}

impl SlidingIntegral {
    pub fn new(ts: f64, n_intervals: usize) -> Self {
        Self { ts, len: n_intervals + 1, ring: VecDeque::with_capacity(n_intervals + 1) }
    }

    pub fn push(&mut self, x: DMatrix<f64>) {
        if self.ring.len() == self.len {
            self.ring.pop_front();
        }
        self.ring.push_back(x);
    }

    pub fn is_ready(&self) -> bool {
        self.ring.len() == self.len
    }

    pub fn integral(&self) -> Option<DMatrix<f64>> {
        if !self.is_ready() {
            return None;
        }
        let first = self.ring.front()?;
        let mut acc = DMatrix::zeros(first.nrows(), first.ncols());
        for x in &self.ring {
            acc += x;
        }
        acc -= (first + self.ring.back()?) * 0.5;
        Some(acc * self.ts)
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Averager {
    Uniform(SlidingIntegral),
    Filter(Box<GramianFilter>),
}

impl Averager {
    pub fn push(&mut self, x: DMatrix<f64>) {
        match self {
            Averager::Uniform(s) => s.push(x),
            Averager::Filter(f) => f.step_raw(x),
        }
    }

    pub fn read(&self) -> Result<Option<(DVector<f64>, DMatrix<f64>)>> {
        match self {
            Averager::Uniform(s) => Ok(s.integral().map(|x| {
                let m = x.nrows();
                (x.column(0).into_owned(), x.view((0, 1), (m, m)).into_owned())
            })),
            Averager::Filter(f) => {
                if f.is_ready() {
                    f.read().map(Some)
                } else {
                    Ok(None)
                }
            }
        }
    }
}

/// Stacks `[h | G]` for one tick.
pub(crate) fn stack(h: &DVector<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    let m = h.len();
    let mut x = DMatrix::zeros(m, m + 1);
    x.column_mut(0).copy_from(h);
    x.view_mut((0, 1), (m, m)).copy_from(g);
    x
}

/// Solves the accumulated normal equations.
pub(crate) fn solve_normal(h: &DVector<f64>, g: &DMatrix<f64>) -> Result<(Vec<f64>, f64)> {
    match solve_equilibrated(g, h) {
        (Some(th), c) => Ok((th.iter().copied().collect(), c)),
        (None, c) => Err(Error::SingularGramian { condition: c }),
    }
}

pub(crate) fn averaging_stage(kernel: &GramianKernel, ts: f64, average: f64, m: usize) -> Result<Averager> {
    let n = intervals(average, ts)?;
    Ok(match kernel.generator(average)? {
        None => Averager::Uniform(SlidingIntegral::new(ts, n)),
        Some(gen) => Averager::Filter(Box::new(GramianFilter::new(&gen, ts, m, Hold::First)?)),
    })
}

#[derive(Debug, Clone)]
pub struct GramianEstimator {
    st: ModelStructure,
    bank: FixedBank,
    window: SignalWindow,
    stage: Averager,
    average: f64,
    clock: Clock,
    last: Option<ParameterEstimate>,
}

impl GramianEstimator {
    pub fn new(st: ModelStructure, bank: FixedBank, average: f64, kernel: &GramianKernel) -> Result<Self> {
        check_bank(&bank, &st)?;
        let window = SignalWindow::new(bank.ts(), bank.samples() - 1)?;
        let stage = averaging_stage(kernel, bank.ts(), average, st.len())?;
        Ok(Self { st, bank, window, stage, average, clock: Clock::default(), last: None })
    }
}

impl ParameterEstimator for GramianEstimator {
    fn method(&self) -> Method {
        Method::Gramian
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
        let time = self.clock.time(self.window.ts());
        let r = regression_rows(&self.bank, &self.window.u()?, &self.window.y()?, &self.st, time)?;
        let (h, g) = r.normal_equations();
        self.stage.push(stack(&h, &g));
        let Some((h, g)) = self.stage.read()? else {
            return Ok(None);
        };
        let fresh = solve_normal(&h, &g).map(|(theta, condition)| ParameterEstimate {
            time,
            coefficients: self.st.coefficients(&theta),
            theta,
            valid_from: self.valid_from(),
            method: Method::Gramian,
            condition,
            stale: false,
        });
        with_fallback(&mut self.last, fresh, time)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sliding_trapezoid() {
        let mut s = SlidingIntegral::new(0.5, 2);
        for v in [1.0, 2.0, 3.0, 4.0] {
            s.push(DMatrix::from_element(1, 1, v));
        }
        // trapezoid of 2, 3, 4 at spacing 0.5
        assert!((s.integral().unwrap()[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_gramian_is_singular() {
        let w = DVector::from_vec(vec![1.0, 2.0]);
        let g = &w * w.transpose();
        assert!(matches!(solve_normal(&(&w * 3.0), &g), Err(Error::SingularGramian { .. })));
    }
}
