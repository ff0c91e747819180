//! Direct continuous-time estimator: `M`-filters on `1`, `y` and `u` give the
//! regression row, Kronecker-lifted Gramian filters accumulate it over `T′`.

use nalgebra::DVector;

use super::gramian::{averaging_stage, solve_normal, stack, Averager, GramianKernel};
use super::{with_fallback, Clock, Method, ParameterEstimate, ParameterEstimator};
use crate::error::Result;
use crate::model::{ModelStructure, Term};
use crate::modfunc::filter::CurvatureCorrection;
use crate::modfunc::{make_beta_mf, make_mf_generator, GeneratorSpec, Hold, MFilterState};

#[derive(Debug, Clone)]
pub struct DirectCtEstimator {
    st: ModelStructure,
    ts: f64,
    horizon: f64,
    average: f64,
    one: MFilterState,
    y: MFilterState,
    u: MFilterState,
    correction: CurvatureCorrection,
    stage: Averager,
    clock: Clock,
    last: Option<ParameterEstimate>,
}

impl DirectCtEstimator {
    /// Kernel `sᵖ(1 − s)^q` on the horizon; both exponents must be ≥ `n`.
    pub fn new(
        st: ModelStructure,
        ts: f64,
        horizon: f64,
        kernel: (u32, u32),
        average: f64,
        gramian: &GramianKernel,
    ) -> Result<Self> {
        let mf = make_beta_mf(kernel.0, kernel.1, horizon)?;
        if mf.order < st.n {
            return Err(crate::error::Error::InvalidArgument(format!(
                "kernel order {} is below the model order {}",
                mf.order, st.n
            )));
        }
        let gen = make_mf_generator(&GeneratorSpec::Reversed { mf }, horizon)?;
        let n = st.n;
        Ok(Self {
            one: MFilterState::new(&gen, ts, 0, Hold::Zero)?,
            y: MFilterState::new(&gen, ts, n, Hold::First)?,
            u: MFilterState::new(&gen, ts, n, Hold::Zero)?,
            correction: CurvatureCorrection::new(),
            stage: averaging_stage(gramian, ts, average, st.len())?,
            st,
            ts,
            horizon,
            average,
            clock: Clock::default(),
            last: None,
        })
    }

    fn row(&self) -> Result<(DVector<f64>, f64)> {
        let w = self
            .st
            .terms
            .iter()
            .map(|t| match *t {
                Term::Disturbance => self.one.read(0),
                Term::Output(i) => self.y.read(i),
                Term::Input(i) => self.u.read(i),
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok((DVector::from_vec(w), self.y.read(self.st.n)?))
    }
}

impl ParameterEstimator for DirectCtEstimator {
    fn method(&self) -> Method {
        Method::DirectCt
    }

    fn structure(&self) -> &ModelStructure {
        &self.st
    }

    fn valid_from(&self) -> f64 {
        self.horizon + self.average
    }

    fn tick(&mut self, u: f64, y: f64) -> Result<Option<ParameterEstimate>> {
        self.clock.advance();
        let yc = self.correction.apply(u, y);
        self.one.step(1.0);
        self.y.step(yc);
        self.u.step(u);
        if !self.y.is_ready() {
            return Ok(None);
        }
        let (w, z) = self.row()?;
        self.stage.push(stack(&(&w * z), &(&w * w.transpose())));
        let Some((h, g)) = self.stage.read()? else {
            return Ok(None);
        };
        let time = self.clock.time(self.ts);
        let fresh = solve_normal(&h, &g).map(|(theta, condition)| ParameterEstimate {
            time,
            coefficients: self.st.coefficients(&theta),
            theta,
            valid_from: self.valid_from(),
            method: Method::DirectCt,
            condition,
            stale: false,
        });
        with_fallback(&mut self.last, fresh, time)
    }
}
