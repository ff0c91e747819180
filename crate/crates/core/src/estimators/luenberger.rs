//! Luenberger observer baseline, discretized exactly for a held input and a
//! linearly interpolated measurement.

use nalgebra::{DMatrix, DVector};

use super::{Method, StateEstimate};
use crate::error::{Error, Result};
use crate::linalg::hold_transitions;
use crate::lti::{structural_matrices, ContinuousLtiSystem};

/// Default observer poles: `−2.5 |λᵢ|` for the plant eigenvalues `λᵢ`.
pub fn default_poles(sys: &ContinuousLtiSystem) -> Vec<f64> {
    sys.eigenvalues().iter().map(|l| -2.5 * l.norm()).collect()
}

/// Ackermann gain placing the eigenvalues of `A − L C` at `poles` (real).
pub fn place_poles(sys: &ContinuousLtiSystem, poles: &[f64]) -> Result<DVector<f64>> {
    let n = sys.order();
    if poles.len() != n {
        return Err(Error::DimensionMismatch(format!("{} poles for an order-{n} system", poles.len())));
    }
    let sm = structural_matrices(sys)?;
    // desired characteristic polynomial p(s) = Π (s − pᵢ), coefficients low→high
    let mut coef = vec![1.0];
    for p in poles {
        let mut next = vec![0.0; coef.len() + 1];
        for (k, c) in coef.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= p * c;
        }
        coef = next;
    }
    let mut pa = DMatrix::zeros(n, n);
    let mut pw = DMatrix::identity(n, n);
    for c in &coef {
        pa += &pw * *c;
        pw = &pw * &sys.a;
    }
    let mut en = DVector::zeros(n);
    en[n - 1] = 1.0;
    Ok(pa * (sm.o_inv * en))
}

#[derive(Debug, Clone)]
pub struct Luenberger {
    ts: f64,
    phi: DMatrix<f64>,
    /// columns: u (held), y, disturbance
    g0: DMatrix<f64>,
    g1: DMatrix<f64>,
    level: f64,
    x: DVector<f64>,
    prev: Option<(f64, f64)>,
    ticks: u64,
}

impl Luenberger {
    /// `x̂' = A x̂ + B u + E·level + L (y − C x̂)` starting from `x0`.
    pub fn new(sys: &ContinuousLtiSystem, gains: &DVector<f64>, ts: f64, level: f64, x0: DVector<f64>) -> Result<Self> {
        let n = sys.order();
        if gains.len() != n || x0.len() != n {
            return Err(Error::DimensionMismatch(format!("gain/initial state must have {n} entries")));
        }
        if !(ts > 0.0) {
            return Err(Error::InvalidArgument(format!("ts must be positive, got {ts}")));
        }
        let f = &sys.a - gains * sys.c.transpose();
        let max_real_part = f.complex_eigenvalues().iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
        if !(max_real_part < 0.0) {
            return Err(Error::UnstableObserver { max_real_part });
        }
        let mut g = DMatrix::zeros(n, 3);
        g.set_column(0, &sys.b);
        g.set_column(1, gains);
        if let Some(e) = &sys.disturbance_gain {
            g.set_column(2, e);
        }
        let (phi, g0, g1) = hold_transitions(&f, &g, ts);
        Ok(Self { ts, phi, g0, g1, level, x: x0, prev: None, ticks: 0 })
    }

    /// Initial guess `y₀ · 1 / (C·1)` (all states at the measured level when
    /// `C` picks one of them).
    pub fn level_guess(sys: &ContinuousLtiSystem, y0: f64) -> DVector<f64> {
        let n = sys.order();
        let s: f64 = sys.c.sum();
        if s.abs() > 0.0 {
            DVector::from_element(n, y0 / s)
        } else {
            DVector::zeros(n)
        }
    }

    /// Swaps in a new model and gain, keeping the current estimate.
    pub fn retune(&mut self, sys: &ContinuousLtiSystem, gains: &DVector<f64>, level: f64) -> Result<()> {
        let next = Self::new(sys, gains, self.ts, level, self.x.clone())?;
        self.phi = next.phi;
        self.g0 = next.g0;
        self.g1 = next.g1;
        self.level = level;
        Ok(())
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.x
    }

    /// Consumes the sample at the next grid time and returns `x̂` there.
    pub fn step(&mut self, u: f64, y: f64) -> StateEstimate {
        if let Some((up, yp)) = self.prev {
            let slope = (y - yp) / self.ts;
            let x = &self.phi * &self.x
                + self.g0.column(0) * up
                + self.g0.column(1) * yp
                + self.g1.column(1) * slope
                + self.g0.column(2) * self.level;
            self.x = x;
        }
        self.prev = Some((u, y));
        self.ticks += 1;
        StateEstimate {
            time: (self.ticks - 1) as f64 * self.ts,
            x_hat: self.x.iter().copied().collect(),
            method: Method::Luenberger,
        }
    }
}
