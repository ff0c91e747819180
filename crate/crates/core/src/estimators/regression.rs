//! Regression equations `z = W θ` produced by a bank of total modulating
//! functions on one window.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ModelStructure, Term};
use crate::modfunc::{AlphaBank, FixedBank, Quadrature, Scheme};

/// One row per kernel: `zⱼ = Lⁿⱼ[y]`, `wⱼ` = the term functionals
/// (`L⁰ⱼ[1]`, `Lⁱⱼ[y]`, `Lⁱⱼ[u]`).
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    pub time: f64,
    pub z: DVector<f64>,
    pub w: DMatrix<f64>,
}

impl RegressionSample {
    /// `(Wᵀz, WᵀW)`.
    pub fn normal_equations(&self) -> (DVector<f64>, DMatrix<f64>) {
        (self.w.transpose() * &self.z, self.w.transpose() * &self.w)
    }
}

/// Checks that every kernel of `bank` is a total MF of order ≥ `n`.
pub fn check_bank(bank: &FixedBank, st: &ModelStructure) -> Result<()> {
    if bank.max_deriv < st.n {
        return Err(Error::InvalidArgument(format!(
            "bank tabulates {} derivatives, model order is {}",
            bank.max_deriv, st.n
        )));
    }
    for mf in &bank.kernels {
        if mf.kind() != crate::modfunc::Kind::Total || mf.order < st.n {
            return Err(Error::InvalidArgument(format!(
                "kernel must be a total MF of order ≥ {}, got {:?} of order {}",
                st.n,
                mf.kind(),
                mf.order
            )));
        }
    }
    Ok(())
}

/// Regression rows for a fixed bank on a window (`u`, `y` oldest first).
pub fn regression_rows(
    bank: &FixedBank,
    u: &[f64],
    y: &[f64],
    st: &ModelStructure,
    time: f64,
) -> Result<RegressionSample> {
    let m = bank.samples();
    if u.len() != m || y.len() != m {
        return Err(Error::WindowNotReady { have: u.len().min(y.len()), need: m });
    }
    let scheme = match bank.quadrature {
        Quadrature::Riemann => Scheme::smooth(Quadrature::Riemann, bank.ts(), m),
        Quadrature::Gregory => Scheme::new(Quadrature::Gregory, bank.ts(), u),
    };
    let k = bank.len();
    let mut z = DVector::zeros(k);
    let mut w = DMatrix::zeros(k, st.len());
    for j in 0..k {
        z[j] = bank.sampled(j, st.n, y, &scheme);
        for (c, t) in st.terms.iter().enumerate() {
            w[(j, c)] = match *t {
                Term::Disturbance => bank.unit(j, 0),
                Term::Output(i) => bank.sampled(j, i, y, &scheme),
                Term::Input(i) => bank.held(j, i, u, &scheme),
            };
        }
    }
    Ok(RegressionSample { time, z, w })
}

/// The normalized bank already has `W = I`; its `z` is the instantaneous θ.
pub fn alpha_regression(bank: &AlphaBank, time: f64) -> RegressionSample {
    let k = bank.z.len();
    RegressionSample { time, z: bank.z.clone(), w: DMatrix::identity(k, k) }
}
