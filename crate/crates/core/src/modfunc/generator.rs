//! Reversed kernels `ψ(t) = φ(T − t)` realized as `χ' = Λχ, χ(0) = l, ψ = Σχ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Kind, ModulatingFunction};
use crate::error::{Error, Result};
use crate::linalg::factorial;

#[derive(Debug, Clone, PartialEq)]
pub struct MfGenerator {
    pub lambda: DMatrix<f64>,
    pub l: DVector<f64>,
    pub sigma: DVector<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum GeneratorSpec {
    /// Nilpotent realization of the reversal of a polynomial kernel.
    Reversed { mf: ModulatingFunction },
    /// `ψ = Σ cⱼ e^{−λⱼ t}` with `ψ(0) = 1` and `ψ⁽ⁱ⁾(T) = 0` for `i < K − 1`.
    Exponential { rates: Vec<f64> },
}

pub fn make_mf_generator(spec: &GeneratorSpec, horizon: f64) -> Result<MfGenerator> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
    }
    match spec {
        GeneratorSpec::Reversed { mf } => {
            if (mf.horizon - horizon).abs() > 1e-12 * horizon {
                return Err(Error::UnsupportedGenerator(format!(
                    "kernel horizon {} differs from generator horizon {horizon}",
                    mf.horizon
                )));
            }
            let p = mf.kernel.degree();
            let dim = p + 1;
            let mut lambda = DMatrix::zeros(dim, dim);
            for k in 0..p {
                lambda[(k, k + 1)] = 1.0;
            }
            // Taylor coefficients of ψ at 0: ψ⁽ᵏ⁾(0) = (−1)ᵏ φ⁽ᵏ⁾(T)
            let l = DVector::from_fn(dim, |k, _| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                s * mf.eval(horizon, k)
            });
            let mut sigma = DVector::zeros(dim);
            sigma[0] = 1.0;
            Ok(MfGenerator { lambda, l, sigma, horizon })
        }
        GeneratorSpec::Exponential { rates } => {
            let k = rates.len();
            if k < 2 {
                return Err(Error::UnsupportedGenerator("exponential generator needs at least two rates".into()));
            }
            if rates.iter().any(|r| !(*r > 0.0)) {
                return Err(Error::UnsupportedGenerator("exponential rates must be positive".into()));
            }
            for i in 0..k {
                for j in 0..i {
                    if (rates[i] - rates[j]).abs() <= 1e-12 * rates[i].abs().max(rates[j].abs()) {
                        return Err(Error::UnsupportedGenerator("exponential rates must be distinct".into()));
                    }
                }
            }
            // Rows: ψ(0) = 1; ψ⁽ⁱ⁾(T) = 0 for i = 0..K−2 (scaled by T^i)
            let mut m = DMatrix::zeros(k, k);
            let mut rhs = DVector::zeros(k);
            rhs[0] = 1.0;
            for j in 0..k {
                m[(0, j)] = 1.0;
                for i in 0..k - 1 {
                    m[(i + 1, j)] = (-rates[j] * horizon).powi(i as i32) * (-rates[j] * horizon).exp();
                }
            }
            let c = m
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::UnsupportedGenerator("exponential kernel system is singular".into()))?;
            Ok(MfGenerator {
                lambda: DMatrix::from_diagonal(&DVector::from_iterator(k, rates.iter().map(|r| -r))),
                l: c,
                sigma: DVector::from_element(k, 1.0),
                horizon,
            })
        }
    }
}

impl MfGenerator {
    pub fn dim(&self) -> usize {
        self.l.len()
    }

    /// `ψ⁽ⁱ⁾(t) = Σ Λⁱ e^{Λt} l`.
    pub fn psi(&self, t: f64, i: usize) -> f64 {
        let mut row = self.sigma.transpose();
        for _ in 0..i {
            row = &row * &self.lambda;
        }
        (row * self.transition(t) * &self.l)[0]
    }

    /// `e^{Λt}`; a finite Taylor sum when `Λ` is nilpotent.
    pub fn transition(&self, t: f64) -> DMatrix<f64> {
        let n = self.dim();
        if self.is_nilpotent() {
            let mut acc = DMatrix::identity(n, n);
            let mut pw = DMatrix::identity(n, n);
            for k in 1..n {
                pw = &pw * &self.lambda;
                acc += &pw * (t.powi(k as i32) / factorial(k));
            }
            acc
        } else {
            (&self.lambda * t).exp()
        }
    }

    fn is_nilpotent(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..=i).all(|j| self.lambda[(i, j)] == 0.0))
    }

    /// Boundary classification of ψ on `[0, T]` with `k` vanishing derivatives.
    pub fn kind(&self, k: usize) -> Result<Kind> {
        let peak = (0..=200).map(|j| self.psi(self.horizon * j as f64 / 200.0, 0).abs()).fold(0.0, f64::max);
        let vanish = |t: f64| (0..k).all(|i| (self.psi(t, i) * self.horizon.powi(i as i32)).abs() <= 1e-9 * peak);
        match (vanish(0.0), vanish(self.horizon)) {
            (true, true) => Ok(Kind::Total),
            (true, false) => Ok(Kind::Left),
            (false, true) => Ok(Kind::Right),
            (false, false) => Err(Error::NotAModulatingFunction { order: k }),
        }
    }
}
