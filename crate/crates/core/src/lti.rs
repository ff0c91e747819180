//! State-space ↔ input-output transformations for observable SISO systems
//! with an optional constant-disturbance channel.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub const MAX_ORDER: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLtiSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    /// Column through which a constant disturbance level enters.
    pub disturbance_gain: Option<DVector<f64>>,
}

impl ContinuousLtiSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch("order must be at least 1".into()));
        }
        if n > MAX_ORDER {
            return Err(Error::OrderTooLarge(n));
        }
        if a.ncols() != n || b.len() != n || c.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, B has {} rows, C has {} columns",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(Self { a, b, c, disturbance_gain: None })
    }

    pub fn with_disturbance(mut self, e: DVector<f64>) -> Result<Self> {
        if e.len() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "disturbance gain has {} rows, expected {}",
                e.len(),
                self.order()
            )));
        }
        self.disturbance_gain = Some(e);
        Ok(self)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<nalgebra::Complex<f64>> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuralMatrices {
    pub o: DMatrix<f64>,
    pub toep: DMatrix<f64>,
    pub crev: DMatrix<f64>,
    pub o_inv: DMatrix<f64>,
    pub condition: f64,
}

/// Coefficients of `y⁽ⁿ⁾ = −aᵀȳ + bᵀū + d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub d: f64,
}

impl IoCoefficients {
    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// `[d, −a₀ … −aₙ₋₁, b₀ … bₙ₋₁]`, the leading `d` only when requested.
    pub fn theta(&self, include_d: bool) -> DVector<f64> {
        let mut v = Vec::with_capacity(2 * self.a.len() + 1);
        if include_d {
            v.push(self.d);
        }
        v.extend(self.a.iter().map(|a| -a));
        v.extend_from_slice(&self.b);
        DVector::from_vec(v)
    }

    pub fn from_theta(theta: &[f64], n: usize, include_d: bool) -> Result<Self> {
        let off = usize::from(include_d);
        if theta.len() != 2 * n + off {
            return Err(Error::DimensionMismatch(format!(
                "theta has {} entries, expected {}",
                theta.len(),
                2 * n + off
            )));
        }
        Ok(Self {
            a: theta[off..off + n].iter().map(|v| -v).collect(),
            b: theta[off + n..].to_vec(),
            d: if include_d { theta[0] } else { 0.0 },
        })
    }

    /// Named, flat view `(a0, a1, …, b0, b1, …, d)` used by reports.
    pub fn named(&self) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = Vec::new();
        out.extend(self.a.iter().enumerate().map(|(i, v)| (format!("a{i}"), *v)));
        out.extend(self.b.iter().enumerate().map(|(i, v)| (format!("b{i}"), *v)));
        out.push(("d".into(), self.d));
        out
    }

    /// Markov parameters h₁…hₙ implied by the coefficients.
    pub fn markov(&self) -> Vec<f64> {
        let n = self.order();
        let mut h = vec![0.0; n + 1];
        for k in 1..=n {
            let mut v = self.b[n - k];
            for j in 1..k {
                v -= self.a[n - j] * h[k - j];
            }
            h[k] = v;
        }
        h[1..].to_vec()
    }

    /// Observability canonical realization (`O = I`), disturbance entering
    /// the last state row with unit level.
    pub fn canonical_realization(&self) -> ContinuousLtiSystem {
        let n = self.order();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            a[(n - 1, j)] = -self.a[j];
        }
        let b = DVector::from_vec(self.markov());
        let mut c = DVector::zeros(n);
        c[0] = 1.0;
        let mut e = DVector::zeros(n);
        e[n - 1] = self.d;
        ContinuousLtiSystem { a, b, c, disturbance_gain: Some(e) }
    }
}

fn matrix_power(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut p = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        p = &p * a;
    }
    p
}

fn toeplitz_for(sys: &ContinuousLtiSystem, g: &DVector<f64>) -> DMatrix<f64> {
    let n = sys.order();
    let mut t = DMatrix::zeros(n, n);
    let mut col = g.clone();
    for k in 1..n {
        let markov = sys.c.dot(&col);
        for i in k..n {
            t[(i, i - k)] = markov;
        }
        col = &sys.a * col;
    }
    t
}

fn crev_for(sys: &ContinuousLtiSystem, g: &DVector<f64>) -> DMatrix<f64> {
    let n = sys.order();
    let mut m = DMatrix::zeros(n, n);
    let mut col = g.clone();
    for k in 0..n {
        m.set_column(n - 1 - k, &col);
        col = &sys.a * col;
    }
    m
}

pub fn structural_matrices(sys: &ContinuousLtiSystem) -> Result<StructuralMatrices> {
    let n = sys.order();
    let mut o = DMatrix::zeros(n, n);
    let mut row = sys.c.transpose();
    for i in 0..n {
        o.set_row(i, &row);
        row = &row * &sys.a;
    }
    let condition = linalg::cond(&o);
    if !(condition < linalg::COND_LIMIT) {
        return Err(Error::NotObservable { condition });
    }
    let o_inv = o.clone().try_inverse().ok_or(Error::NotObservable { condition })?;
    Ok(StructuralMatrices { toep: toeplitz_for(sys, &sys.b), crev: crev_for(sys, &sys.b), o, o_inv, condition })
}

/// `a = −(C Aⁿ O⁻¹)ᵀ`, so that `y⁽ⁿ⁾ = −aᵀȳ + …` and `a` holds the
/// characteristic-polynomial coefficients.
fn a_coeffs(sys: &ContinuousLtiSystem, sm: &StructuralMatrices) -> DVector<f64> {
    let n = sys.order();
    -(sys.c.transpose() * matrix_power(&sys.a, n) * &sm.o_inv).transpose()
}

/// Input-output coefficients; `d = 0`.
pub fn io_form(sys: &ContinuousLtiSystem) -> Result<IoCoefficients> {
    io_form_with_disturbance(sys, 0.0)
}

/// Input-output coefficients with the disturbance channel held at `level`.
pub fn io_form_with_disturbance(sys: &ContinuousLtiSystem, level: f64) -> Result<IoCoefficients> {
    let sm = structural_matrices(sys)?;
    let a = a_coeffs(sys, &sm);
    let b = (sys.c.transpose() * &sm.crev + a.transpose() * &sm.toep).transpose();
    let d = match &sys.disturbance_gain {
        Some(e) if level != 0.0 => {
            let crev = crev_for(sys, e);
            let toep = toeplitz_for(sys, e);
            let be = sys.c.transpose() * crev + a.transpose() * toep;
            be[0] * level
        }
        _ => 0.0,
    };
    Ok(IoCoefficients { a: a.iter().copied().collect(), b: b.iter().copied().collect(), d })
}

/// `x̄ = ȳ − Toep·ū` with derivative vectors ordered `[f, f′, …]`.
pub fn canonical_state(y_bar: &DVector<f64>, u_bar: &DVector<f64>, sm: &StructuralMatrices) -> Result<DVector<f64>> {
    let n = sm.o.nrows();
    if y_bar.len() != n || u_bar.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected derivative vectors of length {n}, got {} and {}",
            y_bar.len(),
            u_bar.len()
        )));
    }
    Ok(y_bar - &sm.toep * u_bar)
}

pub fn original_state(sm: &StructuralMatrices, x_bar: &DVector<f64>) -> DVector<f64> {
    &sm.o_inv * x_bar
}
