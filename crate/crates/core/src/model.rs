//! Which terms of `y⁽ⁿ⁾ = −Σ aᵢ y⁽ⁱ⁾ + Σ bᵢ u⁽ⁱ⁾ + d` are estimated.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lti::{IoCoefficients, MAX_ORDER};

/// One regressor. The matching parameter is `d`, `−aᵢ` or `bᵢ` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Disturbance,
    Output(usize),
    Input(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStructure {
    pub n: usize,
    pub terms: Vec<Term>,
}

impl ModelStructure {
    /// Full SISO model `[d?, y⁽⁰⁾…y⁽ⁿ⁻¹⁾, u⁽⁰⁾…u⁽ⁿ⁻¹⁾]`.
    pub fn io(n: usize, include_d: bool) -> Result<Self> {
        let mut terms = Vec::with_capacity(2 * n + 1);
        if include_d {
            terms.push(Term::Disturbance);
        }
        terms.extend((0..n).map(Term::Output));
        terms.extend((0..n).map(Term::Input));
        Self::new(n, terms)
    }

    /// Autonomous model `[y⁽⁰⁾…y⁽ⁿ⁻¹⁾]` (no input, no disturbance).
    pub fn autonomous(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(Term::Output).collect())
    }

    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        if n == 0 || n > MAX_ORDER {
            return Err(Error::InvalidArgument(format!("model order must be in 1..={MAX_ORDER}, got {n}")));
        }
        if terms.is_empty() {
            return Err(Error::InvalidArgument("model has no terms".into()));
        }
        for (k, t) in terms.iter().enumerate() {
            match t {
                Term::Output(i) | Term::Input(i) if *i >= n => {
                    return Err(Error::InvalidArgument(format!("term {t:?} exceeds order {n}")));
                }
                _ => {}
            }
            if terms[..k].contains(t) {
                return Err(Error::InvalidArgument(format!("duplicate term {t:?}")));
            }
        }
        Ok(Self { n, terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_input(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, Term::Input(_)))
    }

    /// Maps θ back to coefficients; absent terms are zero.
    pub fn coefficients(&self, theta: &[f64]) -> IoCoefficients {
        let mut c = IoCoefficients { a: vec![0.0; self.n], b: vec![0.0; self.n], d: 0.0 };
        for (t, v) in self.terms.iter().zip(theta) {
            match t {
                Term::Disturbance => c.d = *v,
                Term::Output(i) => c.a[*i] = -v,
                Term::Input(i) => c.b[*i] = *v,
            }
        }
        c
    }

    /// θ for the given coefficients, in term order.
    pub fn theta(&self, c: &IoCoefficients) -> Vec<f64> {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Disturbance => c.d,
                Term::Output(i) => -c.a[*i],
                Term::Input(i) => c.b[*i],
            })
            .collect()
    }

    /// Parameter names in term order (`d`, `a0`, `b1`, …).
    pub fn names(&self) -> Vec<String> {
        self.terms
            .iter()
            .map(|t| match t {
                Term::Disturbance => "d".to_string(),
                Term::Output(i) => format!("a{i}"),
                Term::Input(i) => format!("b{i}"),
            })
            .collect()
    }
}
