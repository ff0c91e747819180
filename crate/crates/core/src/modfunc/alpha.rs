//! Time-varying total modulating functions normalized so that `W = I`.
//!
//! Every kernel is represented by `α = φ⁽ⁿ⁾` sampled on the window. Each
//! constraint (a regressor entry `Lⁱ[·]` or a right boundary `α⁽⁻ʲ⁾(T)`) is a
//! linear functional `⟨ρ, α⟩` with a representer `ρ` built from reverse
//! cumulative integrals of the window signals. The minimum-norm kernels are
//! spanned by the representers, which keeps the solve at `(m + n)` unknowns
//! per kernel regardless of the window length.

use nalgebra::{DMatrix, DVector};

use super::quadrature::{Quadrature, Scheme};
use super::window::SignalWindow;
use crate::error::{Error, Result};
use crate::linalg::RANK_TOL;
use crate::model::{ModelStructure, Term};

/// Samples of `α(σ) = φ⁽ⁿ⁾(σ)` on the window grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaKernel {
    pub samples: Vec<f64>,
    pub n: usize,
    pub ts: f64,
}

#[derive(Debug, Clone)]
pub struct AlphaBank {
    pub kernels: Vec<AlphaKernel>,
    /// `zᵣ = Lⁿᵣ[y]`; with `W = I` this is the instantaneous parameter vector.
    pub z: DVector<f64>,
    pub rank: usize,
    /// Condition number of the column-scaled constraint system.
    pub condition: f64,
    pub structure: ModelStructure,
    pub quadrature: Quadrature,
}

struct Representers {
    scheme: Scheme,
    /// one per structure term
    terms: Vec<Vec<f64>>,
    /// `α⁽⁻ʲ⁾(T)` for `j = n, …, 1`
    boundary: Vec<Vec<f64>>,
}

fn iterate(scheme: &Scheme, mut g: Vec<f64>, times: usize) -> Vec<f64> {
    for _ in 0..times {
        g = scheme.rev_cum(&g);
    }
    g
}

fn representers(u: &[f64], y: &[f64], ts: f64, st: &ModelStructure, q: Quadrature) -> Representers {
    let scheme = Scheme::new(q, ts, u);
    let n = st.n;
    let m = y.len();
    let ones = vec![1.0; m];
    // R^k(y), R^k(1) for k = 0..=n
    let mut ry = vec![y.to_vec()];
    let mut r1 = vec![ones];
    for k in 1..=n {
        ry.push(scheme.rev_cum(&ry[k - 1]));
        r1.push(scheme.rev_cum(&r1[k - 1]));
    }
    let held = scheme.held_rev_cum(u);
    let sgn = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let terms = st
        .terms
        .iter()
        .map(|t| match *t {
            Term::Disturbance => r1[n].clone(),
            Term::Output(i) => ry[n - i].iter().map(|v| sgn(i) * v).collect(),
            Term::Input(i) => iterate(&scheme, held.clone(), n - i - 1).into_iter().map(|v| sgn(i) * v).collect(),
        })
        .collect();
    let boundary = (1..=n).rev().map(|j| r1[j - 1].clone()).collect();
    Representers { scheme, terms, boundary }
}

/// Solves for the normalized bank on a full window.
pub fn solve_alpha_bank(window: &SignalWindow, st: &ModelStructure, q: Quadrature) -> Result<AlphaBank> {
    let u = window.u()?;
    let y = window.y()?;
    solve_alpha_slices(&u, &y, window.ts(), st, q)
}

/// As [`solve_alpha_bank`] on explicit (oldest-first) sample slices.
pub fn solve_alpha_slices(u: &[f64], y: &[f64], ts: f64, st: &ModelStructure, q: Quadrature) -> Result<AlphaBank> {
    if u.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("u has {} samples, y has {}", u.len(), y.len())));
    }
    let n = st.n;
    let mt = st.len();
    let p = mt + n;
    let m = y.len();
    if m < p + n {
        return Err(Error::RankDeficient { rank: m.min(p), required: p });
    }
    let rep = representers(u, y, ts, st, q);
    let sw: Vec<f64> = rep.scheme.weights.iter().map(|w| w.sqrt()).collect();
    if sw.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidArgument("quadrature weights must be positive".into()));
    }
    let cols: Vec<&Vec<f64>> = rep.terms.iter().chain(rep.boundary.iter()).collect();
    let mut a = DMatrix::zeros(m, p);
    let mut scale = vec![1.0; p];
    for (c, rho) in cols.iter().enumerate() {
        let mut nrm = 0.0;
        for k in 0..m {
            let v = sw[k] * rho[k];
            a[(k, c)] = v;
            nrm += v * v;
        }
        let nrm = nrm.sqrt();
        if nrm > 0.0 {
            scale[c] = nrm;
            a.column_mut(c).scale_mut(1.0 / nrm);
        }
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax).count();
    if rank < p || smax == 0.0 {
        return Err(Error::RankDeficient { rank, required: p });
    }
    let condition = smax / sv.min();
    // α = W^{-1/2} Q R⁻ᵀ D⁻¹ [I; 0]; avoids squaring the condition number
    let (qm, r) = crate::linalg::thin_qr(&a);
    let rhs = DMatrix::from_fn(p, mt, |i, c| if i == c { 1.0 / scale[c] } else { 0.0 });
    let coef = r.transpose().solve_lower_triangular(&rhs).ok_or(Error::RankDeficient { rank, required: p })?;
    let alphas = qm * coef;
    let mut kernels = Vec::with_capacity(mt);
    let mut z = DVector::zeros(mt);
    let zsign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    for r in 0..mt {
        let alpha: Vec<f64> = (0..m).map(|k| alphas[(k, r)] / sw[k]).collect();
        z[r] = zsign * rep.scheme.dot(y, &alpha);
        kernels.push(AlphaKernel { samples: alpha, n, ts });
    }
    Ok(AlphaBank { kernels, z, rank, condition, structure: st.clone(), quadrature: q })
}

/// Re-evaluates `W` (regressor functionals, `mₜ × mₜ`) and `Γ` (boundary
/// values `α⁽⁻ⁿ⁾(T) … α⁽⁻¹⁾(T)`, `n × mₜ`) of a bank on a window.
pub fn reconstruct(bank: &AlphaBank, u: &[f64], y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let ts = bank.kernels.first().map_or(1.0, |k| k.ts);
    let rep = representers(u, y, ts, &bank.structure, bank.quadrature);
    let mt = bank.kernels.len();
    let w = DMatrix::from_fn(rep.terms.len(), mt, |r, c| rep.scheme.dot(&rep.terms[r], &bank.kernels[c].samples));
    let g = DMatrix::from_fn(rep.boundary.len(), mt, |r, c| rep.scheme.dot(&rep.boundary[r], &bank.kernels[c].samples));
    (w, g)
}
