//! Finite-time state estimation with left modulating functions.
//!
//! For a left kernel `φ` (derivatives `0..n−1` vanish at the oldest sample),
//! integrating the input-output equation by parts leaves boundary terms at
//! the newest sample only:
//!
//! `(φₗ + aᵀΓₗ) x̄(t) = bᵀLₗ[u] − aᵀLₗ[y] − Lⁿₗ[y] + d L⁰ₗ[1]`
//!
//! with `φₗ[j] = (−1)^{n−1−j} φ^{(n−1−j)}(T)`, `Γₗ[i][j] = (−1)^{i−1−j}
//! φ^{(i−1−j)}(T)` for `i > j`, and `x̄ = ȳ − Toep ū` the observability
//! canonical state. `x̂ = O⁻¹ x̄`.
//!
//! `Right` mode evaluates the same integrals with the reversed kernels
//! `ψ(s) = φ(T − s)` as continuous-time filters instead of window quadrature.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Clock, Method, StateEstimate};
use crate::error::{Error, Result};
use crate::linalg::COND_LIMIT;
use crate::lti::{IoCoefficients, StructuralMatrices};
use crate::modfunc::filter::CurvatureCorrection;
use crate::modfunc::window::intervals;
use crate::modfunc::{
    make_mf_generator, make_poly_left_mf, FixedBank, GeneratorSpec, Hold, MFilterState, ModulatingFunction, Quadrature,
    Scheme, SignalWindow,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMode {
    #[default]
    Left,
    RightReversed,
}

#[derive(Debug, Clone)]
struct KernelFilters {
    one: MFilterState,
    y: MFilterState,
    u: MFilterState,
}

#[derive(Debug, Clone)]
enum Integrals {
    Left { bank: FixedBank, window: SignalWindow },
    Right { filters: Vec<KernelFilters>, correction: CurvatureCorrection },
}

/// Frozen solve for the current coefficients.
#[derive(Debug, Clone)]
struct Solve {
    coeffs: IoCoefficients,
    /// `x̂ = P z`, `P = O⁻¹ Wₗ⁺`
    p: DMatrix<f64>,
    condition: f64,
}

/// `(Lⁱ[y], Lⁱ[u], L⁰[1])` of one kernel.
type KernelIntegrals = (Vec<f64>, Vec<f64>, f64);

#[derive(Debug, Clone)]
pub struct MfStateEstimator {
    n: usize,
    ts: f64,
    horizon: f64,
    mode: StateMode,
    kernels: Vec<ModulatingFunction>,
    integrals: Integrals,
    solve: Option<Solve>,
    clock: Clock,
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Rows `φₗ + aᵀΓₗ` for every kernel.
pub fn wl_matrix(kernels: &[ModulatingFunction], a: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    let horizon = kernels.first().map_or(1.0, |k| k.horizon);
    DMatrix::from_fn(kernels.len(), n, |r, c| {
        let end = |k: usize| kernels[r].eval(horizon, k);
        let mut v = sign(n - 1 - c) * end(n - 1 - c);
        for (i, ai) in a.iter().enumerate().skip(c + 1) {
            v += ai * sign(i - 1 - c) * end(i - 1 - c);
        }
        v
    })
}

impl MfStateEstimator {
    /// `count ≥ n` left kernels `(t/T)^{n+j−1}`, `j = 1..=count`.
    pub fn new(n: usize, ts: f64, horizon: f64, count: usize, mode: StateMode, quadrature: Quadrature) -> Result<Self> {
        if count < n {
            return Err(Error::InvalidArgument(format!("need at least {n} left kernels, got {count}")));
        }
        let kernels = (1..=count).map(|j| make_poly_left_mf(j, n, horizon)).collect::<Result<Vec<_>>>()?;
        let steps = intervals(horizon, ts)?;
        let integrals = match mode {
            StateMode::Left => Integrals::Left {
                bank: FixedBank::new(kernels.clone(), n, ts, steps, quadrature),
                window: SignalWindow::new(ts, steps)?,
            },
            StateMode::RightReversed => {
                let filters = kernels
                    .iter()
                    .map(|mf| {
                        let gen = make_mf_generator(&GeneratorSpec::Reversed { mf: mf.clone() }, horizon)?;
                        Ok(KernelFilters {
                            one: MFilterState::new(&gen, ts, 0, Hold::Zero)?,
                            y: MFilterState::new(&gen, ts, n, Hold::First)?,
                            u: MFilterState::new(&gen, ts, n, Hold::Zero)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Integrals::Right { filters, correction: CurvatureCorrection::new() }
            }
        };
        Ok(Self { n, ts, horizon, mode, kernels, integrals, solve: None, clock: Clock::default() })
    }

    pub fn mode(&self) -> StateMode {
        self.mode
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Refactors `Wₗ` for new coefficients; `sm` supplies `O⁻¹`.
    pub fn set_coefficients(&mut self, coeffs: &IoCoefficients, sm: &StructuralMatrices) -> Result<()> {
        if coeffs.order() != self.n || sm.o_inv.nrows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "estimator order {}, coefficients order {}, O⁻¹ is {}x{}",
                self.n,
                coeffs.order(),
                sm.o_inv.nrows(),
                sm.o_inv.ncols()
            )));
        }
        let wl = wl_matrix(&self.kernels, &coeffs.a);
        let scale: Vec<f64> = wl.column_iter().map(|c| c.norm()).collect();
        if scale.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::SingularWl { condition: f64::INFINITY });
        }
        let scaled = DMatrix::from_fn(wl.nrows(), wl.ncols(), |r, c| wl[(r, c)] / scale[c]);
        let condition = crate::linalg::cond(&scaled);
        if !(condition < COND_LIMIT) {
            return Err(Error::SingularWl { condition });
        }
        let pinv = crate::linalg::left_pinv(&scaled).ok_or(Error::SingularWl { condition })?;
        let unscale = DMatrix::from_fn(self.n, self.n, |r, c| if r == c { 1.0 / scale[r] } else { 0.0 });
        let p = &sm.o_inv * unscale * pinv;
        self.solve = Some(Solve { coeffs: coeffs.clone(), p, condition });
        Ok(())
    }

    pub fn condition(&self) -> Option<f64> {
        self.solve.as_ref().map(|s| s.condition)
    }

    /// Per kernel: `(Lⁱₗ[y] for i = 0..=n, Lⁱₗ[u] for i = 0..n, L⁰ₗ[1])`.
    fn integrals(&self) -> Result<Option<Vec<KernelIntegrals>>> {
        let n = self.n;
        match &self.integrals {
            Integrals::Left { bank, window } => {
                if !window.is_ready() {
                    return Ok(None);
                }
                let (u, y) = (window.u()?, window.y()?);
                let scheme = match bank.quadrature {
                    Quadrature::Riemann => Scheme::smooth(Quadrature::Riemann, self.ts, u.len()),
                    Quadrature::Gregory => Scheme::new(Quadrature::Gregory, self.ts, &u),
                };
                Ok(Some(
                    (0..bank.len())
                        .map(|k| {
                            (
                                (0..=n).map(|i| bank.sampled(k, i, &y, &scheme)).collect(),
                                (0..n).map(|i| bank.held(k, i, &u, &scheme)).collect(),
                                bank.unit(k, 0),
                            )
                        })
                        .collect(),
                ))
            }
            Integrals::Right { filters, .. } => {
                if !filters[0].y.is_ready() {
                    return Ok(None);
                }
                filters
                    .iter()
                    .map(|f| {
                        Ok((
                            (0..=n).map(|i| f.y.read(i)).collect::<Result<Vec<_>>>()?,
                            (0..n).map(|i| f.u.read(i)).collect::<Result<Vec<_>>>()?,
                            f.one.read(0)?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Some)
            }
        }
    }

    pub fn tick(&mut self, u: f64, y: f64) -> Result<Option<StateEstimate>> {
        self.clock.advance();
        match &mut self.integrals {
            Integrals::Left { window, .. } => window.push(u, y),
            Integrals::Right { filters, correction } => {
                let yc = correction.apply(u, y);
                for f in filters.iter_mut() {
                    f.one.step(1.0);
                    f.y.step(yc);
                    f.u.step(u);
                }
            }
        }
        let Some(solve) = &self.solve else {
            return Ok(None);
        };
        let Some(ints) = self.integrals()? else {
            return Ok(None);
        };
        let c = &solve.coeffs;
        let n = self.n;
        let z = DVector::from_iterator(
            ints.len(),
            ints.iter().map(|(ly, lu, l1)| {
                let mut v = -ly[n] + c.d * l1;
                for i in 0..n {
                    v += c.b[i] * lu[i] - c.a[i] * ly[i];
                }
                v
            }),
        );
        let x = &solve.p * z;
        Ok(Some(StateEstimate {
            time: self.clock.time(self.ts),
            x_hat: x.iter().copied().collect(),
            method: match self.mode {
                StateMode::Left => Method::LeftMf,
                StateMode::RightReversed => Method::RightMf,
            },
        }))
    }
}
