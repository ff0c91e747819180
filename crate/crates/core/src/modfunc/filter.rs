//! Continuous-time realization of `Mⁱ[f] = ∫_{t−T}^{t} ψ⁽ⁱ⁾(t−τ) f(τ) dτ`:
//! `ξ' = Λξ + l f`, `Mⁱ[f] = ΣΛⁱ [ξ(t) − e^{ΛT} ξ(t−T)]`, stepped with the
//! exact transition for a held input.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::generator::MfGenerator;
use super::window::intervals;
use crate::error::{Error, Result};
use crate::linalg::hold_transitions;

/// Inter-sample model of the filtered signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hold {
    /// piecewise constant, sample `k` held over `[tₖ, tₖ₊₁)`
    #[default]
    Zero,
    /// piecewise linear between samples
    First,
}

/// Delay rebasing period, in horizons.
const REBASE_HORIZONS: usize = 10;

/// Ring of the last `N + 1` filter states with periodic rebasing: once every
/// few horizons the contribution of the oldest stored state is removed from
/// every stored state, which leaves all outputs unchanged but stops the
/// polynomial (marginally stable) generators from drifting.
#[derive(Debug, Clone)]
struct DelayLine {
    ring: Vec<DMatrix<f64>>,
    head: usize,
    count: usize,
    since_rebase: usize,
}

impl DelayLine {
    fn new(len: usize, rows: usize, cols: usize) -> Self {
        Self { ring: vec![DMatrix::zeros(rows, cols); len], head: 0, count: 0, since_rebase: 0 }
    }

    fn len(&self) -> usize {
        self.ring.len()
    }

    fn newest(&self) -> &DMatrix<f64> {
        &self.ring[(self.head + self.len() - 1) % self.len()]
    }

    fn oldest(&self) -> &DMatrix<f64> {
        &self.ring[self.head]
    }

    fn push(&mut self, x: DMatrix<f64>) {
        self.ring[self.head] = x;
        self.head = (self.head + 1) % self.len();
        self.count += 1;
        self.since_rebase += 1;
    }

    fn ready(&self) -> bool {
        self.count >= self.len()
    }

    fn maybe_rebase(&mut self, phi: &DMatrix<f64>) {
        let n = self.len() - 1;
        if !self.ready() || self.since_rebase < REBASE_HORIZONS * n.max(1) {
            return;
        }
        self.since_rebase = 0;
        let mut r = self.oldest().clone();
        for j in 0..self.len() {
            let idx = (self.head + j) % self.len();
            self.ring[idx] -= &r;
            r = phi * r;
        }
    }
}

/// Single-signal `M` filter.
#[derive(Debug, Clone)]
pub struct MFilterState {
    hold: Hold,
    phi: DMatrix<f64>,
    g_cur: DMatrix<f64>,
    g_next: DMatrix<f64>,
    exp_t: DMatrix<f64>,
    /// rows `ΣΛⁱ`
    outs: Vec<DVector<f64>>,
    line: DelayLine,
    last: Option<f64>,
}

fn discretize(
    gen_l: &DMatrix<f64>,
    lambda: &DMatrix<f64>,
    ts: f64,
    hold: Hold,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (phi, g0, g1) = hold_transitions(lambda, gen_l, ts);
    match hold {
        Hold::Zero => {
            let z = DMatrix::zeros(g0.nrows(), g0.ncols());
            (phi, g0, z)
        }
        Hold::First => {
            let b = &g1 / ts;
            (phi, g0 - &b, b)
        }
    }
}

fn output_rows(sigma: &DVector<f64>, lambda: &DMatrix<f64>, max_deriv: usize) -> Vec<DVector<f64>> {
    let mut rows = Vec::with_capacity(max_deriv + 1);
    let mut r = sigma.transpose();
    for _ in 0..=max_deriv {
        rows.push(r.transpose());
        r = &r * lambda;
    }
    rows
}

impl MFilterState {
    /// Filter over the generator's horizon, readable for derivatives `0..=max_deriv`.
    pub fn new(gen: &MfGenerator, ts: f64, max_deriv: usize, hold: Hold) -> Result<Self> {
        let n = intervals(gen.horizon, ts)?;
        let l = DMatrix::from_column_slice(gen.dim(), 1, gen.l.as_slice());
        let (phi, g_cur, g_next) = discretize(&l, &gen.lambda, ts, hold);
        Ok(Self {
            hold,
            exp_t: gen.transition(gen.horizon),
            outs: output_rows(&gen.sigma, &gen.lambda, max_deriv),
            line: DelayLine::new(n + 1, gen.dim(), 1),
            phi,
            g_cur,
            g_next,
            last: None,
        })
    }

    pub fn hold(&self) -> Hold {
        self.hold
    }

    pub fn step(&mut self, sample: f64) {
        let next = match self.last {
            None => DMatrix::zeros(self.phi.nrows(), 1),
            Some(prev) => &self.phi * self.line.newest() + &self.g_cur * prev + &self.g_next * sample,
        };
        self.line.push(next);
        self.line.maybe_rebase(&self.phi);
        self.last = Some(sample);
    }

    pub fn is_ready(&self) -> bool {
        self.line.ready()
    }

    /// `Mⁱ[f]` at the newest sample.
    pub fn read(&self, i: usize) -> Result<f64> {
        if !self.is_ready() {
            return Err(Error::WindowNotReady { have: self.line.count, need: self.line.len() });
        }
        let row =
            self.outs.get(i).ok_or_else(|| Error::InvalidArgument(format!("derivative {i} was not configured")))?;
        let diff = self.line.newest() - &self.exp_t * self.line.oldest();
        Ok(row.dot(&diff.column(0)))
    }
}

/// Kronecker-lifted filters producing `M⁰[h]` and `M⁰[G]` for `h = w z`,
/// `G = w wᵀ` (`m`-dimensional regressor).
#[derive(Debug, Clone)]
pub struct GramianFilter {
    m: usize,
    phi: DMatrix<f64>,
    g_cur: DMatrix<f64>,
    g_next: DMatrix<f64>,
    exp_t: DMatrix<f64>,
    sigma: DMatrix<f64>,
    line: DelayLine,
    last: Option<DMatrix<f64>>,
}

impl GramianFilter {
    pub fn new(gen: &MfGenerator, ts: f64, m: usize, hold: Hold) -> Result<Self> {
        let n = intervals(gen.horizon, ts)?;
        let eye = DMatrix::<f64>::identity(m, m);
        let lam = gen.lambda.kronecker(&eye);
        let l = DMatrix::from_column_slice(gen.dim(), 1, gen.l.as_slice()).kronecker(&eye);
        let sigma = DMatrix::from_row_slice(1, gen.dim(), gen.sigma.as_slice()).kronecker(&eye);
        let (phi, g_cur, g_next) = discretize(&l, &lam, ts, hold);
        let exp_t = gen.transition(gen.horizon).kronecker(&eye);
        Ok(Self { m, line: DelayLine::new(n + 1, gen.dim() * m, m + 1), phi, g_cur, g_next, exp_t, sigma, last: None })
    }

    fn stack(&self, w: &DVector<f64>, z: f64) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.m, self.m + 1);
        x.column_mut(0).copy_from(&(w * z));
        x.view_mut((0, 1), (self.m, self.m)).copy_from(&(w * w.transpose()));
        x
    }

    /// Advances with the regressor `w` and target `z` at the new sample.
    pub fn step(&mut self, w: &DVector<f64>, z: f64) -> Result<()> {
        if w.len() != self.m {
            return Err(Error::DimensionMismatch(format!("regressor has {} entries, expected {}", w.len(), self.m)));
        }
        let x = self.stack(w, z);
        self.step_raw(x);
        Ok(())
    }

    /// Advances with an arbitrary `m × (m+1)` input `[h | G]`.
    pub fn step_raw(&mut self, x: DMatrix<f64>) {
        let next = match &self.last {
            None => DMatrix::zeros(self.phi.nrows(), self.m + 1),
            Some(prev) => &self.phi * self.line.newest() + &self.g_cur * prev + &self.g_next * &x,
        };
        self.line.push(next);
        self.line.maybe_rebase(&self.phi);
        self.last = Some(x);
    }

    pub fn is_ready(&self) -> bool {
        self.line.ready()
    }

    /// `(M⁰[h], M⁰[G])`.
    pub fn read(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if !self.is_ready() {
            return Err(Error::WindowNotReady { have: self.line.count, need: self.line.len() });
        }
        let out = &self.sigma * (self.line.newest() - &self.exp_t * self.line.oldest());
        let h = out.column(0).into_owned();
        let g = out.view((0, 1), (self.m, self.m)).into_owned();
        Ok((h, g))
    }
}

/// Backward-difference curvature correction applied to samples before
/// first-order-hold filtering: `ỹₖ = yₖ − (yₖ − 2yₖ₋₁ + yₖ₋₂)/12`.
///
/// Integrating the linear interpolant of `ỹ` removes the `Ts² y''/12` bias of
/// the plain linear interpolant. The correction is skipped on samples whose
/// difference stencil straddles an input switch (where `y''` jumps).
#[derive(Debug, Clone, Default)]
pub struct CurvatureCorrection {
    y: [f64; 2],
    u: [f64; 2],
    seen: usize,
}

impl CurvatureCorrection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, u: f64, y: f64) -> f64 {
        let out = if self.seen >= 2 {
            let kink_k = u != self.u[1];
            let kink_km1 = self.u[1] != self.u[0];
            if kink_k || kink_km1 {
                y
            } else {
                y - (y - 2.0 * self.y[1] + self.y[0]) / 12.0
            }
        } else {
            y
        };
        self.y = [self.y[1], y];
        self.u = [self.u[1], u];
        self.seen += 1;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::generator::{make_mf_generator, GeneratorSpec};
    use super::super::make_poly_total_mf;
    use super::*;
    use crate::linalg::gauss_legendre;

    fn symmetric(t: f64) -> MfGenerator {
        make_mf_generator(&GeneratorSpec::Reversed { mf: make_poly_total_mf(2, t).unwrap() }, t).unwrap()
    }

    #[test]
    fn zero_input_gives_zero() {
        let mut f = MFilterState::new(&symmetric(1.0), 0.1, 2, Hold::Zero).unwrap();
        for _ in 0..11 {
            f.step(0.0);
        }
        for i in 0..3 {
            assert_eq!(f.read(i).unwrap(), 0.0);
        }
    }

    #[test]
    fn not_ready_before_horizon() {
        let mut f = MFilterState::new(&symmetric(1.0), 0.1, 0, Hold::Zero).unwrap();
        for _ in 0..10 {
            f.step(1.0);
        }
        assert!(matches!(f.read(0), Err(Error::WindowNotReady { .. })));
        f.step(1.0);
        assert!(f.read(0).is_ok());
    }

    #[test]
    fn unit_mass() {
        let mut f = MFilterState::new(&symmetric(1.0), 1e-3, 0, Hold::Zero).unwrap();
        for _ in 0..=1000 {
            f.step(1.0);
        }
        assert!((f.read(0).unwrap() - 1.0 / 30.0).abs() < 1e-6);
    }

    /// Oracle: per-cell Gauss–Legendre integration of ψ⁽ⁱ⁾(t−τ) times the held signal.
    fn brute(gen: &MfGenerator, f: &[f64], ts: f64, i: usize, hold: Hold) -> f64 {
        let (gx, gw) = gauss_legendre(8);
        let n = f.len() - 1;
        let mut acc = 0.0;
        for j in 0..n {
            for (x, w) in gx.iter().zip(&gw) {
                let age = (n - j) as f64 * ts - x * ts;
                let v = match hold {
                    Hold::Zero => f[j],
                    Hold::First => f[j] * (1.0 - x) + f[j + 1] * x,
                };
                acc += w * ts * gen.psi(age, i) * v;
            }
        }
        acc
    }

    #[test]
    fn matches_quadrature_after_rebasing() {
        let ts = 0.05;
        let gen = symmetric(1.0);
        let sig: Vec<f64> = (0..700).map(|k| (0.3 * k as f64).sin() + 0.1 * ((k * 7919) % 13) as f64).collect();
        for hold in [Hold::Zero, Hold::First] {
            let mut f = MFilterState::new(&gen, ts, 2, hold).unwrap();
            for (k, v) in sig.iter().enumerate() {
                f.step(*v);
                if k >= 20 && k % 37 == 0 {
                    for i in 0..3 {
                        let want = brute(&gen, &sig[k - 20..=k], ts, i, hold);
                        let got = f.read(i).unwrap();
                        assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{hold:?} k={k} i={i}");
                    }
                }
            }
        }
    }

    #[test]
    fn gramian_filter_matches_scalar_filters() {
        let ts = 0.1;
        let gen = symmetric(2.0);
        let m = 3;
        let mut gf = GramianFilter::new(&gen, ts, m, Hold::First).unwrap();
        let mut scalars: Vec<MFilterState> =
            (0..m * (m + 1)).map(|_| MFilterState::new(&gen, ts, 0, Hold::First).unwrap()).collect();
        for k in 0..60 {
            let t = k as f64 * ts;
            let w = DVector::from_vec(vec![t.sin(), (2.0 * t).cos(), 1.0 + 0.1 * t]);
            let z = 0.5 * t;
            gf.step(&w, z).unwrap();
            let x = gf.stack(&w, z);
            for c in 0..m + 1 {
                for r in 0..m {
                    scalars[c * m + r].step(x[(r, c)]);
                }
            }
        }
        let (h, g) = gf.read().unwrap();
        for r in 0..m {
            assert!((h[r] - scalars[r].read(0).unwrap()).abs() < 1e-10);
            for c in 0..m {
                assert!((g[(r, c)] - scalars[(c + 1) * m + r].read(0).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gramian_filter_constant_regressor() {
        let ts = 0.01;
        let gen = symmetric(1.0);
        let mut gf = GramianFilter::new(&gen, ts, 2, Hold::Zero).unwrap();
        let w = DVector::from_vec(vec![2.0, -1.0]);
        for _ in 0..=100 {
            gf.step(&w, 3.0).unwrap();
        }
        let (h, g) = gf.read().unwrap();
        let mass = 1.0 / 30.0;
        assert!((g - &w * w.transpose() * mass).amax() < 1e-6);
        assert!((h - &w * 3.0 * mass).amax() < 1e-6);
    }

    #[test]
    fn curvature_correction_skips_kinks() {
        let mut c = CurvatureCorrection::new();
        assert_eq!(c.apply(0.0, 0.0), 0.0);
        assert_eq!(c.apply(0.0, 1.0), 1.0);
        assert!((c.apply(0.0, 4.0) - (4.0 - 2.0 / 12.0)).abs() < 1e-15);
        assert_eq!(c.apply(1.0, 9.0), 9.0);
        assert_eq!(c.apply(1.0, 16.0), 16.0);
    }
}
