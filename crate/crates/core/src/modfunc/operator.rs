//! Receding-horizon integral operators `Lⁱ[f] = (−1)ⁱ ∫₀ᵀ φ⁽ⁱ⁾(σ) f(σ) dσ`,
//! with `σ = 0` at the oldest sample of the window.

use super::quadrature::{Quadrature, Scheme};
use super::ModulatingFunction;
use crate::linalg::gauss_legendre;

const GAUSS_POINTS: usize = 10;

fn sign(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `Lⁱ[f]` for a smooth sampled signal `f` (`N + 1` samples, oldest first).
///
/// `Riemann` uses the left-endpoint rectangle rule `Ts Σ_{k<N}`; `Gregory`
/// uses the end-corrected fourth-order weights.
pub fn apply_l(mf: &ModulatingFunction, i: usize, f: &[f64], ts: f64, quadrature: Quadrature) -> f64 {
    let m = f.len();
    let val = |k: usize| mf.eval(k as f64 * ts, i);
    let acc: f64 = match quadrature {
        Quadrature::Riemann => (0..m.saturating_sub(1)).map(|k| ts * val(k) * f[k]).sum(),
        Quadrature::Gregory => {
            let s = Scheme::smooth(quadrature, ts, m);
            (0..m).map(|k| s.weights[k] * val(k) * f[k]).sum()
        }
    };
    sign(i) * acc
}

/// Pre-tabulated kernel derivatives for a fixed bank on a fixed grid.
#[derive(Debug, Clone)]
pub struct FixedBank {
    pub kernels: Vec<ModulatingFunction>,
    pub max_deriv: usize,
    pub quadrature: Quadrature,
    ts: f64,
    m: usize,
    /// `vals[k][i][j] = φₖ⁽ⁱ⁾(σⱼ)`
    vals: Vec<Vec<Vec<f64>>>,
    /// `cells[k][i][j] = ∫_{σⱼ}^{σⱼ₊₁} φₖ⁽ⁱ⁾`
    cells: Vec<Vec<Vec<f64>>>,
}

impl FixedBank {
    pub fn new(
        kernels: Vec<ModulatingFunction>,
        max_deriv: usize,
        ts: f64,
        n_intervals: usize,
        quadrature: Quadrature,
    ) -> Self {
        let m = n_intervals + 1;
        let (gx, gw) = gauss_legendre(GAUSS_POINTS);
        let vals = kernels
            .iter()
            .map(|mf| (0..=max_deriv).map(|i| (0..m).map(|j| mf.eval(j as f64 * ts, i)).collect()).collect())
            .collect();
        let cells = kernels
            .iter()
            .map(|mf| {
                (0..=max_deriv)
                    .map(|i| {
                        (0..m - 1)
                            .map(|j| {
                                gx.iter().zip(&gw).map(|(x, w)| w * mf.eval((j as f64 + x) * ts, i)).sum::<f64>() * ts
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { kernels, max_deriv, quadrature, ts, m, vals, cells }
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn samples(&self) -> usize {
        self.m
    }

    pub fn ts(&self) -> f64 {
        self.ts
    }

    /// `Lⁱ` of kernel `k` applied to a sampled smooth signal.
    ///
    /// `Gregory` integrates the window mean exactly and applies the weights
    /// to the deviation only, so constant offsets carry no quadrature error.
    pub fn sampled(&self, k: usize, i: usize, f: &[f64], scheme: &Scheme) -> f64 {
        let v = &self.vals[k][i];
        match self.quadrature {
            Quadrature::Riemann => sign(i) * (0..self.m - 1).map(|j| self.ts * v[j] * f[j]).sum::<f64>(),
            Quadrature::Gregory => {
                let mean = f.iter().sum::<f64>() / f.len() as f64;
                let dev: f64 = (0..self.m).map(|j| scheme.weights[j] * v[j] * (f[j] - mean)).sum();
                sign(i) * dev + self.unit(k, i) * mean
            }
        }
    }

    /// `Lⁱ` of kernel `k` applied to a zero-order-held signal.
    pub fn held(&self, k: usize, i: usize, u: &[f64], scheme: &Scheme) -> f64 {
        match self.quadrature {
            Quadrature::Riemann => self.sampled(k, i, u, scheme),
            Quadrature::Gregory => {
                let c = &self.cells[k][i];
                sign(i) * (0..self.m - 1).map(|j| c[j] * u[j]).sum::<f64>()
            }
        }
    }

    /// `Lⁱ[1]`.
    pub fn unit(&self, k: usize, i: usize) -> f64 {
        match self.quadrature {
            Quadrature::Riemann => sign(i) * self.vals[k][i][..self.m - 1].iter().sum::<f64>() * self.ts,
            Quadrature::Gregory => sign(i) * self.cells[k][i].iter().sum::<f64>(),
        }
    }

    /// `φₖ⁽ⁱ⁾(T)`.
    pub fn at_end(&self, k: usize, i: usize) -> f64 {
        self.vals[k][i][self.m - 1]
    }
}
