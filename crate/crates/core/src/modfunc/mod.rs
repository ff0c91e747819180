//! Modulating functions: kernels, windowed integral operators, the
//! time-varying (normalized) kernel solver and continuous-time filters.

pub mod alpha;
pub mod filter;
pub mod generator;
pub mod operator;
pub mod quadrature;
pub mod window;

pub use alpha::{reconstruct, solve_alpha_bank, AlphaBank, AlphaKernel};
pub use filter::{GramianFilter, Hold, MFilterState};
pub use generator::{make_mf_generator, GeneratorSpec, MfGenerator};
pub use operator::{apply_l, FixedBank};
pub use quadrature::{Quadrature, Scheme};
pub use window::SignalWindow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{binomial, falling};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Total,
    Left,
    Right,
}

/// Kernel shape in the normalized coordinate `s = t / T ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    /// `scale · sᵖ (1 − s)^q`
    Beta { p: u32, q: u32, scale: f64 },
    /// `Σ c_k s^k`
    Polynomial(Vec<f64>),
}

impl Kernel {
    /// `dⁱ/dsⁱ` of the kernel at `s`.
    pub fn eval_s(&self, s: f64, i: usize) -> f64 {
        match self {
            Kernel::Beta { p, q, scale } => {
                let mut acc = 0.0;
                for k in 0..=i {
                    if k > *p as usize || i - k > *q as usize {
                        continue;
                    }
                    let m = i - k;
                    let left = falling(*p, k) * s.powi(*p as i32 - k as i32);
                    let right = falling(*q, m) * (1.0 - s).powi(*q as i32 - m as i32);
                    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
                    acc += binomial(i, k) * sign * left * right;
                }
                scale * acc
            }
            Kernel::Polynomial(c) => {
                let mut acc = 0.0;
                for (k, ck) in c.iter().enumerate().skip(i).rev() {
                    acc = acc * s + ck * falling(k as u32, i);
                }
                acc
            }
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            Kernel::Beta { p, q, .. } => (*p + *q) as usize,
            Kernel::Polynomial(c) => c.len().saturating_sub(1),
        }
    }
}

/// A kernel on `[0, T]` together with the number of derivatives that vanish
/// on its zero boundary (or boundaries).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulatingFunction {
    pub horizon: f64,
    pub order: usize,
    pub kernel: Kernel,
    kind: Kind,
}

impl ModulatingFunction {
    pub fn new(kernel: Kernel, horizon: f64, order: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        if order < 1 {
            return Err(Error::InvalidArgument("order must be at least 1".into()));
        }
        let kind = classify_kernel(&kernel, order)?;
        Ok(Self { horizon, order, kernel, kind })
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// `φ⁽ⁱ⁾(t)` for `t ∈ [0, T]`.
    pub fn eval(&self, t: f64, i: usize) -> f64 {
        self.kernel.eval_s(t / self.horizon, i) / self.horizon.powi(i as i32)
    }

    /// Max |φ| over a fine grid, used as the reference for boundary tests.
    fn peak(kernel: &Kernel) -> f64 {
        (0..=1000).map(|k| kernel.eval_s(k as f64 / 1000.0, 0).abs()).fold(0.0, f64::max)
    }
}

fn classify_kernel(kernel: &Kernel, k: usize) -> Result<Kind> {
    let peak = ModulatingFunction::peak(kernel);
    let vanishes = |s: f64| {
        // s-derivatives carry the magnitude of φ itself, so one reference works
        (0..k).all(|i| kernel.eval_s(s, i).abs() <= 1e-9 * peak)
    };
    if peak == 0.0 {
        return Err(Error::NotAModulatingFunction { order: k });
    }
    match (vanishes(0.0), vanishes(1.0)) {
        (true, true) => Ok(Kind::Total),
        (true, false) => Ok(Kind::Left),
        (false, true) => Ok(Kind::Right),
        (false, false) => Err(Error::NotAModulatingFunction { order: k }),
    }
}

/// Boundary classification with `k` vanishing derivatives (orders `0..k`).
pub fn classify(mf: &ModulatingFunction, k: usize) -> Result<Kind> {
    classify_kernel(&mf.kernel, k)
}

/// `φ(t) = tᵏ (t − T)ᵏ`.
pub fn make_poly_total_mf(k: usize, horizon: f64) -> Result<ModulatingFunction> {
    if k < 1 {
        return Err(Error::InvalidArgument("total polynomial order must be at least 1".into()));
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let scale = sign * horizon.powi(2 * k as i32);
    ModulatingFunction::new(Kernel::Beta { p: k as u32, q: k as u32, scale }, horizon, k)
}

/// `φ(t) = sᵖ (1 − s)^q`, `s = t/T`, a total MF of order `min(p, q)`.
pub fn make_beta_mf(p: u32, q: u32, horizon: f64) -> Result<ModulatingFunction> {
    ModulatingFunction::new(Kernel::Beta { p, q, scale: 1.0 }, horizon, p.min(q).max(1) as usize)
}

/// `φ_{l,j}(t) = (t/T)^{n+j−1}`.
pub fn make_poly_left_mf(j: usize, n: usize, horizon: f64) -> Result<ModulatingFunction> {
    if j < 1 || n < 1 {
        return Err(Error::InvalidArgument("left MF needs j ≥ 1 and n ≥ 1".into()));
    }
    ModulatingFunction::new(Kernel::Beta { p: (n + j - 1) as u32, q: 0, scale: 1.0 }, horizon, n)
}

/// Default total bank for order `n`: `(b,b), (b,2b), (2b,b), (b,4b), (4b,b), …`
/// with `b = n + 1`, trimmed to `count` kernels. Skewed pairs keep the bank
/// far better conditioned than symmetric `tᵏ(T−t)ᵏ` families on long windows.
pub fn default_total_bank(n: usize, count: usize, horizon: f64) -> Result<Vec<ModulatingFunction>> {
    let b = (n + 1) as u32;
    let mut pairs = vec![(b, b)];
    let mut f = 2;
    while pairs.len() < count {
        pairs.push((b, f * b));
        pairs.push((f * b, b));
        f *= 2;
    }
    pairs.truncate(count);
    pairs.into_iter().map(|(p, q)| make_beta_mf(p, q, horizon)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_total_values() {
        let mf = make_poly_total_mf(2, 1.0).unwrap();
        assert!((mf.eval(0.5, 0) - 0.0625).abs() < 1e-15);
        assert!(mf.eval(0.0, 1).abs() < 1e-15 && mf.eval(1.0, 1).abs() < 1e-15);
        for k in 1..6 {
            let mf = make_poly_total_mf(k, 3.0).unwrap();
            assert_eq!(mf.eval(0.0, 0), 0.0);
            assert!(mf.eval(3.0, 0).abs() < 1e-12);
            assert_eq!(mf.kind(), Kind::Total);
        }
        // direct expansion t²(t−T)² at T=3, t=1.2
        let mf = make_poly_total_mf(2, 3.0).unwrap();
        let t: f64 = 1.2;
        assert!((mf.eval(t, 0) - t * t * (t - 3.0).powi(2)).abs() < 1e-12);
        // second derivative: 12t² − 12Tt + 2T²
        assert!((mf.eval(t, 2) - (12.0 * t * t - 36.0 * t + 18.0)).abs() < 1e-12);
        assert!(make_poly_total_mf(0, 1.0).is_err());
    }

    #[test]
    fn poly_left_values() {
        let mf = make_poly_left_mf(1, 2, 1.0).unwrap();
        assert_eq!(mf.eval(1.0, 0), 1.0);
        assert_eq!(mf.eval(1.0, 1), 2.0);
        assert_eq!(mf.eval(0.0, 0), 0.0);
        assert_eq!(mf.eval(0.0, 1), 0.0);
        let mf = make_poly_left_mf(2, 2, 2.0).unwrap();
        assert_eq!(mf.eval(2.0, 0), 1.0);
        assert!((mf.eval(2.0, 1) - 1.5).abs() < 1e-15);
        for j in 1..5 {
            assert_eq!(classify(&make_poly_left_mf(j, 2, 5.0).unwrap(), 2).unwrap(), Kind::Left);
        }
    }

    #[test]
    fn classification() {
        let tot = make_poly_total_mf(2, 7.0).unwrap();
        assert_eq!(classify(&tot, 2).unwrap(), Kind::Total);
        let right = ModulatingFunction::new(Kernel::Beta { p: 0, q: 3, scale: 1.0 }, 1.0, 2).unwrap();
        assert_eq!(right.kind(), Kind::Right);
        let one = Kernel::Polynomial(vec![1.0]);
        assert_eq!(ModulatingFunction::new(one, 1.0, 1), Err(Error::NotAModulatingFunction { order: 1 }));
    }

    #[test]
    fn beta_derivatives_match_polynomial_expansion() {
        // s³(1−s)² = s³ − 2s⁴ + s⁵
        let beta = Kernel::Beta { p: 3, q: 2, scale: 1.0 };
        let poly = Kernel::Polynomial(vec![0.0, 0.0, 0.0, 1.0, -2.0, 1.0]);
        for i in 0..7 {
            for k in 0..=10 {
                let s = k as f64 / 10.0;
                assert!((beta.eval_s(s, i) - poly.eval_s(s, i)).abs() < 1e-12, "i={i} s={s}");
            }
        }
    }

    #[test]
    fn default_bank_is_total() {
        let bank = default_total_bank(2, 5, 100.0).unwrap();
        let pairs: Vec<_> = bank
            .iter()
            .map(|m| match m.kernel {
                Kernel::Beta { p, q, .. } => (p, q),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(pairs, vec![(3, 3), (3, 6), (6, 3), (3, 12), (12, 3)]);
        assert!(bank.iter().all(|m| m.kind() == Kind::Total && m.order == 3));
    }
}
