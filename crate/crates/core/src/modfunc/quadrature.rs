//! Window quadrature.
//!
//! `Riemann` is the plain rectangle rule on the sample grid (one weight `Ts`
//! per sample, inclusive reverse cumulative sums). `Gregory` is a fourth-order
//! scheme that is aware of the zero-order-held input: the window is split at
//! every input switch, because the output has a derivative kink there, and each
//! smooth segment is integrated with end-corrected (Gregory) weights.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Riemann,
    #[default]
    Gregory,
}

#[derive(Debug, Clone, Copy)]
struct Stencil {
    idx: [usize; 4],
    w: [f64; 4],
    len: usize,
}

impl Stencil {
    fn new(pairs: &[(usize, f64)]) -> Self {
        let mut s = Stencil { idx: [0; 4], w: [0.0; 4], len: pairs.len() };
        for (k, (i, w)) in pairs.iter().enumerate() {
            s.idx[k] = *i;
            s.w[k] = *w;
        }
        s
    }

    #[inline]
    fn apply(&self, g: &[f64]) -> f64 {
        (0..self.len).map(|k| self.w[k] * g[self.idx[k]]).sum()
    }
}

/// Quadrature rule for one window of `M = N + 1` samples.
#[derive(Debug, Clone)]
pub struct Scheme {
    pub quadrature: Quadrature,
    pub ts: f64,
    /// Inner-product weights, `∫ f g ≈ Σ wₖ fₖ gₖ`.
    pub weights: Vec<f64>,
    /// Smooth segments `[a, b]` (sample indices, inclusive).
    pub segments: Vec<(usize, usize)>,
    cells: Vec<Stencil>,
}

/// Split points of a held input: a new segment starts wherever `u` changes.
pub fn segments(u: &[f64]) -> Vec<(usize, usize)> {
    let m = u.len();
    if m < 2 {
        return vec![(0, m.saturating_sub(1))];
    }
    let mut b = vec![0];
    b.extend((1..m - 1).filter(|&k| u[k] != u[k - 1]));
    b.push(m - 1);
    b.windows(2).map(|w| (w[0], w[1])).collect()
}

fn segment_weights(cells: usize) -> Vec<f64> {
    match cells {
        0 => vec![0.0],
        1 => vec![0.5, 0.5],
        2 => vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        3 => vec![3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0],
        4 => vec![1.0 / 3.0, 4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0],
        m => {
            let g = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
            let mut w = vec![1.0; m + 1];
            w[..3].copy_from_slice(&g);
            for k in 0..3 {
                w[m - k] = g[k];
            }
            w
        }
    }
}

/// Cubic-exact stencil for `∫` over cell `[j, j+1]` inside segment `[a, b]`.
fn cell_stencil(a: usize, b: usize, j: usize) -> Stencil {
    const H: f64 = 1.0 / 24.0;
    match b - a {
        1 => Stencil::new(&[(j, 0.5), (j + 1, 0.5)]),
        2 => {
            if j == a {
                Stencil::new(&[(a, 5.0 / 12.0), (a + 1, 8.0 / 12.0), (a + 2, -1.0 / 12.0)])
            } else {
                Stencil::new(&[(a, -1.0 / 12.0), (a + 1, 8.0 / 12.0), (a + 2, 5.0 / 12.0)])
            }
        }
        _ if j == a => Stencil::new(&[(j, 9.0 * H), (j + 1, 19.0 * H), (j + 2, -5.0 * H), (j + 3, H)]),
        _ if j + 1 == b => Stencil::new(&[(j + 1, 9.0 * H), (j, 19.0 * H), (j - 1, -5.0 * H), (j - 2, H)]),
        _ => Stencil::new(&[(j - 1, -H), (j, 13.0 * H), (j + 1, 13.0 * H), (j + 2, -H)]),
    }
}

impl Scheme {
    /// Rule for a window whose held input samples are `u` (oldest first).
    pub fn new(quadrature: Quadrature, ts: f64, u: &[f64]) -> Self {
        let m = u.len();
        match quadrature {
            Quadrature::Riemann => Scheme {
                quadrature,
                ts,
                weights: vec![ts; m],
                segments: vec![(0, m.saturating_sub(1))],
                cells: Vec::new(),
            },
            Quadrature::Gregory => {
                let segs = segments(u);
                let mut weights = vec![0.0; m];
                let mut cells = Vec::with_capacity(m.saturating_sub(1));
                for &(a, b) in &segs {
                    for (k, w) in segment_weights(b - a).into_iter().enumerate() {
                        weights[a + k] += w * ts;
                    }
                    for j in a..b {
                        cells.push(cell_stencil(a, b, j));
                    }
                }
                Scheme { quadrature, ts, weights, segments: segs, cells }
            }
        }
    }

    /// Uniform-segment rule (no held input information).
    pub fn smooth(quadrature: Quadrature, ts: f64, m: usize) -> Self {
        Self::new(quadrature, ts, &vec![0.0; m])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `⟨f, g⟩ ≈ ∫₀ᵀ f g`.
    pub fn dot(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, f), g)| w * f * g).sum()
    }

    /// `(R g)(σₖ) ≈ ∫_{σₖ}^{T} g`. The Riemann variant is the inclusive sum
    /// `Ts Σ_{j ≥ k} gⱼ`.
    pub fn rev_cum(&self, g: &[f64]) -> Vec<f64> {
        let m = g.len();
        let mut out = vec![0.0; m];
        match self.quadrature {
            Quadrature::Riemann => {
                let mut acc = 0.0;
                for k in (0..m).rev() {
                    acc += self.ts * g[k];
                    out[k] = acc;
                }
            }
            Quadrature::Gregory => {
                for j in (0..m.saturating_sub(1)).rev() {
                    out[j] = out[j + 1] + self.ts * self.cells[j].apply(g);
                }
            }
        }
        out
    }

    /// Reverse cumulative integral of a zero-order-held signal (exact under
    /// `Gregory`: sample `j` holds over cell `[j, j+1]`).
    pub fn held_rev_cum(&self, u: &[f64]) -> Vec<f64> {
        match self.quadrature {
            Quadrature::Riemann => self.rev_cum(u),
            Quadrature::Gregory => {
                let m = u.len();
                let mut out = vec![0.0; m];
                for j in (0..m.saturating_sub(1)).rev() {
                    out[j] = out[j + 1] + self.ts * u[j];
                }
                out
            }
        }
    }
}
