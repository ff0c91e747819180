//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cut-off used for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Condition numbers above this are treated as singular.
pub const COND_LIMIT: f64 = 1e12;

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Falling factorial p (p-1) ... (p-k+1).
pub fn falling(p: u32, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (p as f64 - i as f64))
}

/// 2-norm condition number of `m` after scaling every column to unit norm.
/// Zero columns make the matrix singular and yield `f64::INFINITY`.
pub fn cond_col_scaled(m: &DMatrix<f64>) -> f64 {
    let mut s = m.clone();
    for mut c in s.column_iter_mut() {
        let nrm = c.norm();
        if nrm == 0.0 {
            return f64::INFINITY;
        }
        c /= nrm;
    }
    cond(&s)
}

pub fn cond(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return f64::INFINITY;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves the square system `g x = h` after symmetric Jacobi equilibration.
/// Returns the solution and the condition number of the equilibrated matrix;
/// `None` when the equilibrated condition number exceeds [`COND_LIMIT`].
pub fn solve_equilibrated(g: &DMatrix<f64>, h: &DVector<f64>) -> (Option<DVector<f64>>, f64) {
    let n = g.nrows();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = g[(i, i)].abs().sqrt();
            if v > 0.0 {
                1.0 / v
            } else {
                0.0
            }
        })
        .collect();
    if d.contains(&0.0) {
        return (None, f64::INFINITY);
    }
    let gs = DMatrix::from_fn(n, n, |i, j| g[(i, j)] * d[i] * d[j]);
    let c = cond(&gs);
    if !(c < COND_LIMIT) {
        return (None, c);
    }
    let hs = DVector::from_fn(n, |i, _| h[i] * d[i]);
    let x = match gs.clone().lu().solve(&hs) {
        Some(x) => x,
        None => return (None, f64::INFINITY),
    };
    (Some(DVector::from_fn(n, |i, _| x[i] * d[i])), c)
}

/// Least-squares solution of `a x = b` (column-scaled, Householder QR) with
/// the condition number of the scaled matrix.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (Option<DVector<f64>>, f64) {
    let mut s = a.clone();
    let mut scale = vec![1.0; a.ncols()];
    for (j, mut c) in s.column_iter_mut().enumerate() {
        let nrm = c.norm();
        if nrm == 0.0 {
            return (None, f64::INFINITY);
        }
        c /= nrm;
        scale[j] = nrm;
    }
    let c = cond(&s);
    if !(c < COND_LIMIT) {
        return (None, c);
    }
    match left_pinv(&s) {
        Some(p) => {
            let x = p * b;
            (Some(DVector::from_fn(x.len(), |i, _| x[i] / scale[i])), c)
        }
        None => (None, c),
    }
}

/// Thin QR factors `(Q, R)` of a tall matrix, `Q` being `m × n`.
pub fn thin_qr(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = a.clone().qr();
    (qr.q(), qr.r())
}

/// `R⁻¹ Qᵀ`, the pseudo-inverse of a tall full-column-rank matrix.
///
/// Used instead of nalgebra's SVD solve, whose singular vectors lose several
/// digits on small ill-conditioned matrices.
pub fn left_pinv(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if a.nrows() < a.ncols() {
        return None;
    }
    let (q, r) = thin_qr(a);
    r.solve_upper_triangular(&q.transpose())
}

/// Numerical rank with the module-wide relative tolerance.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Matrix exponential together with the first two weighted input integrals,
/// for exact zero- and first-order-hold discretization of `x' = F x + g v`.
///
/// Returns `(Φ, Γ0, Γ1)` with `Φ = e^{F h}`, `Γ0 = ∫₀ʰ e^{F(h−s)} g ds` and
/// `Γ1 = ∫₀ʰ e^{F(h−s)} g s ds`.
pub fn hold_transitions(f: &DMatrix<f64>, g: &DMatrix<f64>, h: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = f.nrows();
    let m = g.ncols();
    let dim = n + 2 * m;
    let mut big = DMatrix::zeros(dim, dim);
    big.view_mut((0, 0), (n, n)).copy_from(&(f * h));
    big.view_mut((0, n), (n, m)).copy_from(&(g * h));
    for k in 0..m {
        big[(n + k, n + m + k)] = h;
    }
    let e = big.exp();
    let phi = e.view((0, 0), (n, n)).into_owned();
    let g0 = e.view((0, n), (n, m)).into_owned();
    let g1 = e.view((0, n + m), (n, m)).into_owned();
    (phi, g0, g1)
}
