//! Acceptance suite against the simulated RC plant.
//!
//! Runs the nine criteria in order, prints one `PASS`/`FAIL` line for each
//! and exits non-zero if any of them fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use mfid::estimators::*;
use mfid::harness::scenarios::{bundled, BUNDLED};
use mfid::harness::{run_scenario, RunOptions};
use mfid::lti::{structural_matrices, IoCoefficients};
use mfid::model::{ModelStructure, Term};
use mfid::modfunc::alpha::solve_alpha_slices;
use mfid::modfunc::*;
use mfid::plant::*;
use mfid::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TS: f64 = 2.0;
const T: f64 = 2000.0;
const T_AVG: f64 = 2000.0;
const NOISE: f64 = 0.25;
const SEEDS: u64 = 10;

fn rc() -> RcParams {
    RcParams { cm: 10.0, cs: 50.0, rms: 2.0, rsr: 5.0, tr: 20.0 }
}

/// Pulse experiment over `[0, T + T′]`.
fn pulse() -> Trajectory {
    let p = rc();
    let sys = rc_system(&p).unwrap();
    let profile = InputProfile::Pulse { amplitude: 1.5, period: 1200.0, duty: 0.5, offset: 0.0 };
    simulate(&sys, p.tr, &profile, &DVector::from_vec(vec![p.tr, p.tr]), TS, T + T_AVG, 10).unwrap()
}

fn structure() -> ModelStructure {
    ModelStructure::io(2, true).unwrap()
}

fn fixed_bank() -> FixedBank {
    FixedBank::new(default_total_bank(2, 5, T).unwrap(), 2, TS, (T / TS) as usize, Quadrature::Gregory)
}

fn normalized() -> NormalizedEstimator {
    NormalizedEstimator::new(structure(), TS, T, T_AVG, Quadrature::Gregory, 1).unwrap()
}

fn direct() -> DirectCtEstimator {
    DirectCtEstimator::new(structure(), TS, T, (3, 3), T_AVG, &GramianKernel::Beta { p: 1, q: 1 }).unwrap()
}

/// Last estimate over the whole record.
fn last_estimate(est: &mut dyn ParameterEstimator, u: &[f64], y: &[f64]) -> Option<ParameterEstimate> {
    let mut last = None;
    for (&u, &y) in u.iter().zip(y) {
        if let Ok(Some(e)) = est.tick(u, y) {
            last = Some(e);
        }
    }
    last
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn sup_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

/// Values shared between criteria.
#[derive(Default)]
struct Shared {
    /// normalized estimate from noise-free data at `t = T + T′`
    clean_estimate: Option<IoCoefficients>,
    /// normalized estimates from the noisy runs, one per seed
    noisy_estimates: Vec<IoCoefficients>,
}

// ---------------------------------------------------------------------------

fn noise_free_identification(sh: &mut Shared) -> Outcome {
    let tr = pulse();
    let truth = rc().coefficients().unwrap();
    let want = structure().theta(&truth);
    let names = structure().names();
    let ests: Vec<(&str, Box<dyn ParameterEstimator>)> = vec![
        ("batch", Box::new(BatchEstimator::new(structure(), fixed_bank()).unwrap())),
        (
            "gramian",
            Box::new(GramianEstimator::new(structure(), fixed_bank(), T_AVG, &GramianKernel::Uniform).unwrap()),
        ),
        ("normalized", Box::new(normalized())),
        ("direct_ct", Box::new(direct())),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, mut est) in ests {
        let start = Instant::now();
        let last = last_estimate(est.as_mut(), &tr.u, &tr.y);
        let elapsed = start.elapsed();
        let Some(e) = last else {
            pass = false;
            lines.push(format!("{name}: no estimate"));
            continue;
        };
        let worst = e.theta.iter().zip(&want).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
        let worst_name = &names[e
            .theta
            .iter()
            .zip(&want)
            .enumerate()
            .fold((0, 0.0), |acc, (k, (a, b))| if rel(*a, *b) > acc.1 { (k, rel(*a, *b)) } else { acc })
            .0];
        let ok = (e.time - (T + T_AVG)).abs() < 1e-9 && !e.stale && worst < 1e-3 && elapsed < Duration::from_secs(10);
        pass &= ok;
        lines.push(format!(
            "{name}: t={} max rel {worst:.2e} ({worst_name}) in {:.2} s",
            e.time,
            elapsed.as_secs_f64()
        ));
        if name == "normalized" {
            sh.clean_estimate = Some(e.coefficients);
        }
    }
    Outcome::new(pass, lines.join("; "))
}

fn noisy_identification(sh: &mut Shared) -> Outcome {
    let clean = pulse();
    let truth = rc().coefficients().unwrap();
    let st = structure();
    let want = st.theta(&truth);
    let mut norm: Vec<Vec<f64>> = Vec::new();
    let mut dir: Vec<Vec<f64>> = Vec::new();
    for seed in 0..SEEDS {
        let tr = add_noise(&clean, NOISE, seed).unwrap();
        let e = last_estimate(&mut normalized(), &tr.u, &tr.y).expect("normalized estimate");
        sh.noisy_estimates.push(e.coefficients.clone());
        norm.push(e.theta);
        dir.push(last_estimate(&mut direct(), &tr.u, &tr.y).expect("direct estimate").theta);
    }
    let med = |runs: &[Vec<f64>], k: usize| median(runs.iter().map(|t| t[k]).collect());
    // θ = [d, −a0, −a1, b0, b1]; a1 and b1 get the tight tolerance
    let tol = [0.15, 0.15, 0.05, 0.15, 0.05];
    let names = st.names();
    let mut pass = true;
    let mut parts = Vec::new();
    for k in 0..want.len() {
        let e = rel(med(&norm, k), want[k]);
        pass &= e < tol[k];
        parts.push(format!("{}={:+.1}%", names[k], 100.0 * (med(&norm, k) - want[k]) / want[k].abs()));
    }
    let a0_norm = rel(med(&norm, 1), want[1]);
    let a0_dir = rel(med(&dir, 1), want[1]);
    let direct_worse = a0_dir > a0_norm;
    pass &= direct_worse;
    Outcome::new(
        pass,
        format!(
            "normalized median errors {} (limits 15/15/5/15/5%); direct_ct a0 {:.1}% vs normalized {:.1}%",
            parts.join(" "),
            100.0 * a0_dir,
            100.0 * a0_norm
        ),
    )
}

fn singularity_demonstration() -> Outcome {
    let (ts, horizon, amp): (f64, f64, f64) = (1e-3, 2.0, 1.5);
    let n = 40_001;
    let st = ModelStructure::new(2, vec![Term::Output(0)]).unwrap();
    let steps = (horizon / ts).round() as usize;
    let mf = make_poly_total_mf(2, horizon).unwrap();
    let t: Vec<f64> = (0..n).map(|k| k as f64 * ts).collect();
    let y: Vec<f64> = t.iter().map(|t| 15.0 * (2.0 * t).sin()).collect();
    let clean = Trajectory { ts, t, u: vec![0.0; n], y_clean: y.clone(), y, x: vec![], noise: None };
    let mut pass = true;
    let (mut min_fixed, mut max_norm, mut worst_l0) = (f64::INFINITY, 0.0f64, 0.0f64);
    for seed in 0..SEEDS {
        let tr = add_noise(&clean, amp, seed).unwrap();
        let bank = FixedBank::new(vec![mf.clone()], 2, ts, steps, Quadrature::Gregory);
        let mut fixed = BatchEstimator::new(st.clone(), bank).unwrap();
        let mut norm = NormalizedEstimator::new(st.clone(), ts, horizon, 0.0, Quadrature::Gregory, 1).unwrap();
        let (mut fmax, mut at, mut nmax, mut count) = (0.0f64, 0, 0.0f64, 0);
        for k in 0..n {
            if let Ok(Some(e)) = fixed.tick(0.0, tr.y[k]) {
                if e.coefficients.a[0].abs() > fmax {
                    fmax = e.coefficients.a[0].abs();
                    at = k;
                }
            }
            match norm.tick(0.0, tr.y[k]) {
                Ok(Some(e)) => {
                    nmax = nmax.max(rel(e.coefficients.a[0], 4.0));
                    count += 1;
                }
                Ok(None) => {}
                Err(_) => pass = false,
            }
        }
        // L⁰[y] at the worst window against its typical size
        let l0 = |k: usize| apply_l(&mf, 0, &tr.y[k - steps..=k], ts, Quadrature::Gregory).abs();
        let typical = (steps..n).step_by(97).map(l0).fold(0.0, f64::max);
        worst_l0 = worst_l0.max(l0(at) / typical);
        pass &= count == n - steps && fmax > 40.0 && nmax < 0.05;
        min_fixed = min_fixed.min(fmax);
        max_norm = max_norm.max(nmax);
    }
    pass &= worst_l0 < 0.1;
    Outcome::new(
        pass,
        format!(
            "fixed MF min over seeds of max|â0| = {min_fixed:.1} (> 40), at |L⁰[y]| ≤ {:.2e} of its peak; normalized max|â0−4|/4 = {:.2}% (< 5%)",
            worst_l0,
            100.0 * max_norm
        ),
    )
}

fn operator_identity() -> Outcome {
    type F = fn(f64, usize) -> f64;
    let signals: [(&str, F); 3] = [
        ("sin", |t, i| match i {
            0 => (2.0 * t + 0.3).sin(),
            1 => 2.0 * (2.0 * t + 0.3).cos(),
            _ => -4.0 * (2.0 * t + 0.3).sin(),
        }),
        ("exp·sin", |t, i| {
            let (e, s, c) = ((-0.5 * t).exp(), (3.0 * t).sin(), (3.0 * t).cos());
            match i {
                0 => e * s,
                1 => e * (3.0 * c - 0.5 * s),
                _ => e * (-8.75 * s - 3.0 * c),
            }
        }),
        ("cubic", |t, i| match i {
            0 => t * t * t - 2.0 * t * t + t - 0.5,
            1 => 3.0 * t * t - 4.0 * t + 1.0,
            _ => 6.0 * t - 4.0,
        }),
    ];
    let (horizon, t0) = (1.0, 0.4);
    // order n + 1 = 3, as in the estimator banks: φ⁽ⁱ⁾ vanishes at both ends for i ≤ 2
    let error = |order: usize, f: F, i: usize, ts: f64| {
        let mf = make_poly_total_mf(order, horizon).unwrap();
        let n = (horizon / ts).round() as usize;
        let samples = |d: usize| (0..=n).map(|k| f(t0 + k as f64 * ts, d)).collect::<Vec<_>>();
        let lhs = apply_l(&mf, 0, &samples(i), ts, Quadrature::Riemann);
        let rhs = apply_l(&mf, i, &samples(0), ts, Quadrature::Riemann);
        (lhs - rhs).abs() / rhs.abs()
    };
    let mut pass = true;
    let (mut worst, mut worst_ratio) = (0.0f64, 0.0f64);
    let (mut minimal, mut minimal_ratio) = (0.0f64, 0.0f64);
    for (name, f) in signals {
        for i in 0..=2 {
            let (e1, e2) = (error(3, f, i, 1e-3), error(3, f, i, 5e-4));
            worst = worst.max(e1);
            if i == 0 {
                // both sides are the same sum
                pass &= e1 == 0.0;
                continue;
            }
            worst_ratio = worst_ratio.max(e2 / e1);
            if !(e1 < 1e-3 && e2 <= 0.55 * e1) {
                pass = false;
                eprintln!("  {name} i={i}: e(Ts)={e1:.3e} e(Ts/2)={e2:.3e}");
            }
            // the minimal order-2 kernel keeps an O(Ts) boundary term at i = 2
            let (m1, m2) = (error(2, f, i, 1e-3), error(2, f, i, 5e-4));
            minimal = minimal.max(m1);
            minimal_ratio = minimal_ratio.max(m2 / m1);
        }
    }
    Outcome::new(
        pass,
        format!(
            "order-3 kernel: max rel error {worst:.2e} at Ts=1e-3, worst e(Ts/2)/e(Ts) = {worst_ratio:.3}; \
             order-2 kernel (not gated): {minimal:.2e}, ratio {minimal_ratio:.3}"
        ),
    )
}

/// Per-cell Gauss–Legendre integration of `ψ⁽ⁱ⁾(t − τ)` times the held signal.
fn brute_force(gen: &MfGenerator, f: &[f64], ts: f64, i: usize, hold: Hold) -> f64 {
    let (gx, gw) = mfid::linalg::gauss_legendre(10);
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

fn filter_vs_quadrature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let ts = rng.random_range(0.01..0.2);
        let n = rng.random_range(10..60usize);
        let horizon = n as f64 * ts;
        let spec = if rng.random_bool(0.5) {
            let (p, q) = (rng.random_range(2..6u32), rng.random_range(2..6u32));
            GeneratorSpec::Reversed { mf: make_beta_mf(p, q, horizon).unwrap() }
        } else {
            let r0 = rng.random_range(0.5..2.0) / horizon;
            GeneratorSpec::Exponential { rates: vec![r0, 2.1 * r0, 3.3 * r0] }
        };
        let gen = make_mf_generator(&spec, horizon).unwrap();
        let hold = if rng.random_bool(0.5) { Hold::Zero } else { Hold::First };
        let len = n + 1 + rng.random_range(0..4 * n);
        let (w, ph, noise) = (rng.random_range(0.2..3.0), rng.random_range(0.0..6.0), rng.random_range(0.0..0.5));
        let sig: Vec<f64> =
            (0..len).map(|k| (w * k as f64 * ts + ph).sin() + noise * rng.random_range(-1.0..=1.0)).collect();
        let mut filt = MFilterState::new(&gen, ts, 2, hold).unwrap();
        for v in &sig {
            filt.step(*v);
        }
        for i in 0..=2 {
            let want = brute_force(&gen, &sig[len - n - 1..], ts, i, hold);
            worst = worst.max((filt.read(i).unwrap() - want).abs());
        }
    }
    Outcome::new(worst <= 1e-6, format!("max |M − quadrature| = {worst:.2e} over 100 windows, i ≤ 2"))
}

fn representer_solver() -> Outcome {
    let tr = pulse();
    let st = structure();
    let m = (T / TS) as usize + 1;
    let mut pass = true;
    let mut parts = Vec::new();
    for q in [Quadrature::Riemann, Quadrature::Gregory] {
        let (mut w_err, mut g_err, mut windows) = (0.0f64, 0.0f64, 0);
        for end in m..=tr.len() {
            let (u, y) = (&tr.u[end - m..end], &tr.y[end - m..end]);
            match solve_alpha_slices(u, y, TS, &st, q) {
                Ok(bank) => {
                    let (w, g) = reconstruct(&bank, u, y);
                    w_err = w_err.max((w - DMatrix::identity(st.len(), st.len())).amax());
                    g_err = g_err.max(g.amax());
                }
                Err(_) => pass = false,
            }
            windows += 1;
        }
        pass &= w_err <= 1e-8 && g_err <= 1e-8;
        parts.push(format!("{q:?}: {windows} windows, max ‖W−I‖ {w_err:.1e}, max ‖Γ‖ {g_err:.1e}"));
    }
    let zero = vec![0.0; m];
    let deficient =
        matches!(solve_alpha_slices(&zero, &zero, TS, &st, Quadrature::Gregory), Err(Error::RankDeficient { .. }));
    pass &= deficient;
    parts.push(format!("zero window rank-deficient: {deficient}"));
    Outcome::new(pass, parts.join("; "))
}

fn finite_time_state(sh: &Shared) -> Outcome {
    let Some(coeffs) = sh.clean_estimate.clone() else {
        return Outcome::new(false, "no coefficients from the noise-free identification");
    };
    let (ts, horizon) = (1.0, 50.0);
    let plant = rc();
    let prbs = InputProfile::Prbs { amplitude: 1.5, chip: 60.0, seed: 1 };
    let clean =
        simulate(&rc_system(&plant).unwrap(), plant.tr, &prbs, &DVector::from_vec(vec![24.0, 22.0]), ts, 3000.0, 10)
            .unwrap();
    let phys = io_to_physical(&coeffs).unwrap();
    let sys = rc_system(&phys).unwrap();
    let sm = structural_matrices(&sys).unwrap();
    let run = |tr: &Trajectory| -> (Option<f64>, f64, f64) {
        let mut mf = MfStateEstimator::new(2, ts, horizon, 2, StateMode::Left, Quadrature::Gregory).unwrap();
        mf.set_coefficients(&coeffs, &sm).unwrap();
        let gains = place_poles(&sys, &default_poles(&sys)).unwrap();
        let mut lu = Luenberger::new(&sys, &gains, ts, phys.tr, Luenberger::level_guess(&sys, tr.y[0])).unwrap();
        let (mut first, mut sup_mf, mut lu_transient) = (None, 0.0f64, 0.0f64);
        for k in 0..tr.len() {
            let x = tr.state(k).unwrap();
            let l = lu.step(tr.u[k], tr.y[k]);
            if tr.t[k] <= horizon {
                lu_transient = lu_transient.max(sup_err(&l.x_hat, &x));
            }
            if let Some(s) = mf.tick(tr.u[k], tr.y[k]).unwrap() {
                first.get_or_insert(s.time);
                sup_mf = sup_mf.max(sup_err(&s.x_hat, &x));
            }
        }
        (first, sup_mf, lu_transient)
    };
    let (first, sup_clean, lu_transient) = run(&clean);
    let mut pass = first == Some(horizon) && sup_clean < 0.05 && sup_clean <= lu_transient;
    let mut sup_noisy = 0.0f64;
    for seed in 0..SEEDS {
        let (_, s, _) = run(&add_noise(&clean, NOISE, seed).unwrap());
        sup_noisy = sup_noisy.max(s);
    }
    pass &= sup_noisy < 3.0 * NOISE;
    Outcome::new(
        pass,
        format!(
            "first estimate t={first:?}; noise-free sup error {sup_clean:.2e} °C (< 0.05) vs Luenberger transient {lu_transient:.2}; noisy sup error {sup_noisy:.3} (< {})",
            3.0 * NOISE
        ),
    )
}

fn fit_metric(sh: &Shared) -> Outcome {
    if sh.noisy_estimates.is_empty() {
        return Outcome::new(false, "no noisy estimates");
    }
    let clean = pulse();
    let fits: Vec<f64> = sh
        .noisy_estimates
        .iter()
        .map(|c| fit_percent(&clean.y_clean, &resimulate(c, &clean.u, clean.ts, clean.y_clean[0]).unwrap()).unwrap())
        .collect();
    let min = fits.iter().copied().fold(f64::INFINITY, f64::min);
    Outcome::new(
        min >= 95.0,
        format!("normalized estimates, {} seeds: min fit {min:.2}%, median {:.2}%", fits.len(), median(fits.clone())),
    )
}

fn files_equal(a: &Path, b: &Path) -> bool {
    matches!((std::fs::read(a), std::fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn determinism() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, _, _) in BUNDLED {
        let cfg = bundled(name).unwrap();
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let reports: Vec<_> = dirs
            .iter()
            .map(|d| {
                let opts =
                    RunOptions { seed: Some(7), out_dir: Some(d.path().to_path_buf()), format: None, base_dir: None };
                run_scenario(&cfg, &opts).unwrap()
            })
            .collect();
        let same = reports[0] == reports[1]
            && !reports[0].files.is_empty()
            && reports[0].files.iter().all(|f| files_equal(&dirs[0].path().join(f), &dirs[1].path().join(f)));
        pass &= same;
        parts.push(format!("{name}: {} files {}", reports[0].files.len(), if same { "identical" } else { "DIFFER" }));
    }
    Outcome::new(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------

fn main() {
    let mut shared = Shared::default();
    let mut failed = Vec::new();
    let mut check = |id: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::new(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let verdict = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} {verdict} [{title}] {} ({:.1} s)", out.detail, start.elapsed().as_secs_f64());
        if !out.pass {
            failed.push(id);
        }
    };
    check(1, "noise-free identification", &mut || noise_free_identification(&mut shared));
    check(2, "noisy identification", &mut || noisy_identification(&mut shared));
    check(3, "singularity demonstration", &mut singularity_demonstration);
    check(4, "operator identities", &mut operator_identity);
    check(5, "filter vs quadrature", &mut filter_vs_quadrature);
    check(6, "representer solver", &mut representer_solver);
    check(7, "finite-time state estimation", &mut || finite_time_state(&shared));
    check(8, "fit metric", &mut || fit_metric(&shared));
    check(9, "determinism", &mut determinism);
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
    } else {
        println!("acceptance: {} of 9 failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
