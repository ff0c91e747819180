//! Tick-by-tick scenario execution.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use super::config::{CoefficientSource, EstimatorConfig, Format, PlantConfig, ScenarioConfig};
use super::csvio::{load_csv, trajectory_csv, GRID_TOLERANCE};
use super::report::{FinalEstimate, ParameterSummary, RunReport, StateSummary};
use crate::error::{Error, Result};
use crate::estimators::{
    default_poles, fit_percent, place_poles, resimulate, BatchEstimator, DirectCtEstimator, GramianEstimator,
    Luenberger, MfStateEstimator, NormalizedEstimator, ParameterEstimate, ParameterEstimator,
};
use crate::lti::{structural_matrices, ContinuousLtiSystem, IoCoefficients, StructuralMatrices};
use crate::model::ModelStructure;
use crate::modfunc::window::intervals;
use crate::modfunc::{default_total_bank, FixedBank};
use crate::plant::{add_noise, integrate, io_to_physical, rc_system, Trajectory};

/// Command-line overrides and file locations.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// Where to write traces and the report; nothing is written when unset
    /// and the config has no `output.dir` either.
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    /// Directory relative input paths resolve against.
    pub base_dir: Option<PathBuf>,
}

struct Data {
    traj: Trajectory,
    truth: Option<IoCoefficients>,
    /// plant outputs without measurement noise
    reference: Vec<f64>,
}

fn load_data(cfg: &ScenarioConfig, opts: &RunOptions, seed: u64) -> Result<Data> {
    let ts = cfg.sampling.ts;
    let (traj, truth) = match &cfg.plant {
        PlantConfig::Rc { x0, input_gain, substeps, .. } => {
            let p = cfg.plant.rc_params().expect("rc plant");
            let sys = rc_system(&p)?;
            let duration = cfg.sampling.duration.expect("validated");
            let count = (duration / ts + 1e-9).floor() as usize + 1;
            let profile = cfg.input.as_ref().expect("validated");
            let u = profile.samples(ts, count);
            let heat: Vec<f64> = u.iter().map(|v| v * input_gain).collect();
            let x0 = DVector::from_vec(x0.clone().unwrap_or(vec![p.tr, p.tr]));
            let xs = integrate(&sys, p.tr, &heat, &x0, ts, *substeps)?;
            let y: Vec<f64> = xs.iter().map(|x| sys.c.dot(x)).collect();
            let mut truth = p.coefficients()?;
            // estimators see the commanded input, so b absorbs the gain
            truth.b.iter_mut().for_each(|b| *b *= input_gain);
            let traj = Trajectory {
                ts,
                t: (0..count).map(|k| k as f64 * ts).collect(),
                u,
                y_clean: y.clone(),
                y,
                x: (0..2).map(|i| xs.iter().map(|x| x[i]).collect()).collect(),
                noise: None,
            };
            (traj, Some(truth))
        }
        PlantConfig::Csv { path } => {
            let full = match &opts.base_dir {
                Some(b) if Path::new(path).is_relative() => b.join(path),
                _ => PathBuf::from(path),
            };
            let mut traj = load_csv(&full)?;
            if (traj.ts - ts).abs() > GRID_TOLERANCE * ts {
                return Err(Error::config("sampling.ts", format!("{ts} does not match the recorded grid {}", traj.ts)));
            }
            traj.ts = ts;
            if let Some(d) = cfg.sampling.duration {
                let keep = ((d / ts + 1e-9).floor() as usize + 1).min(traj.len());
                traj.t.truncate(keep);
                traj.u.truncate(keep);
                traj.y.truncate(keep);
                traj.y_clean.truncate(keep);
                traj.x.iter_mut().for_each(|x| x.truncate(keep));
            }
            (traj, None)
        }
    };
    let reference = traj.y_clean.clone();
    let traj = add_noise(&traj, cfg.noise.amplitude, seed)?;
    Ok(Data { traj, truth, reference })
}

fn build_parameter(e: &EstimatorConfig, st: &ModelStructure, ts: f64) -> Result<Box<dyn ParameterEstimator>> {
    let n = st.n;
    let fixed = |horizon: f64, kernels: usize, q| -> Result<FixedBank> {
        let steps = intervals(horizon, ts)?;
        Ok(FixedBank::new(default_total_bank(n, kernels, horizon)?, n, ts, steps, q))
    };
    Ok(match e {
        EstimatorConfig::Batch { horizon, kernels, quadrature, .. } => {
            Box::new(BatchEstimator::new(st.clone(), fixed(*horizon, *kernels, *quadrature)?)?)
        }
        EstimatorConfig::Gramian { horizon, average, kernels, weight, quadrature, .. } => {
            Box::new(GramianEstimator::new(st.clone(), fixed(*horizon, *kernels, *quadrature)?, *average, weight)?)
        }
        EstimatorConfig::Normalized { horizon, average, quadrature, stride, .. } => {
            Box::new(NormalizedEstimator::new(st.clone(), ts, *horizon, *average, *quadrature, *stride)?)
        }
        EstimatorConfig::DirectCt { horizon, average, p, q, weight, .. } => {
            Box::new(DirectCtEstimator::new(st.clone(), ts, *horizon, (*p, *q), *average, weight)?)
        }
        EstimatorConfig::MfState { .. } | EstimatorConfig::Luenberger { .. } => unreachable!("state estimator"),
    })
}

struct ParamRun {
    name: String,
    kind: String,
    est: Box<dyn ParameterEstimator>,
    latest: Option<ParameterEstimate>,
    first: Option<f64>,
    stale_ticks: usize,
    error_ticks: usize,
    first_error: Option<String>,
    trace: String,
}

/// A model realization for state estimation.
struct Realization {
    sys: ContinuousLtiSystem,
    sm: StructuralMatrices,
    level: f64,
    physical: bool,
}

fn realize(c: &IoCoefficients) -> Result<Realization> {
    if c.order() == 2 {
        if let Ok(p) = io_to_physical(c) {
            let sys = rc_system(&p)?;
            let sm = structural_matrices(&sys)?;
            return Ok(Realization { sys, sm, level: p.tr, physical: true });
        }
    }
    let sys = c.canonical_realization();
    let sm = structural_matrices(&sys)?;
    Ok(Realization { sys, sm, level: 1.0, physical: false })
}

enum StateKind {
    Mf(MfStateEstimator),
    Luenberger { obs: Option<Luenberger>, poles: Option<Vec<f64>> },
}

struct StateRun {
    name: String,
    kind: String,
    source: CoefficientSource,
    ts: f64,
    update_every: f64,
    est: StateKind,
    last_update: Option<f64>,
    physical: Option<bool>,
    updates: usize,
    first: Option<f64>,
    /// `(t, ‖x̂ − x‖∞)` when true states are known
    errors: Vec<(f64, f64)>,
    error_ticks: usize,
    first_error: Option<String>,
    trace: String,
}

impl StateRun {
    fn note_error(&mut self, e: &Error) {
        self.error_ticks += 1;
        if self.first_error.is_none() {
            self.first_error = Some(e.to_string());
        }
    }

    fn apply(&mut self, c: &IoCoefficients, t: f64, y: f64) -> Result<()> {
        let r = realize(c)?;
        match &mut self.est {
            StateKind::Mf(est) => est.set_coefficients(c, &r.sm)?,
            StateKind::Luenberger { obs, poles } => {
                let p = poles.clone().unwrap_or_else(|| default_poles(&r.sys));
                let gains = place_poles(&r.sys, &p)?;
                match obs {
                    // a change of coordinates invalidates the running estimate
                    Some(o) if self.physical == Some(r.physical) => o.retune(&r.sys, &gains, r.level)?,
                    _ => {
                        *obs = Some(Luenberger::new(
                            &r.sys,
                            &gains,
                            self.ts,
                            r.level,
                            Luenberger::level_guess(&r.sys, y),
                        )?);
                    }
                }
            }
        }
        self.physical = Some(r.physical);
        self.last_update = Some(t);
        self.updates += 1;
        Ok(())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Runs a validated scenario and writes its outputs when an output directory
/// is configured. Estimator failures are recorded, not propagated.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let data = load_data(cfg, opts, seed)?;
    let traj = &data.traj;
    let ts = cfg.sampling.ts;
    let st = ModelStructure::io(cfg.model.order, cfg.model.include_d)?;
    let n = st.n;
    let coef_names: Vec<String> =
        IoCoefficients { a: vec![0.0; n], b: vec![0.0; n], d: 0.0 }.named().into_iter().map(|(k, _)| k).collect();

    let mut params = Vec::new();
    let mut states = Vec::new();
    for (k, e) in cfg.estimators.iter().enumerate() {
        let wrap = |err: Error| Error::config(format!("estimators[{k}]"), err.to_string());
        if let Some(src) = e.coefficient_source() {
            let est = match e {
                EstimatorConfig::MfState { horizon, count, mode, quadrature, .. } => {
                    StateKind::Mf(MfStateEstimator::new(n, ts, *horizon, *count, *mode, *quadrature).map_err(wrap)?)
                }
                EstimatorConfig::Luenberger { poles, .. } => StateKind::Luenberger { obs: None, poles: poles.clone() },
                _ => unreachable!(),
            };
            let follow = cfg.estimators.iter().find(|p| p.name() == src.source && !p.is_state());
            let update_every = src.update_every.unwrap_or_else(|| follow.map_or(0.0, |p| p.average() / 10.0));
            states.push(StateRun {
                name: e.name(),
                kind: e.kind().into(),
                source: src.clone(),
                ts,
                update_every,
                est,
                last_update: None,
                physical: None,
                updates: 0,
                first: None,
                errors: Vec::new(),
                error_ticks: 0,
                first_error: None,
                trace: String::new(),
            });
        } else {
            params.push(ParamRun {
                name: e.name(),
                kind: e.kind().into(),
                est: build_parameter(e, &st, ts).map_err(wrap)?,
                latest: None,
                first: None,
                stale_ticks: 0,
                error_ticks: 0,
                first_error: None,
                trace: String::new(),
            });
        }
    }

    let mut warnings = Vec::new();
    // static sources are applied before the first tick
    for s in states.iter_mut() {
        let fixed = match s.source.source.as_str() {
            "truth" => data.truth.clone(),
            "fixed" => s.source.fixed.clone(),
            _ => None,
        };
        if let Some(c) = fixed {
            if let Err(e) = s.apply(&c, 0.0, traj.y[0]) {
                warnings.push(format!("{}: cannot use the {} coefficients: {e}", s.name, s.source.source));
                s.note_error(&e);
            }
        }
    }

    let decimate = cfg.output.decimate;
    let has_states = !traj.x.is_empty();
    let mut plot = String::from("t,series,value\n");
    for k in 0..traj.len() {
        let t = traj.t[k];
        let (u, y) = (traj.u[k], traj.y[k]);
        let keep = k % decimate == 0;
        if keep {
            let _ = writeln!(plot, "{t},u,{u}");
            let _ = writeln!(plot, "{t},y,{y}");
            if has_states {
                for (i, x) in traj.x.iter().enumerate() {
                    let _ = writeln!(plot, "{t},plant.x{},{}", i + 1, x[k]);
                }
            }
        }
        for p in params.iter_mut() {
            match p.est.tick(u, y) {
                Ok(Some(est)) => {
                    if est.stale {
                        p.stale_ticks += 1;
                    }
                    p.first.get_or_insert(t);
                    if keep {
                        let named = est.coefficients.named();
                        let _ = write!(p.trace, "{t},{}", p.name);
                        for (_, v) in &named {
                            let _ = write!(p.trace, ",{v}");
                        }
                        let _ = writeln!(p.trace, ",{},{}", est.condition, est.stale);
                        for (c, v) in &named {
                            let _ = writeln!(plot, "{t},{}.{c},{v}", p.name);
                        }
                    }
                    p.latest = Some(est);
                }
                Ok(None) => {}
                Err(e) => {
                    p.error_ticks += 1;
                    if p.first_error.is_none() {
                        p.first_error = Some(format!("t = {t}: {e}"));
                    }
                }
            }
        }
        for s in states.iter_mut() {
            if let Some(src) = params.iter().find(|p| p.name == s.source.source) {
                if let Some(est) = src.latest.as_ref().filter(|e| !e.stale) {
                    let due = s.last_update.is_none_or(|last| t - last >= s.update_every - 1e-9 * ts);
                    if due {
                        let c = est.coefficients.clone();
                        if let Err(e) = s.apply(&c, t, y) {
                            s.note_error(&e);
                        }
                    }
                }
            }
            let out = match &mut s.est {
                StateKind::Mf(est) => est.tick(u, y).map(|o| o.map(|e| e.x_hat)),
                StateKind::Luenberger { obs, .. } => Ok(obs.as_mut().map(|o| o.step(u, y).x_hat)),
            };
            match out {
                Ok(Some(x_hat)) => {
                    s.first.get_or_insert(t);
                    let err = if has_states && s.physical == Some(true) && traj.x.len() == x_hat.len() {
                        let e = x_hat.iter().zip(&traj.x).map(|(a, x)| (a - x[k]).abs()).fold(0.0, f64::max);
                        s.errors.push((t, e));
                        Some(e)
                    } else {
                        None
                    };
                    if keep {
                        let _ = write!(s.trace, "{t},{}", s.name);
                        for v in &x_hat {
                            let _ = write!(s.trace, ",{v}");
                        }
                        let _ = writeln!(s.trace, ",{}", fmt_opt(err));
                        for (i, v) in x_hat.iter().enumerate() {
                            let _ = writeln!(plot, "{t},{}.x{},{v}", s.name, i + 1);
                        }
                    }
                }
                Ok(None) => {}
                Err(e) => s.note_error(&e),
            }
        }
    }

    let truth_map = data.truth.as_ref().map(FinalEstimate::coefficients);
    let mut summaries = Vec::new();
    for p in &params {
        let final_estimate = p.latest.as_ref().map(|e| FinalEstimate {
            time: e.time,
            coefficients: FinalEstimate::coefficients(&e.coefficients),
            condition: e.condition,
            stale: e.stale,
        });
        let relative_error = match (&p.latest, &data.truth) {
            (Some(e), Some(tr)) => Some(
                e.coefficients
                    .named()
                    .into_iter()
                    .zip(tr.named())
                    .map(|((k, v), (_, w))| (k, (v - w) / w))
                    .collect::<BTreeMap<_, _>>(),
            ),
            _ => None,
        };
        let fit = p.latest.as_ref().and_then(|e| {
            let sim = resimulate(&e.coefficients, &traj.u, ts, data.reference[0]).ok()?;
            fit_percent(&data.reference, &sim).ok().filter(|f| f.is_finite())
        });
        if p.latest.is_some() && fit.is_none() {
            warnings.push(format!("{}: re-simulation from the final estimate diverged", p.name));
        }
        if p.latest.is_none() {
            warnings.push(format!("{}: no valid estimate", p.name));
        }
        if p.stale_ticks > 0 {
            warnings.push(format!("{}: {} stale ticks", p.name, p.stale_ticks));
        }
        summaries.push(ParameterSummary {
            name: p.name.clone(),
            kind: p.kind.clone(),
            valid_from: p.est.valid_from(),
            first_estimate: p.first,
            physical: p.latest.as_ref().and_then(|e| io_to_physical(&e.coefficients).ok()),
            final_estimate,
            relative_error,
            fit_percent: fit,
            stale_ticks: p.stale_ticks,
            error_ticks: p.error_ticks,
            first_error: p.first_error.clone(),
        });
    }
    // the window after which MF state estimates are defined
    let settle = states
        .iter()
        .filter(|s| matches!(s.est, StateKind::Mf(_)))
        .filter_map(|s| s.first)
        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))));
    let mut state_summaries = Vec::new();
    for s in &states {
        let sup = |from: f64| s.errors.iter().filter(|(t, _)| *t >= from).map(|(_, e)| *e).reduce(f64::max);
        if s.first.is_none() {
            warnings.push(format!("{}: no state estimate", s.name));
        }
        state_summaries.push(StateSummary {
            name: s.name.clone(),
            kind: s.kind.clone(),
            source: s.source.source.clone(),
            coordinates: match s.physical {
                Some(true) => "physical",
                Some(false) => "canonical",
                None => "none",
            }
            .into(),
            first_estimate: s.first,
            sup_error: sup(f64::NEG_INFINITY),
            sup_error_after_window: settle.and_then(sup),
            final_error: s.errors.last().map(|(_, e)| *e),
            coefficient_updates: s.updates,
            error_ticks: s.error_ticks,
            first_error: s.first_error.clone(),
        });
    }

    let mut report = RunReport {
        scenario: cfg.name.clone(),
        seed,
        ts,
        samples: traj.len(),
        duration: traj.t.last().copied().unwrap_or(0.0) - traj.t[0],
        noise_amplitude: cfg.noise.amplitude,
        truth: truth_map,
        parameter_estimators: summaries,
        state_estimators: state_summaries,
        files: Vec::new(),
        warnings,
    };

    let out_dir = opts.out_dir.clone().or_else(|| {
        cfg.output.dir.as_ref().map(|d| match &opts.base_dir {
            Some(b) if Path::new(d).is_relative() => b.join(d),
            _ => PathBuf::from(d),
        })
    });
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let mut files: Vec<(&str, String)> = Vec::new();
        if cfg.output.trajectory {
            files.push(("trajectory.csv", trajectory_csv(traj)));
        }
        if !params.is_empty() {
            let mut s = String::from("t,estimator");
            for c in &coef_names {
                let _ = write!(s, ",{c}");
            }
            s.push_str(",condition,stale\n");
            for p in &params {
                s.push_str(&p.trace);
            }
            files.push(("estimates.csv", s));
        }
        if !states.is_empty() {
            let mut s = String::from("t,estimator");
            for i in 0..n {
                let _ = write!(s, ",x{}_hat", i + 1);
            }
            s.push_str(",sup_error\n");
            for st in &states {
                s.push_str(&st.trace);
            }
            files.push(("states.csv", s));
        }
        files.push(("plot.csv", plot));
        let report_name = match opts.format.unwrap_or(cfg.output.format) {
            Format::Json => "report.json",
            Format::Csv => "report.csv",
        };
        report.files = files.iter().map(|(f, _)| f.to_string()).chain([report_name.to_string()]).collect();
        let rendered = match opts.format.unwrap_or(cfg.output.format) {
            Format::Json => report.to_json(),
            Format::Csv => report.to_csv(),
        };
        files.push((report_name, rendered));
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(report)
}
