//! Structured run report. Contains no wall-clock data so that re-runs with
//! the same config and seed are byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::lti::IoCoefficients;
use crate::plant::RcParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub ts: f64,
    pub samples: usize,
    pub duration: f64,
    pub noise_amplitude: f64,
    /// Ground-truth coefficients when the plant is simulated.
    pub truth: Option<BTreeMap<String, f64>>,
    pub parameter_estimators: Vec<ParameterSummary>,
    pub state_estimators: Vec<StateSummary>,
    /// Files written next to the report, relative to the output directory.
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSummary {
    pub name: String,
    pub kind: String,
    pub valid_from: f64,
    /// Time of the first emitted estimate.
    pub first_estimate: Option<f64>,
    pub final_estimate: Option<FinalEstimate>,
    /// `(θ̂ − θ) / θ` per coefficient.
    pub relative_error: Option<BTreeMap<String, f64>>,
    /// Re-simulated output vs the noise-free (or recorded) output, percent.
    pub fit_percent: Option<f64>,
    /// Physical parameters implied by the final estimate, if realizable.
    pub physical: Option<RcParams>,
    pub stale_ticks: usize,
    pub error_ticks: usize,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalEstimate {
    pub time: f64,
    pub coefficients: BTreeMap<String, f64>,
    pub condition: f64,
    pub stale: bool,
}

impl FinalEstimate {
    pub fn coefficients(c: &IoCoefficients) -> BTreeMap<String, f64> {
        c.named().into_iter().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub name: String,
    pub kind: String,
    pub source: String,
    /// `physical` (plant states) or `canonical` (observability form)
    pub coordinates: String,
    pub first_estimate: Option<f64>,
    /// `sup_t ‖x̂ − x‖∞` over all emitted estimates
    pub sup_error: Option<f64>,
    /// the same, from the first estimate of the slowest MF state estimator on
    pub sup_error_after_window: Option<f64>,
    pub final_error: Option<f64>,
    pub coefficient_updates: usize,
    pub error_ticks: usize,
    pub first_error: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    /// Flat `section,name,quantity,value` view.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("section,name,quantity,value\n");
        let num = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(s, "run,{},seed,{}", self.scenario, self.seed);
        let _ = writeln!(s, "run,{},ts,{}", self.scenario, self.ts);
        let _ = writeln!(s, "run,{},samples,{}", self.scenario, self.samples);
        let _ = writeln!(s, "run,{},noise_amplitude,{}", self.scenario, self.noise_amplitude);
        if let Some(t) = &self.truth {
            for (k, v) in t {
                let _ = writeln!(s, "truth,plant,{k},{v}");
            }
        }
        for p in &self.parameter_estimators {
            let _ = writeln!(s, "parameter,{},first_estimate,{}", p.name, num(p.first_estimate));
            if let Some(f) = &p.final_estimate {
                let _ = writeln!(s, "parameter,{},time,{}", p.name, f.time);
                for (k, v) in &f.coefficients {
                    let _ = writeln!(s, "parameter,{},{k},{v}", p.name);
                }
                let _ = writeln!(s, "parameter,{},condition,{}", p.name, f.condition);
                let _ = writeln!(s, "parameter,{},stale,{}", p.name, f.stale);
            }
            if let Some(r) = &p.relative_error {
                for (k, v) in r {
                    let _ = writeln!(s, "parameter,{},rel_{k},{v}", p.name);
                }
            }
            let _ = writeln!(s, "parameter,{},fit_percent,{}", p.name, num(p.fit_percent));
            let _ = writeln!(s, "parameter,{},stale_ticks,{}", p.name, p.stale_ticks);
            let _ = writeln!(s, "parameter,{},error_ticks,{}", p.name, p.error_ticks);
        }
        for st in &self.state_estimators {
            let _ = writeln!(s, "state,{},first_estimate,{}", st.name, num(st.first_estimate));
            let _ = writeln!(s, "state,{},sup_error,{}", st.name, num(st.sup_error));
            let _ = writeln!(s, "state,{},sup_error_after_window,{}", st.name, num(st.sup_error_after_window));
            let _ = writeln!(s, "state,{},final_error,{}", st.name, num(st.final_error));
            let _ = writeln!(s, "state,{},error_ticks,{}", st.name, st.error_ticks);
        }
        for f in &self.files {
            let _ = writeln!(s, "file,{f},written,true");
        }
        s
    }

    /// `true` when some estimator never produced a valid estimate.
    pub fn has_failed_estimator(&self) -> bool {
        self.parameter_estimators.iter().any(|p| p.final_estimate.is_none())
            || self.state_estimators.iter().any(|s| s.first_estimate.is_none())
    }
}
