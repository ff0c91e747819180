//! Scenario configuration (TOML).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{GramianKernel, StateMode};
use crate::lti::IoCoefficients;
use crate::modfunc::window::intervals;
use crate::modfunc::Quadrature;
use crate::plant::{InputProfile, RcParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    /// Drives the measurement noise.
    #[serde(default)]
    pub seed: u64,
    pub plant: PlantConfig,
    /// Required for the simulated plant; ignored for recorded data.
    #[serde(default)]
    pub input: Option<InputProfile>,
    #[serde(default)]
    pub noise: NoiseConfig,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub estimators: Vec<EstimatorConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_name() -> String {
    "scenario".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum PlantConfig {
    Rc {
        cm: f64,
        cs: f64,
        rms: f64,
        rsr: f64,
        /// room temperature, °C
        tr: f64,
        /// initial `(T_m, T_e)`; both at `T_r` when absent
        #[serde(default)]
        x0: Option<Vec<f64>>,
        /// volts → watts
        #[serde(default = "unit")]
        input_gain: f64,
        #[serde(default = "default_substeps")]
        substeps: usize,
    },
    /// Recorded `t,u,y[,x1,…]` log; relative paths resolve against the config file.
    Csv { path: String },
}

impl PlantConfig {
    pub fn rc_params(&self) -> Option<RcParams> {
        match *self {
            PlantConfig::Rc { cm, cs, rms, rsr, tr, .. } => Some(RcParams { cm, cs, rms, rsr, tr }),
            PlantConfig::Csv { .. } => None,
        }
    }
}

fn unit() -> f64 {
    1.0
}

fn default_substeps() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// uniform `[−amplitude, amplitude]` on `y`
    #[serde(default)]
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub ts: f64,
    /// Simulated length; recorded data is used in full when absent.
    #[serde(default)]
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "two")]
    pub order: usize,
    #[serde(default = "yes")]
    pub include_d: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { order: 2, include_d: true }
    }
}

fn two() -> usize {
    2
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub format: Format,
    /// write every k-th tick to the trace files
    #[serde(default = "one_usize")]
    pub decimate: usize,
    #[serde(default = "yes")]
    pub trajectory: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, format: Format::Json, decimate: 1, trajectory: true }
    }
}

fn one_usize() -> usize {
    1
}

fn t_default() -> f64 {
    2000.0
}

fn bank_default() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum EstimatorConfig {
    Batch {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "t_default")]
        horizon: f64,
        #[serde(default = "bank_default")]
        kernels: usize,
        #[serde(default)]
        quadrature: Quadrature,
    },
    Gramian {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "t_default")]
        horizon: f64,
        #[serde(default = "t_default")]
        average: f64,
        #[serde(default = "bank_default")]
        kernels: usize,
        #[serde(default)]
        weight: GramianKernel,
        #[serde(default)]
        quadrature: Quadrature,
    },
    Normalized {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "t_default")]
        horizon: f64,
        #[serde(default = "t_default")]
        average: f64,
        #[serde(default)]
        quadrature: Quadrature,
        #[serde(default = "one_usize")]
        stride: usize,
    },
    DirectCt {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "t_default")]
        horizon: f64,
        #[serde(default = "t_default")]
        average: f64,
        #[serde(default = "direct_exp")]
        p: u32,
        #[serde(default = "direct_exp")]
        q: u32,
        #[serde(default = "direct_weight")]
        weight: GramianKernel,
    },
    MfState {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "state_horizon")]
        horizon: f64,
        /// number of left kernels
        #[serde(default = "two")]
        count: usize,
        #[serde(default)]
        mode: StateMode,
        #[serde(default)]
        quadrature: Quadrature,
        #[serde(default)]
        coefficients: CoefficientSource,
    },
    Luenberger {
        #[serde(default)]
        name: Option<String>,
        /// observer poles; `2.5×` the plant eigenvalues when absent
        #[serde(default)]
        poles: Option<Vec<f64>>,
        #[serde(default)]
        coefficients: CoefficientSource,
    },
}

fn direct_exp() -> u32 {
    3
}

fn direct_weight() -> GramianKernel {
    GramianKernel::Beta { p: 1, q: 1 }
}

fn state_horizon() -> f64 {
    50.0
}

/// Where a state estimator takes its model from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSource {
    /// `"truth"`, `"fixed"` or the name of a parameter estimator
    #[serde(default = "truth")]
    pub source: String,
    #[serde(default)]
    pub fixed: Option<IoCoefficients>,
    /// Minimum seconds between refactorizations when following an estimator;
    /// defaults to a tenth of that estimator's averaging horizon.
    #[serde(default)]
    pub update_every: Option<f64>,
}

impl Default for CoefficientSource {
    fn default() -> Self {
        Self { source: truth(), fixed: None, update_every: None }
    }
}

fn truth() -> String {
    "truth".into()
}

impl EstimatorConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            EstimatorConfig::Batch { .. } => "batch",
            EstimatorConfig::Gramian { .. } => "gramian",
            EstimatorConfig::Normalized { .. } => "normalized",
            EstimatorConfig::DirectCt { .. } => "direct_ct",
            EstimatorConfig::MfState { .. } => "mf_state",
            EstimatorConfig::Luenberger { .. } => "luenberger",
        }
    }

    pub fn name(&self) -> String {
        let n = match self {
            EstimatorConfig::Batch { name, .. }
            | EstimatorConfig::Gramian { name, .. }
            | EstimatorConfig::Normalized { name, .. }
            | EstimatorConfig::DirectCt { name, .. }
            | EstimatorConfig::MfState { name, .. }
            | EstimatorConfig::Luenberger { name, .. } => name,
        };
        n.clone().unwrap_or_else(|| self.kind().to_string())
    }

    pub fn is_state(&self) -> bool {
        matches!(self, EstimatorConfig::MfState { .. } | EstimatorConfig::Luenberger { .. })
    }

    pub fn coefficient_source(&self) -> Option<&CoefficientSource> {
        match self {
            EstimatorConfig::MfState { coefficients, .. } | EstimatorConfig::Luenberger { coefficients, .. } => {
                Some(coefficients)
            }
            _ => None,
        }
    }

    /// Averaging horizon `T′` of a parameter estimator (0 for batch).
    pub fn average(&self) -> f64 {
        match self {
            EstimatorConfig::Gramian { average, .. }
            | EstimatorConfig::Normalized { average, .. }
            | EstimatorConfig::DirectCt { average, .. } => *average,
            _ => 0.0,
        }
    }
}

impl ScenarioConfig {
    /// Parses and validates; errors carry the offending field path.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(s).map_err(|e| Error::config("<document>", e.message().trim()))?;
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::config(if path == "." { "<document>".into() } else { path }, inner.message().trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let ts = self.sampling.ts;
        if !(ts > 0.0) || !ts.is_finite() {
            return Err(Error::config("sampling.ts", format!("must be positive, got {ts}")));
        }
        if let Some(d) = self.sampling.duration {
            if !(d >= ts) || !d.is_finite() {
                return Err(Error::config("sampling.duration", format!("must be at least ts = {ts}, got {d}")));
            }
        }
        match &self.plant {
            PlantConfig::Rc { x0, input_gain, substeps, .. } => {
                let params = self.plant.rc_params().expect("rc plant");
                params.validate().map_err(|e| Error::config("plant", e.to_string()))?;
                if let Some(x0) = x0 {
                    if x0.len() != 2 || x0.iter().any(|v| !v.is_finite()) {
                        return Err(Error::config("plant.x0", "expects two finite temperatures"));
                    }
                }
                if !input_gain.is_finite() {
                    return Err(Error::config("plant.input_gain", "must be finite"));
                }
                if *substeps == 0 {
                    return Err(Error::config("plant.substeps", "must be at least 1"));
                }
                let input = self.input.as_ref().ok_or_else(|| Error::config("input", "required for the rc plant"))?;
                input.validate().map_err(|e| Error::config("input", e.to_string()))?;
                if self.sampling.duration.is_none() {
                    return Err(Error::config("sampling.duration", "required for the rc plant"));
                }
                if self.model.order != 2 {
                    return Err(Error::config("model.order", "the rc plant is second order"));
                }
            }
            PlantConfig::Csv { path } => {
                if path.is_empty() {
                    return Err(Error::config("plant.path", "must not be empty"));
                }
            }
        }
        if !(self.noise.amplitude >= 0.0) || !self.noise.amplitude.is_finite() {
            return Err(Error::config("noise.amplitude", "must be a finite non-negative number"));
        }
        let n = self.model.order;
        if n == 0 || n > crate::lti::MAX_ORDER {
            return Err(Error::config("model.order", format!("must be in 1..={}", crate::lti::MAX_ORDER)));
        }
        if self.output.decimate == 0 {
            return Err(Error::config("output.decimate", "must be at least 1"));
        }
        if self.estimators.is_empty() {
            return Err(Error::config("estimators", "at least one estimator must be enabled"));
        }
        let mut names = BTreeSet::new();
        let params: BTreeSet<String> = self.estimators.iter().filter(|e| !e.is_state()).map(|e| e.name()).collect();
        for (k, e) in self.estimators.iter().enumerate() {
            let at = |field: &str| format!("estimators[{k}].{field}");
            let name = e.name();
            if !names.insert(name.clone()) {
                return Err(Error::config(at("name"), format!("duplicate estimator name `{name}`")));
            }
            let multiple = |field: &str, v: f64| -> Result<()> {
                intervals(v, ts)
                    .map(|_| ())
                    .map_err(|_| Error::config(at(field), format!("{v} is not a positive multiple of ts = {ts}")))
            };
            match e {
                EstimatorConfig::Batch { horizon, kernels, .. } => {
                    multiple("horizon", *horizon)?;
                    let need = 2 * n + usize::from(self.model.include_d);
                    if *kernels < need {
                        return Err(Error::config(at("kernels"), format!("need at least {need} kernels")));
                    }
                }
                EstimatorConfig::Gramian { horizon, average, kernels, weight, .. } => {
                    multiple("horizon", *horizon)?;
                    multiple("average", *average)?;
                    if *kernels == 0 {
                        return Err(Error::config(at("kernels"), "need at least one kernel"));
                    }
                    check_weight(weight, &at("weight"))?;
                }
                EstimatorConfig::Normalized { horizon, average, stride, .. } => {
                    multiple("horizon", *horizon)?;
                    if *average != 0.0 {
                        multiple("average", *average)?;
                    }
                    if *stride == 0 {
                        return Err(Error::config(at("stride"), "must be at least 1"));
                    }
                }
                EstimatorConfig::DirectCt { horizon, average, p, q, weight, .. } => {
                    multiple("horizon", *horizon)?;
                    multiple("average", *average)?;
                    if (*p.min(q) as usize) < n {
                        return Err(Error::config(at("p"), format!("kernel exponents must be at least the order {n}")));
                    }
                    check_weight(weight, &at("weight"))?;
                }
                EstimatorConfig::MfState { horizon, count, coefficients, .. } => {
                    multiple("horizon", *horizon)?;
                    if *count < n {
                        return Err(Error::config(at("count"), format!("need at least {n} left kernels")));
                    }
                    self.check_source(coefficients, &params, &at("coefficients"))?;
                }
                EstimatorConfig::Luenberger { poles, coefficients, .. } => {
                    if let Some(p) = poles {
                        if p.len() != n || p.iter().any(|v| !(*v < 0.0)) {
                            return Err(Error::config(at("poles"), format!("need {n} negative real poles")));
                        }
                    }
                    self.check_source(coefficients, &params, &at("coefficients"))?;
                }
            }
        }
        Ok(())
    }

    fn check_source(&self, c: &CoefficientSource, params: &BTreeSet<String>, at: &str) -> Result<()> {
        let n = self.model.order;
        match c.source.as_str() {
            "truth" => {
                if !matches!(self.plant, PlantConfig::Rc { .. }) {
                    return Err(Error::config(format!("{at}.source"), "`truth` needs the simulated rc plant"));
                }
            }
            "fixed" => {
                let f = c
                    .fixed
                    .as_ref()
                    .ok_or_else(|| Error::config(format!("{at}.fixed"), "required with source = \"fixed\""))?;
                if f.a.len() != n || f.b.len() != n {
                    return Err(Error::config(format!("{at}.fixed"), format!("a and b need {n} entries")));
                }
            }
            other if params.contains(other) => {}
            other => {
                return Err(Error::config(format!("{at}.source"), format!("no parameter estimator named `{other}`")));
            }
        }
        if let Some(u) = c.update_every {
            if !(u >= 0.0) {
                return Err(Error::config(format!("{at}.update_every"), "must be non-negative"));
            }
        }
        Ok(())
    }
}

fn check_weight(w: &GramianKernel, at: &str) -> Result<()> {
    match w {
        GramianKernel::Exponential { rates } if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0)) => {
            Err(Error::config(at, "exponential rates must be positive"))
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [plant]
        kind = "rc"
        cm = 10.0
        cs = 50.0
        rms = 2.0
        rsr = 5.0
        tr = 20.0

        [input]
        kind = "pulse"
        amplitude = 1.5
        period = 1200.0

        [sampling]
        ts = 2.0
        duration = 4000.0

        [[estimators]]
        kind = "normalized"
    "#;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.model, ModelConfig { order: 2, include_d: true });
        match &c.estimators[0] {
            EstimatorConfig::Normalized { horizon, average, stride, .. } => {
                assert_eq!((*horizon, *average, *stride), (2000.0, 2000.0, 1));
            }
            other => panic!("{other:?}"),
        }
        let again = ScenarioConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn empty_estimator_list_is_rejected() {
        let s = MINIMAL.replace("[[estimators]]\n        kind = \"normalized\"", "");
        match ScenarioConfig::from_toml_str(&s) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "estimators"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_reports_its_path() {
        let s = MINIMAL.replace("ts = 2.0", "ts = 2.0\n        tss = 1.0");
        match ScenarioConfig::from_toml_str(&s) {
            Err(Error::Config { path, message }) => {
                assert!(path.starts_with("sampling"), "{path}");
                assert!(message.contains("tss"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn horizon_must_be_a_multiple_of_ts() {
        let s = MINIMAL.replace("kind = \"normalized\"", "kind = \"normalized\"\n        horizon = 2001.0");
        match ScenarioConfig::from_toml_str(&s) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "estimators[0].horizon"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn state_source_must_exist() {
        let s = format!(
            "{MINIMAL}\n[[estimators]]\nkind = \"mf_state\"\nhorizon = 50.0\ncoefficients = {{ source = \"nope\" }}\n"
        );
        match ScenarioConfig::from_toml_str(&s) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "estimators[1].coefficients.source"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_type_names_the_field() {
        let s = MINIMAL.replace("cm = 10.0", "cm = \"ten\"");
        match ScenarioConfig::from_toml_str(&s) {
            Err(Error::Config { path, .. }) => assert!(path.contains("plant"), "{path}"),
            other => panic!("{other:?}"),
        }
    }
}
