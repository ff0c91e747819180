//! Scenarios bundled with the crate.

use crate::error::{Error, Result};

use super::config::ScenarioConfig;

pub const BUNDLED: &[(&str, &str, &str)] = &[
    (
        "param-pulse",
        "pulse input, normalized time-varying kernels, noise-free",
        include_str!("../../scenarios/param-pulse.toml"),
    ),
    (
        "compare-pulse",
        "pulse input with measurement noise, all four parameter estimators",
        include_str!("../../scenarios/compare-pulse.toml"),
    ),
    (
        "state-prbs",
        "PRBS input, left-MF state estimator against a Luenberger observer",
        include_str!("../../scenarios/state-prbs.toml"),
    ),
];

pub fn bundled_source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _, _)| *n == name).map(|(_, _, s)| *s)
}

pub fn bundled(name: &str) -> Result<ScenarioConfig> {
    let src =
        bundled_source(name).ok_or_else(|| Error::config("<scenario>", format!("no bundled scenario `{name}`")))?;
    ScenarioConfig::from_toml_str(src)
}
