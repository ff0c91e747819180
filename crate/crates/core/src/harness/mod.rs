//! Scenario runner: configuration, CSV/JSON I/O, bundled scenarios.

pub mod config;
pub mod csvio;
pub mod report;
pub mod run;
pub mod scenarios;

pub use config::{EstimatorConfig, Format, ScenarioConfig};
pub use csvio::{load_csv, parse_csv, write_trajectory};
pub use report::RunReport;
pub use run::{run_scenario, RunOptions};
