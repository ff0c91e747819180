use std::fs;

use mfid::harness::config::PlantConfig;
use mfid::harness::scenarios::{bundled, bundled_source};
use mfid::harness::{run_scenario, Format, RunOptions, ScenarioConfig};
use mfid::Error;

fn opts(out: Option<&std::path::Path>) -> RunOptions {
    RunOptions { seed: None, out_dir: out.map(|p| p.to_path_buf()), format: None, base_dir: None }
}

#[test]
fn recorded_trajectory_reproduces_the_simulated_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = bundled("param-pulse").unwrap();
    cfg.noise.amplitude = 0.25;
    let sim = run_scenario(&cfg, &opts(Some(dir.path()))).unwrap();

    // replay the written (noisy) log without adding more noise
    let mut replay = cfg.clone();
    replay.plant = PlantConfig::Csv { path: "trajectory.csv".into() };
    replay.input = None;
    replay.noise.amplitude = 0.0;
    replay.validate().unwrap();
    let o = RunOptions { base_dir: Some(dir.path().to_path_buf()), ..opts(None) };
    let rec = run_scenario(&replay, &o).unwrap();

    assert!(rec.truth.is_none());
    assert_eq!(rec.samples, sim.samples);
    let (a, b) = (&sim.parameter_estimators[0], &rec.parameter_estimators[0]);
    assert_eq!(a.final_estimate.as_ref().unwrap().coefficients, b.final_estimate.as_ref().unwrap().coefficients);
}

#[test]
fn seed_selects_the_noise_realization() {
    let cfg = bundled("compare-pulse").unwrap();
    let run = |seed| run_scenario(&cfg, &RunOptions { seed: Some(seed), ..opts(None) }).unwrap();
    let (a, b, c) = (run(3), run(3), run(4));
    assert_eq!(a, b);
    assert_ne!(a.parameter_estimators, c.parameter_estimators);
    assert_eq!(c.seed, 4);
}

#[test]
fn csv_report_replaces_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = bundled("state-prbs").unwrap();
    let o = RunOptions { format: Some(Format::Csv), ..opts(Some(dir.path())) };
    let report = run_scenario(&cfg, &o).unwrap();
    assert!(report.files.contains(&"report.csv".to_string()));
    assert!(!dir.path().join("report.json").exists());
    let text = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(text.starts_with("section,name,quantity,value\n"));
    for f in &report.files {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let states = fs::read_to_string(dir.path().join("states.csv")).unwrap();
    assert!(states.lines().count() > 1);
}

#[test]
fn nothing_is_written_without_an_output_dir() {
    let report = run_scenario(&bundled("param-pulse").unwrap(), &opts(None)).unwrap();
    assert!(report.files.is_empty());
    assert!(report.parameter_estimators[0].fit_percent.unwrap() > 99.9);
}

#[test]
fn mismatched_sampling_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("log.csv"), "t,u,y\n0,0,1\n0.5,0,1\n1,0,1\n").unwrap();
    let text = r#"
        name = "log"
        [plant]
        kind = "csv"
        path = "log.csv"
        [sampling]
        ts = 1.0
        [model]
        include_d = false
        [[estimators]]
        kind = "batch"
        horizon = 1.0
    "#;
    let cfg = ScenarioConfig::from_toml_str(text).unwrap();
    let o = RunOptions { base_dir: Some(dir.path().to_path_buf()), ..opts(None) };
    match run_scenario(&cfg, &o) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "sampling.ts"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_log_is_reported() {
    let mut cfg = bundled("param-pulse").unwrap();
    cfg.plant = PlantConfig::Csv { path: "/nonexistent/log.csv".into() };
    cfg.input = None;
    assert!(matches!(run_scenario(&cfg, &opts(None)), Err(Error::Io(_))));
}

#[test]
fn config_errors_name_the_field() {
    let base = bundled_source("param-pulse").unwrap();
    let bad = base.replace("duration = 4000.0", "duration = -1.0");
    match ScenarioConfig::from_toml_str(&bad) {
        Err(Error::Config { path, .. }) => assert_eq!(path, "sampling.duration"),
        other => panic!("{other:?}"),
    }
    let bad = base.replace("kind = \"normalized\"", "kind = \"kalman\"");
    assert!(matches!(ScenarioConfig::from_toml_str(&bad), Err(Error::Config { .. })));
}
