//! `mfid` — runs identification scenarios from TOML configs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use mfid::harness::scenarios::{bundled_source, BUNDLED};
use mfid::harness::{run_scenario, Format, RunOptions, ScenarioConfig};
use mfid::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NO_ESTIMATE: u8 = 3;

#[derive(Parser)]
#[command(name = "mfid", version, about = "Modulating-function identification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        config: String,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Where traces and the report are written (default: ./out/<scenario>).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutFormat>,
    },
    /// Parse and validate a config without running it.
    Validate { config: String },
    /// List the bundled scenarios.
    ListScenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

/// Config text and the directory relative paths resolve against.
fn load(config: &str) -> Result<(ScenarioConfig, Option<PathBuf>), Error> {
    let path = Path::new(config);
    if !path.exists() {
        if let Some(src) = bundled_source(config) {
            return Ok((ScenarioConfig::from_toml_str(src)?, None));
        }
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{config}: {e}")))?;
    let cfg = ScenarioConfig::from_toml_str(&text)?;
    Ok((cfg, path.parent().map(Path::to_path_buf)))
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. } | Error::Csv { .. } | Error::MissingColumn(_) | Error::NonUniformGrid { .. } => {
            ExitCode::from(EXIT_CONFIG)
        }
        _ => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListScenarios => {
            for (name, what, _) in BUNDLED {
                println!("{name:<16}{what}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load(&config) {
            Ok((cfg, _)) => {
                println!("{}: ok ({} estimators)", cfg.name, cfg.estimators.len());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        },
        Command::Run { config, seed, out_dir, format } => {
            let (cfg, base_dir) = match load(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit_for(&e);
                }
            };
            let out_dir = out_dir.or_else(|| cfg.output.dir.is_none().then(|| PathBuf::from("out").join(&cfg.name)));
            let opts = RunOptions { seed, out_dir: out_dir.clone(), format: format.map(Into::into), base_dir };
            let start = Instant::now();
            let report = match run_scenario(&cfg, &opts) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit_for(&e);
                }
            };
            // timing stays out of the report so re-runs are byte-identical
            let elapsed = start.elapsed();
            eprintln!(
                "{}: {} samples in {:.3} s ({:.1} µs/tick)",
                report.scenario,
                report.samples,
                elapsed.as_secs_f64(),
                elapsed.as_secs_f64() * 1e6 / report.samples.max(1) as f64
            );
            for p in &report.parameter_estimators {
                match &p.final_estimate {
                    Some(f) => {
                        let coeffs: Vec<String> = f.coefficients.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
                        let fit = p.fit_percent.map_or("-".into(), |v| format!("{v:.2}%"));
                        println!("{:<12} t={:<8} {}  fit={fit}", p.name, f.time, coeffs.join(" "));
                    }
                    None => println!("{:<12} no valid estimate", p.name),
                }
            }
            for s in &report.state_estimators {
                let sup = s.sup_error_after_window.or(s.sup_error).map_or("-".into(), |v| format!("{v:.4e}"));
                println!("{:<12} first={:?} sup_error={sup}", s.name, s.first_estimate);
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if let Some(dir) = out_dir.or_else(|| cfg.output.dir.as_ref().map(PathBuf::from)) {
                eprintln!("wrote {} files to {}", report.files.len(), dir.display());
            }
            if report.has_failed_estimator() {
                ExitCode::from(EXIT_NO_ESTIMATE)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
