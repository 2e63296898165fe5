use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use pct_core::config::{load_config, ValidationReport};
use pct_core::metrics::compare_tables;
use pct_core::sim::simulate;
use pct_core::trace::TraceTable;
use pct_core::{Error, Method, Metrics, Preset, ScenarioConfig};

const EXIT_VALIDATION: u8 = 2;
const EXIT_GUARD: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "pct-track",
    version,
    about = "Polar-coordinate vessel tracking simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write manifest.json, trace.csv and metrics.json.
    Run(RunArgs),
    /// Per-signal deltas and control effort of two run directories.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// List the built-in presets.
    Presets,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Preset name (same as --preset).
    #[arg(value_name = "PRESET", conflicts_with_all = ["preset", "config"])]
    preset_pos: Option<String>,
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Scenario JSON, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t_final: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).ok_or_else(|| format!("expected 1, 2 or none, got {s:?}"))
}

#[derive(Debug, Serialize, Deserialize)]
struct Outputs {
    trace: PathBuf,
    metrics: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunManifest {
    scenario: String,
    seed: u64,
    method: Method,
    outputs: Outputs,
    validation: ValidationReport,
    config: ScenarioConfig,
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    status: &'a str,
    error: Option<String>,
    metrics: Metrics,
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Io(_) => EXIT_IO,
            Error::Parse(_) | Error::Validation(_) | Error::Csv(_) | Error::GridMismatch(_) => {
                EXIT_VALIDATION
            }
            _ => EXIT_GUARD,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_IO,
        msg: format!("{}: {e}", path.display()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(|e| io_failure(path, e))
}

/// Reads either a scenario document or a manifest wrapping one.
fn read_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    if value.get("config").is_some() && value.get("validation").is_some() {
        let m: RunManifest = serde_json::from_value(value).map_err(Error::from)?;
        return Ok(m.config);
    }
    Ok(load_config(path)?)
}

fn resolve(args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match (
        &args.config,
        args.preset.as_ref().or(args.preset_pos.as_ref()),
    ) {
        (Some(path), _) => read_config(path)?,
        (None, Some(name)) => Preset::from_name(name)
            .ok_or_else(|| Failure {
                code: EXIT_VALIDATION,
                msg: format!(
                    "unknown preset {name:?}; expected one of {}",
                    Preset::ALL.map(|p| p.name()).join(", ")
                ),
            })?
            .config(),
        (None, None) => ScenarioConfig::default(),
    };
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(t) = args.t_final {
        cfg.t_final = t;
    }
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = resolve(args)?;
    let validation = cfg.validate()?;
    for w in &validation.warnings {
        eprintln!("warning: {w}");
    }

    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let trace_path = args.out.join("trace.csv");
    let metrics_path = args.out.join("metrics.json");
    let manifest = RunManifest {
        scenario: cfg.name.clone(),
        seed: cfg.seed,
        method: cfg.method,
        outputs: Outputs {
            trace: trace_path.clone(),
            metrics: metrics_path.clone(),
        },
        validation,
        config: cfg.clone(),
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;

    let outcome = simulate(&cfg);
    outcome.trace.save_csv(&trace_path)?;
    let metrics = Metrics::from_trace(&outcome.trace);
    let summary = RunSummary {
        status: if outcome.error.is_some() {
            "failed"
        } else {
            "ok"
        },
        error: outcome.error.as_ref().map(ToString::to_string),
        metrics,
    };
    write_json(&metrics_path, &summary)?;

    let m = &summary.metrics;
    println!(
        "{} method {} seed {}: {} steps, settled p_e {:.4} m, psi_le {:.4} rad, effort {:.1}",
        cfg.name,
        cfg.method.label(),
        cfg.seed,
        m.steps,
        m.p_e.settled_max,
        m.psi_le.settled_max,
        m.effort
    );
    match outcome.error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn compare(a: &Path, b: &Path, json: bool) -> Result<(), Failure> {
    let load = |dir: &Path| TraceTable::load(&dir.join("trace.csv"));
    let (ta, tb) = (load(a)?, load(b)?);
    let cmp = compare_tables(&ta, &tb)?;
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&cmp).expect("serializable")
        );
        return Ok(());
    }
    println!("{:<12} {:>14} {:>14}", "signal", "rms", "max");
    for d in &cmp.deltas {
        println!("{:<12} {:>14.6e} {:>14.6e}", d.name, d.rms, d.max);
    }
    println!("effort a {:.6}  b {:.6}", cmp.effort_a, cmp.effort_b);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Compare { a, b, json } => compare(a, b, *json),
        Command::Presets => {
            for p in Preset::ALL {
                println!("{:<16} u_ld = {} m/s", p.name(), p.u_ld());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
