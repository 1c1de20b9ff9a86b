//! `welander` — command-line analysis of the non-smooth Welander
//! ocean-convection model.
//!
//! Five subcommands cover the pipeline: `analyze` (regime report),
//! `cycle` (limit-cycle computation), `scan` (epsilon sweep),
//! `trajectory` and `portrait` (plot-ready integrations). Parameters come
//! from flags or a JSON config file; flags override the file. All outputs
//! are deterministic: identical inputs yield byte-identical bytes.

mod commands;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;
use welander_core::welander::WelanderParams;
use welander_core::Error as CoreError;

/// A command failure carrying its process exit code and a machine-readable
/// kind for the error object printed to stderr.
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "invalid_input",
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            kind: "internal_defect",
            message: message.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        // Errors reachable from bad user input exit with 2; anything else
        // indicates a defect in the pipeline and exits with 3.
        let (code, kind) = match e {
            CoreError::InvalidParams(_) => (2, "invalid_input"),
            CoreError::OutOfDomain { .. } => (2, "out_of_domain"),
            CoreError::AsymptoteReached { .. } => (2, "out_of_domain"),
            CoreError::NonpositiveSmoothing { .. } => (2, "invalid_input"),
            CoreError::EscapingStart { .. } => (2, "escaping_start"),
            _ => (3, "internal_defect"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "welander",
    version,
    about = "Analysis of the non-smooth Welander ocean-convection model"
)]
struct Cli {
    /// JSON config file supplying parameters and options; flags override it
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report thresholds, regime, eigenvalues, equilibria, folds, and the
    /// switching-line partition as JSON
    Analyze {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        io: IoFlags,
    },
    /// Compute the crossing limit cycle (or report why none exists) as JSON
    Cycle {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        io: IoFlags,
        /// Write a sampled cycle polyline as CSV to this path
        #[arg(long, value_name = "PATH")]
        polyline: Option<PathBuf>,
        /// Time step between polyline samples
        #[arg(long, value_name = "DT", allow_negative_numbers = true)]
        dt_sample: Option<f64>,
    },
    /// Sweep epsilon over a uniform grid and tabulate cycle data as CSV
    Scan {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        io: IoFlags,
        /// First epsilon of the grid
        #[arg(long, value_name = "EPS", allow_negative_numbers = true)]
        eps_from: Option<f64>,
        /// Last epsilon of the grid
        #[arg(long, value_name = "EPS", allow_negative_numbers = true)]
        eps_to: Option<f64>,
        /// Grid spacing (must be positive)
        #[arg(long, value_name = "STEP", allow_negative_numbers = true)]
        eps_step: Option<f64>,
    },
    /// Integrate one trajectory and emit t,x,y samples as CSV
    Trajectory {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        io: IoFlags,
        #[command(flatten)]
        run: RunFlags,
        /// Initial x coordinate
        #[arg(long, value_name = "X", allow_negative_numbers = true)]
        x0: Option<f64>,
        /// Initial y coordinate
        #[arg(long, value_name = "Y", allow_negative_numbers = true)]
        y0: Option<f64>,
    },
    /// Integrate a grid of starts and emit a concatenated CSV with start_id
    Portrait {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        io: IoFlags,
        #[command(flatten)]
        run: RunFlags,
        /// Initial x coordinates (repeatable; crossed with --y0)
        #[arg(long, value_name = "X", num_args = 1.., allow_negative_numbers = true)]
        x0: Vec<f64>,
        /// Initial y coordinates (repeatable; crossed with --x0)
        #[arg(long, value_name = "Y", num_args = 1.., allow_negative_numbers = true)]
        y0: Vec<f64>,
    },
}

#[derive(Args)]
struct ParamFlags {
    /// Thermal forcing strength
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Ratio of the restoring rates
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Density threshold of the convection law
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Weak convective exchange rate
    #[arg(long, allow_negative_numbers = true)]
    k0: Option<f64>,
    /// Strong convective exchange rate
    #[arg(long, allow_negative_numbers = true)]
    k1: Option<f64>,
}

#[derive(Args)]
struct IoFlags {
    /// Output path (stdout when omitted)
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format; each command accepts only its native format
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct RunFlags {
    /// Integration horizon
    #[arg(long, value_name = "T", allow_negative_numbers = true)]
    horizon: Option<f64>,
    /// Time step between output samples
    #[arg(long, value_name = "DT", allow_negative_numbers = true)]
    dt_sample: Option<f64>,
    /// Integrate the smooth model with this smoothing parameter instead of
    /// the non-smooth one
    #[arg(long, value_name = "A", allow_negative_numbers = true)]
    smooth: Option<f64>,
    /// Path for the companion events JSON (defaults to the --out path with
    /// an `.events.json` extension)
    #[arg(long, value_name = "PATH")]
    events_out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Config-file counterpart of the flags. Unknown keys are rejected so a
/// typo cannot silently fall back to a default.
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    alpha: Option<f64>,
    beta: Option<f64>,
    epsilon: Option<f64>,
    k0: Option<f64>,
    k1: Option<f64>,
    x0: Option<NumOrList>,
    y0: Option<NumOrList>,
    horizon: Option<f64>,
    dt_sample: Option<f64>,
    smooth: Option<f64>,
    eps_from: Option<f64>,
    eps_to: Option<f64>,
    eps_step: Option<f64>,
}

/// A scalar or a list; trajectory takes the scalar form, portrait either.
#[derive(Deserialize)]
#[serde(untagged)]
enum NumOrList {
    One(f64),
    Many(Vec<f64>),
}

impl NumOrList {
    fn to_vec(&self) -> Vec<f64> {
        match self {
            NumOrList::One(v) => vec![*v],
            NumOrList::Many(vs) => vs.clone(),
        }
    }

    fn to_scalar(&self, name: &str) -> Result<f64, Failure> {
        match self {
            NumOrList::One(v) => Ok(*v),
            NumOrList::Many(vs) if vs.len() == 1 => Ok(vs[0]),
            NumOrList::Many(_) => Err(Failure::invalid(format!(
                "trajectory takes a single {name}, got a list"
            ))),
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("malformed config {}: {e}", path.display())))
}

fn resolve_params(file: &FileConfig, flags: &ParamFlags) -> Result<WelanderParams, Failure> {
    let get = |flag: Option<f64>, from_file: Option<f64>, name: &str| {
        flag.or(from_file)
            .ok_or_else(|| Failure::invalid(format!("missing parameter: --{name}")))
    };
    let alpha = get(flags.alpha, file.alpha, "alpha")?;
    let beta = get(flags.beta, file.beta, "beta")?;
    let epsilon = get(flags.epsilon, file.epsilon, "epsilon")?;
    let k0 = get(flags.k0, file.k0, "k0")?;
    let k1 = get(flags.k1, file.k1, "k1")?;
    Ok(WelanderParams::new(alpha, beta, epsilon, k0, k1)?)
}

/// Check that an explicit --format matches the command's native format.
fn check_format(requested: Option<Format>, native: Format, command: &str) -> Result<(), Failure> {
    match requested {
        Some(f) if f != native => {
            let name = match native {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            Err(Failure::invalid(format!("{command} only emits {name}")))
        }
        _ => Ok(()),
    }
}

fn init_logging() -> Result<(), Failure> {
    let level = match std::env::var("WELANDER_LOG") {
        Err(_) => log::LevelFilter::Off,
        Ok(v) => match v.as_str() {
            "quiet" => log::LevelFilter::Off,
            "info" => log::LevelFilter::Info,
            "debug" => log::LevelFilter::Debug,
            other => {
                return Err(Failure::invalid(format!(
                    "WELANDER_LOG must be quiet, info, or debug (got {other:?})"
                )))
            }
        },
    };
    env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .init();
    Ok(())
}

fn run() -> Result<(), Failure> {
    init_logging()?;
    let cli = Cli::parse();
    let file = load_config(cli.config.as_ref())?;
    match &cli.command {
        Command::Analyze { params, io } => {
            check_format(io.format, Format::Json, "analyze")?;
            let p = resolve_params(&file, params)?;
            commands::analyze(&p, io.out.as_deref())
        }
        Command::Cycle {
            params,
            io,
            polyline,
            dt_sample,
        } => {
            check_format(io.format, Format::Json, "cycle")?;
            let p = resolve_params(&file, params)?;
            let dt = dt_sample.or(file.dt_sample).unwrap_or(0.01);
            commands::cycle(&p, io.out.as_deref(), polyline.as_deref(), dt)
        }
        Command::Scan {
            params,
            io,
            eps_from,
            eps_to,
            eps_step,
        } => {
            check_format(io.format, Format::Csv, "scan")?;
            let p = resolve_params(&file, params)?;
            let need = |flag: Option<f64>, from_file: Option<f64>, name: &str| {
                flag.or(from_file)
                    .ok_or_else(|| Failure::invalid(format!("missing grid bound: --{name}")))
            };
            let from = need(*eps_from, file.eps_from, "eps-from")?;
            let to = need(*eps_to, file.eps_to, "eps-to")?;
            let step = need(*eps_step, file.eps_step, "eps-step")?;
            commands::scan(&p, from, to, step, io.out.as_deref())
        }
        Command::Trajectory {
            params,
            io,
            run,
            x0,
            y0,
        } => {
            check_format(io.format, Format::Csv, "trajectory")?;
            let p = resolve_params(&file, params)?;
            let pick = |flag: Option<f64>, from_file: &Option<NumOrList>, name: &str| match flag {
                Some(v) => Ok(v),
                None => from_file
                    .as_ref()
                    .ok_or_else(|| Failure::invalid(format!("missing start: --{name}")))
                    .and_then(|n| n.to_scalar(name)),
            };
            let start = (pick(*x0, &file.x0, "x0")?, pick(*y0, &file.y0, "y0")?);
            commands::trajectory(&p, start, &run_opts(run, &file), io.out.as_deref())
        }
        Command::Portrait {
            params,
            io,
            run,
            x0,
            y0,
        } => {
            check_format(io.format, Format::Csv, "portrait")?;
            let p = resolve_params(&file, params)?;
            let pick = |flags: &Vec<f64>, from_file: &Option<NumOrList>, name: &str| {
                if !flags.is_empty() {
                    Ok(flags.clone())
                } else {
                    from_file
                        .as_ref()
                        .map(NumOrList::to_vec)
                        .ok_or_else(|| Failure::invalid(format!("missing starts: --{name}")))
                }
            };
            let xs = pick(x0, &file.x0, "x0")?;
            let ys = pick(y0, &file.y0, "y0")?;
            commands::portrait(&p, &xs, &ys, &run_opts(run, &file), io.out.as_deref())
        }
    }
}

fn run_opts(run: &RunFlags, file: &FileConfig) -> commands::RunOptions {
    commands::RunOptions {
        horizon: run.horizon.or(file.horizon).unwrap_or(20.0),
        dt_sample: run.dt_sample.or(file.dt_sample).unwrap_or(0.01),
        smooth: run.smooth.or(file.smooth),
        events_out: run.events_out.clone(),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let obj = json!({ "error": { "kind": f.kind, "message": f.message } });
            eprintln!(
                "{}",
                serde_json::to_string_pretty(&obj).expect("error object")
            );
            ExitCode::from(f.code as u8)
        }
    }
}
