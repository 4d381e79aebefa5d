use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

mod commands;

/// Joint measurability of binary quantum measurements via semidefinite programming.
#[derive(Debug, Parser)]
#[command(name = "jmsdp", version)]
#[command(after_help = "Environment:\n  JMSDP_THREADS  worker threads for sweeps (default: all cores)\n\n\
Exit status: 0 on success, 1 on domain errors (invalid inputs, solver failure,\n\
failed selftest checks), 2 on usage errors.")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Solver tolerance on relative residuals and gap.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Maximum interior-point iterations.
    #[arg(long, global = true, default_value_t = 200)]
    pub max_iter: usize,
    /// Seed for randomized inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of measurements accepted by the joint measurability SDP.
    #[arg(long, global = true, default_value_t = jm_core::jm::DEFAULT_G_CAP)]
    pub cap_g: usize,
    /// Output format. Defaults to JSON; `selftest` defaults to a text table.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Noise {
    Balanced,
    Linear,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a tuple of effects is jointly measurable.
    JmCheck {
        /// Effect tuple JSON file.
        #[arg(long)]
        effects: PathBuf,
    },
    /// Largest t such that the effects mixed with noise at t·direction are compatible.
    Robustness {
        #[arg(long)]
        effects: PathBuf,
        /// Comma-separated nonnegative direction, e.g. 1,1.
        #[arg(long, value_parser = parse_scaling)]
        direction: jm_core::quantum::ScalingVector,
        #[arg(long, value_enum, default_value_t = Noise::Balanced)]
        noise: Noise,
        /// Upper limit on t (default 1/max(direction)).
        #[arg(long)]
        t_cap: Option<f64>,
    },
    /// Robustness along many directions, in parallel.
    Sweep {
        #[arg(long)]
        effects: PathBuf,
        #[arg(long, value_enum, default_value_t = Noise::Balanced)]
        noise: Noise,
        #[command(flatten)]
        directions: DirectionSource,
    },
    /// Pairwise anti-commuting Hermitian unitaries.
    SpinGen {
        #[arg(long)]
        g: usize,
        /// Emit the effect tuple (I + F_i)/2 instead of the matrices.
        #[arg(long)]
        as_effects: bool,
    },
    /// Mutually unbiased bases in prime dimension.
    MubGen {
        #[arg(long)]
        d: usize,
        /// Emit projections onto subsets of the bases as an effect tuple; one
        /// subset per basis, separated by ';', e.g. "0;1;0,2".
        #[arg(long)]
        subsets: Option<String>,
    },
    /// Zhu's necessary condition for the binary POVMs {E_i, I - E_i}.
    Zhu {
        #[arg(long)]
        effects: PathBuf,
    },
    /// Membership in the quarter circle and cloning regions.
    CloneRegion {
        #[arg(long)]
        g: usize,
        #[arg(long)]
        d: usize,
        /// A point to classify.
        #[arg(long, value_parser = parse_scaling, conflicts_with_all = ["grid", "boundary"])]
        s: Option<jm_core::quantum::ScalingVector>,
        /// Classify an N×N grid of [0,1]² (g = 2).
        #[arg(long, conflicts_with = "boundary")]
        grid: Option<usize>,
        /// Region boundary along N directions in the positive quadrant (g = 2).
        #[arg(long)]
        boundary: Option<usize>,
    },
    /// Matrix diamond membership of a matrix tuple, or diamond inclusion for effects.
    DiamondCheck {
        /// Matrix tuple JSON file.
        #[arg(long, required_unless_present = "effects", conflicts_with = "effects")]
        matrices: Option<PathBuf>,
        /// Effect tuple JSON file.
        #[arg(long)]
        effects: Option<PathBuf>,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Selftest {
        /// Comma-separated check ids (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct DirectionSource {
    /// N directions (cos θ, sin θ) evenly spaced over [0, π/2] (g = 2).
    #[arg(long)]
    pub angles: Option<usize>,
    /// N random unit directions in the positive orthant, from --seed.
    #[arg(long)]
    pub random: Option<usize>,
    /// JSON file with a list of directions.
    #[arg(long)]
    pub directions: Option<PathBuf>,
}

fn parse_scaling(s: &str) -> Result<jm_core::quantum::ScalingVector, String> {
    jm_core::quantum::ScalingVector::parse(s)
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Domain(e.into())
    }
}

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Output of a command: the rendered text and whether it reports success.
pub struct Output {
    pub text: String,
    pub ok: bool,
}

impl Output {
    pub fn json(v: &Value) -> Self {
        Self { text: format!("{}\n", serde_json::to_string_pretty(v).expect("JSON values serialize")), ok: true }
    }
}

pub fn with_schema(mut v: Value) -> Value {
    if let Value::Object(map) = &mut v {
        map.insert("schema".into(), json!(jm_core::quantum::SCHEMA));
    }
    v
}

pub fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Domain(anyhow::anyhow!("reading {}: {e}", path.display())))
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("JMSDP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("JMSDP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Domain(e.into()))
}

fn run(cli: Cli) -> Result<Output, Failure> {
    if !(cli.global.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    configure_threads()?;
    let out = commands::dispatch(&cli.global, cli.command)?;
    match &cli.global.out {
        Some(path) => {
            std::fs::write(path, &out.text)
                .map_err(|e| Failure::Domain(anyhow::anyhow!("writing {}: {e}", path.display())))?;
            Ok(Output { text: String::new(), ok: out.ok })
        }
        None => Ok(out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            if out.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
