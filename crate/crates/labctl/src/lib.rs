//! Command-line driver: parses configs, runs experiments, oracles and
//! fixtures, and writes their outputs.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod config;
pub mod output;

pub use config::RunConfig;

/// Failures mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("output error: {0}")]
    Output(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_UNKNOWN_FIXTURE: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) | CliError::Output(_) => EXIT_DATA,
            CliError::UnknownFixture(_) => EXIT_UNKNOWN_FIXTURE,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "auxlab",
    version,
    about = "Train, verify and inspect objectives with an added exponential neuron"
)]
pub struct Cli {
    /// Worker threads for parallel runs and grid cells.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyWhat {
    Grad,
    StationaryA,
    LocalMin,
    Pgb,
    Realizable,
    Factorization,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every configured variant over the configured seeds.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `seeds.base`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an oracle at points from a runs file or the config's `[point]`.
    Verify {
        what: VerifyWhat,
        #[arg(long)]
        config: PathBuf,
        /// `runs.jsonl` written by `train`.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Only runs with this label (e.g. `augmented`).
        #[arg(long)]
        variant: Option<String>,
        /// Only the run with this position among the selected runs.
        #[arg(long)]
        index: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate closed-form examples along an ε ladder.
    Example {
        /// Example name or `all`.
        name: String,
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Profile the two-well curve over (θ, b).
    Landscape {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force grid minimum of the standard objective.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Result of a command: its exit code and the JSON printed on stdout.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub report: serde_json::Value,
    pub out_dir: Option<PathBuf>,
}

/// Apply `AUXLAB_CLAMP` if set.
pub fn apply_clamp_env() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("AUXLAB_CLAMP") {
        let c: f64 = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("AUXLAB_CLAMP is not a number: {v}")))?;
        if !auxlab::scalar::set_exp_clamp(c) {
            return Err(CliError::Config(format!("AUXLAB_CLAMP must be positive, got {c}")));
        }
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<Outcome, CliError> {
    apply_clamp_env()?;
    let run = move || match cli.command {
        Command::Train { config, out, seed } => commands::train(&config, out.as_deref(), seed),
        Command::Verify {
            what,
            config,
            params,
            variant,
            index,
            seed,
            out,
        } => commands::verify(
            what,
            &config,
            params.as_deref(),
            variant.as_deref(),
            index,
            seed,
            out.as_deref(),
        ),
        Command::Example { name, eps, out } => commands::example(&name, &eps, out.as_deref()),
        Command::Landscape { config, out } => commands::landscape(config.as_deref(), out.as_deref()),
        Command::Oracle {
            config,
            resolution,
            out,
        } => commands::oracle(&config, resolution, out.as_deref()),
    };
    match cli.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
            pool.install(run)
        }
        None => run(),
    }
}

/// Parse arguments, run, print, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(o) => {
            let text = serde_json::to_string_pretty(&o.report).expect("reports serialise");
            // a closed pipe on stdout is not an error worth reporting
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            o.code
        }
        Err(e) => {
            eprintln!("auxlab: {e}");
            e.exit_code()
        }
    }
}
