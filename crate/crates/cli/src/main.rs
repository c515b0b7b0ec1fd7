//! `causemap`: compute causality maps and factors, train desk-scale networks,
//! and run activation maximization from the command line.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use causemap::desknet::Variant;
use causemap::{Direction, Error, Method, Mode};
use clap::{Parser, Subcommand};

use commands::ScorerSpec;
use config::Config;

#[derive(Debug)]
pub enum CliError {
    Parse(String),
    Degenerate(String),
    Diverged(String),
    NonFinite(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Diverged(_) => 4,
            CliError::NonFinite(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Degenerate(m) | CliError::Diverged(m) | CliError::NonFinite(m) | CliError::Io(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InvalidInput(_) | Error::ShapeMismatch { .. } => CliError::Parse(msg),
            Error::DivergedLoss { .. } => CliError::Diverged(msg),
            Error::NonFiniteGradient { .. } => CliError::NonFinite(msg),
            _ => CliError::Degenerate(msg),
        }
    }
}

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  1  output files could not be written
  2  invalid flags, config or input files
  3  degenerate input (e.g. an all-zero feature stack)
  4  training diverged (the message names the seed)
  5  non-finite gradient during activation maximization

Config files hold one `key = value` per line; `#` starts a comment line.
Flags take precedence over config keys. Unknown keys are an error.";

#[derive(Debug, Parser)]
#[command(name = "causemap", version, about = "Causality maps, causality factors and desk-scale experiments", after_help = AFTER_HELP)]
struct Cli {
    /// Seed for every random draw of the command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Causality map of a feature stack; writes cmap.csv and cmap.pgm.
    ///
    /// Config keys: input, method, p, epsilon.
    Cmap {
        /// Stack CSV: `# k=.. n=..` header, then k·n rows of n values.
        #[arg(long)]
        input: Option<PathBuf>,
        /// max | lehmer
        #[arg(long)]
        method: Option<Method>,
        /// Lehmer exponent.
        #[arg(long, allow_negative_numbers = true)]
        p: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Causality factors of a map; writes factors.csv.
    ///
    /// Config keys: input, direction, mode.
    Factors {
        /// Map CSV: `# k=..` header, then k rows of k values.
        #[arg(long)]
        input: Option<PathBuf>,
        /// causes | effects
        #[arg(long)]
        direction: Option<Direction>,
        /// full | bool
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// Trains the desk network for every variant × seed; writes metrics.json,
    /// history.csv and one params_<variant>_seed<seed>.json per run.
    ///
    /// Config keys: variants, seeds, epochs, batch_size, learning_rate,
    /// data_seed, train_size, val_size, test_size, direction, mode, method, p,
    /// epsilon, cmap_backprop.
    Train {
        /// Overrides the `variants` config key; repeatable.
        #[arg(long)]
        variant: Vec<Variant>,
    },
    /// Activation maximization; writes am.pgm, am_image.csv and am_trace.csv.
    ///
    /// Config keys: iterations, step_size, jitter, blur_every, clip_lo,
    /// clip_hi, prior_every, w_histogram, w_noise, w_symmetry, w_frequency,
    /// pool_kernel, pool_stride, pool_padding, histogram_target, reference,
    /// init_lo, init_hi, and for the quadratic scorer height, width, channels.
    Am {
        /// quadratic-test | desknet:<params-file>:<class>
        #[arg(long)]
        scorer: ScorerSpec,
    },
}

/// Writes every file under a temporary name first, then renames them into place.
fn write_outputs(dir: &Path, outputs: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error, p: &Path| CliError::Io(format!("cannot write {}: {e}", p.display()));
    std::fs::create_dir_all(dir).map_err(|e| io_err(e, dir))?;
    let pid = std::process::id();
    let mut staged = Vec::with_capacity(outputs.len());
    for (name, bytes) in outputs {
        let tmp = dir.join(format!(".{name}.{pid}.tmp"));
        if let Err(e) = std::fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = std::fs::remove_file(t);
            }
            let _ = std::fs::remove_file(&tmp);
            return Err(io_err(e, &tmp));
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in &staged {
        std::fs::rename(tmp, dest).map_err(|e| io_err(e, dest))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    let outputs = match cli.command {
        Command::Cmap { input, method, p, epsilon } => commands::cmap(commands::CmapArgs { input, method, p, epsilon }, &cfg)?,
        Command::Factors { input, direction, mode } => commands::factors(commands::FactorArgs { input, direction, mode }, &cfg)?,
        Command::Train { variant } => commands::train(&cfg, cli.seed, &variant)?,
        Command::Am { scorer } => commands::am(&scorer, &cfg, cli.seed)?,
    };
    write_outputs(&cli.out, &outputs)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
