use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use layerclose_cli::commands::{self, Context};
use layerclose_cli::config::{self, BackendKind, PathKind};
use layerclose_cli::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "layerclose", version, about = "Close evaluation of layer potentials on analytic curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 1 gives bitwise-reproducible output.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Evaluation path, overriding the config.
    #[arg(long, global = true, value_enum)]
    path: Option<PathKind>,
    /// Summation backend for the split path, overriding the config.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the boundary integral equation and write the density.
    Solve,
    /// Evaluate the potential on the configured grid.
    Eval,
    /// Grid of log10 relative errors against the reference.
    ErrorMap,
    /// Predicted error contours of native evaluation.
    PredictContours,
    /// Close-evaluation errors over (p, beta).
    Sweep,
    /// Per-stage timings over increasing N.
    Bench,
    /// Curve geometry, box cover and singularities.
    CurveInfo,
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let path = cli.config.ok_or_else(|| CliError::Config("--config is required".into()))?;
    let loaded = config::load(&path)?;
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let ctx = Context { loaded, out: cli.out, path: cli.path, backend: cli.backend };
    match cli.command {
        Command::Solve => commands::cmd_solve(&ctx),
        Command::Eval => commands::cmd_eval(&ctx),
        Command::ErrorMap => commands::cmd_error_map(&ctx),
        Command::PredictContours => commands::cmd_predict_contours(&ctx),
        Command::Sweep => commands::cmd_sweep(&ctx),
        Command::Bench => commands::cmd_bench(&ctx),
        Command::CurveInfo => commands::cmd_curve_info(&ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LAYERCLOSE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
