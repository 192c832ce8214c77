//! The `dlr` command line: generate, rate, train, evaluate, forecast, plot.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 numerical failure.

mod commands;
mod plot;
mod rate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use plot::{render_svg, Series};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dlr", version, about = "Dynamic line rating: thermal solver and DLR forecasting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic sensor CSV.
    Gen(GenArgs),
    /// Fill the dlr_a column of a weather CSV from the thermal model.
    Rate(RateArgs),
    /// Train a case 1 or case 2 forecaster.
    Train(TrainArgs),
    /// Score a model on the chronological test tail.
    Eval(EvalArgs),
    /// Write one next-step forecast per window.
    Forecast(ForecastArgs),
    /// Draw actual and predicted DLR as an SVG line chart.
    Plot(PlotArgs),
    /// Put a case 1 and a case 2 report side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 30)]
    days: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Conductor file of `key=value` lines.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long = "step-min", default_value_t = 15)]
    step_min: u32,
}

#[derive(Debug, Args)]
struct RateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    case: u8,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    window: usize,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    #[arg(long = "train-frac", default_value_t = 0.8)]
    train_frac: f64,
    /// Reshuffle the fit windows each epoch (seeded) instead of using
    /// contiguous chronological batches.
    #[arg(long)]
    shuffle: bool,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Also write the report here; it always goes to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    actual: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    pred2: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    case1: PathBuf,
    #[arg(long)]
    case2: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => commands::gen(&a),
        Command::Rate(a) => commands::rate(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Forecast(a) => commands::forecast(&a),
        Command::Plot(a) => commands::plot(&a),
        Command::Compare(a) => commands::compare(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_code(&err)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<dlr_core::Error>() {
        Some(e) if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}
