//! `epiexplain` command-line interface.
//!
//! Every stage of the pipeline is its own subcommand and reads the file the
//! previous stage wrote; `run` chains them all. Exit codes: 0 ok,
//! 2 ingestion, 3 estimation, 4 training, 5 explanation, 6 I/O.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use env_logger::Env;
use epiexplain_core::explain::Method;
use epiexplain_core::models::{DEFAULT_SMOOTHING, DEFAULT_SPLIT_FRACTION, DEFAULT_TREE_COUNT};
use epiexplain_core::pipeline::{ModelKind, DEFAULT_EVAL_SEEDS};
use epiexplain_core::rt::{DEFAULT_FILTER_RADIUS, DEFAULT_MIN_CUMULATIVE};
use epiexplain_core::serial_interval::{DEFAULT_HORIZON, DEFAULT_MEAN_DAYS, DEFAULT_SD_DAYS};

#[derive(Parser, Debug)]
#[command(
    name = "epiexplain",
    version,
    about = "Estimate R_t and explain which control measures accompany low values"
)]
struct Cli {
    /// Directory for output files.
    #[arg(
        long,
        global = true,
        env = "EPIEXPLAIN_OUTPUT_DIR",
        default_value = "output"
    )]
    output_dir: PathBuf,

    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SerialIntervalArgs {
    /// Serial interval mean, in days.
    #[arg(long, default_value_t = DEFAULT_MEAN_DAYS)]
    si_mean: f64,
    /// Serial interval standard deviation, in days.
    #[arg(long, default_value_t = DEFAULT_SD_DAYS)]
    si_sd: f64,
    /// Number of daily serial-interval weights.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
}

#[derive(Args, Debug, Clone)]
struct EstimationArgs {
    #[command(flatten)]
    si: SerialIntervalArgs,
    /// Radius of the mean filter on daily new cases.
    #[arg(long, default_value_t = DEFAULT_FILTER_RADIUS)]
    filter_radius: usize,
    /// Days below this cumulative count get no R_t estimate.
    #[arg(long, default_value_t = DEFAULT_MIN_CUMULATIVE)]
    min_cumulative: u64,
}

#[derive(Args, Debug, Clone)]
struct TrainingArgs {
    /// Trees in the random forest.
    #[arg(long, default_value_t = DEFAULT_TREE_COUNT)]
    tree_count: usize,
    /// Additive smoothing of the ECPI literal weights.
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    smoothing: f64,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate daily R_t from cumulative case counts.
    EstimateRt {
        #[arg(long)]
        cases: PathBuf,
        #[command(flatten)]
        estimation: EstimationArgs,
        /// Output file [default: <output-dir>/rt_series.csv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Join R_t estimates with measures and weather into the feature table.
    BuildDataset {
        /// File written by `estimate-rt`.
        #[arg(long)]
        rt: PathBuf,
        #[arg(long)]
        measures: PathBuf,
        #[arg(long)]
        weather: PathBuf,
        /// Output file [default: <output-dir>/dataset.csv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train one model on the whole dataset labeled at one threshold.
    Train {
        /// File written by `build-dataset`.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value = "forest")]
        model: ModelKind,
        #[command(flatten)]
        training: TrainingArgs,
        /// Output file [default: <output-dir>/models/<model>_theta<theta>.model].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Explain every row with R_t below the threshold.
    Explain {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        theta: f64,
        /// Model file written by `train`; `ecpi` needs an ECPI model.
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long, default_value = "shap")]
        method: Method,
        /// Feature-values kept per row.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Output file [default: <output-dir>/explanations.csv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Aggregate explanations into top-k count tables.
    Report {
        /// File written by `explain` (or `run`).
        #[arg(long)]
        explanations: PathBuf,
        /// Dataset supplying raw new cases for the strata.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long = "k", default_values_t = [1usize, 2])]
        k: Vec<usize>,
    },
    /// Simulate cases forward from an R_t trajectory (cases-file format).
    Simulate {
        /// One R value per simulated day, repeated or comma-separated.
        #[arg(long = "r", value_delimiter = ',', required = true)]
        r: Vec<f64>,
        /// Daily cases on the seed days.
        #[arg(long = "seed-cases", value_delimiter = ',', default_values_t = [10.0])]
        seed_cases: Vec<f64>,
        #[arg(long, default_value = "Simulated")]
        region: String,
        #[arg(long, default_value = "2020-01-22")]
        start: String,
        #[command(flatten)]
        si: SerialIntervalArgs,
        /// Output file [default: <output-dir>/simulated_cases.csv].
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the whole pipeline.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value = "data/cases.csv")]
    cases: PathBuf,
    #[arg(long, default_value = "data/measures.csv")]
    measures: PathBuf,
    #[arg(long, default_value = "data/weather.csv")]
    weather: PathBuf,
    #[command(flatten)]
    estimation: EstimationArgs,
    /// Label thresholds; repeat for several.
    #[arg(long = "theta", default_values_t = [1.0, 2.0])]
    theta: Vec<f64>,
    /// Top-k sizes; repeat for several.
    #[arg(long = "k", default_values_t = [1usize, 2])]
    k: Vec<usize>,
    #[command(flatten)]
    training: TrainingArgs,
    /// Training share of each held-out evaluation split.
    #[arg(long, default_value_t = DEFAULT_SPLIT_FRACTION)]
    split_fraction: f64,
    /// Evaluation repeats, seeds seed..seed+n.
    #[arg(long, default_value_t = DEFAULT_EVAL_SEEDS)]
    eval_seeds: usize,
    /// Model explained with Shapley values.
    #[arg(long, default_value = "forest")]
    shap_model: ModelKind,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(Env::default().default_filter_or(level)).init();

    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
