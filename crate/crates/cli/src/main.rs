//! `naskws` command-line driver.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "naskws", version, about = "Event-based keyword spotting pipeline")]
pub struct Cli {
    /// Run configuration (INI)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for multi-sample commands (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Seed for random weights and synthetic inputs
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    /// Override a configuration key, e.g. `--set graph.r_c=10`
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dataset statistics over event files
    Stats(StatsArgs),
    /// Filter one event file
    Filter(FilterArgs),
    /// Run inference on one event file, one prediction per window
    Infer(InferArgs),
    /// Evaluate a labelled manifest, or score an existing record file
    Eval(EvalArgs),
    /// Replay an event file through the hardware pipeline model
    Simulate(SimulateArgs),
    /// Evaluate every point of a parameter sweep
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Also report statistics after filtration
    #[arg(long)]
    pub filtered: bool,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    pub input: PathBuf,
    /// Output stream; defaults to `io.output`
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    pub input: PathBuf,
    /// Write predictions here; defaults to `io.output`, else stdout
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Dump each accepted event's neighbourhood as JSON lines
    #[arg(long)]
    pub dump_graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Manifest CSV `path,label,end_bin`
    #[arg(required_unless_present = "records_in")]
    pub manifest: Option<PathBuf>,
    /// Score this record file (CSV or JSON lines) instead of running inference
    #[arg(long, conflicts_with = "manifest")]
    pub records_in: Option<PathBuf>,
    /// Write per-sample records here
    #[arg(long)]
    pub records_out: Option<PathBuf>,
    /// Time-bin tolerances for timestamp accuracy
    #[arg(long = "ts", value_delimiter = ',', default_values_t = [1u32, 3])]
    pub tolerances: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Event file; omit to use a synthetic load
    #[arg(required_unless_present = "rate")]
    pub input: Option<PathBuf>,
    /// Synthetic Poisson load in events per second
    #[arg(long, conflicts_with = "input")]
    pub rate: Option<f64>,
    /// Synthetic load duration
    #[arg(long, default_value_t = 1_000_000)]
    pub duration_us: u32,
    /// Synthetic edge counts, drawn uniformly from `LO..=HI`
    #[arg(long, default_value = "16..=20")]
    pub edges: String,
    /// Write the per-event trace CSV here
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Manifest CSV `path,label,end_bin`
    pub manifest: PathBuf,
    /// Sweep axis `section.key=v1,v2,...`; adds to the config's [sweep] section
    #[arg(long = "sweep", value_name = "SECTION.KEY=V1,V2")]
    pub sweeps: Vec<String>,
    #[arg(long = "ts", value_delimiter = ',', default_values_t = [1u32, 3])]
    pub tolerances: Vec<u32>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}
