mod commands;
mod plot;
mod summary;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use clothfit_core::config::CONFIG_ENV;
use clothfit_core::dataset::Split;

/// Simulate hanging cloth, learn a physics similarity map from depth video
/// and estimate cloth parameters by Bayesian optimization.
#[derive(Debug, Parser)]
#[command(name = "clothfit", version)]
pub struct Cli {
    /// JSON run configuration; defaults are used when absent.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    /// Seed for the stage being run (overrides the configured one).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write a mesh snapshot per frame.
    Simulate(SimulateArgs),
    /// Simulate and render a labelled training corpus.
    GenDataset(GenDatasetArgs),
    /// Render a target sequence with known parameters.
    MakeTarget(MakeTargetArgs),
    /// Index a directory of captured depth frames as a target.
    Ingest(IngestArgs),
    /// Train the embedding network on a corpus.
    Train(TrainArgs),
    /// Score how well a trained network separates a corpus.
    Eval(EvalArgs),
    /// Search parameters that reproduce a target sequence.
    Estimate(EstimateArgs),
    /// Write the estimated 3x5 bending stiffness as CSV and SVG.
    PlotStiffness(PlotArgs),
    /// Print the effective configuration as JSON.
    PrintConfig,
}

/// Physical parameters; anything left out takes the centre of the
/// material's search box.
#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub stiffness: Option<f64>,
    /// m/s
    #[arg(long)]
    pub wind: Option<f64>,
    /// kg/m²
    #[arg(long)]
    pub area_weight: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub material: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub frames: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    #[arg(long)]
    pub material: String,
    #[arg(long)]
    pub combos: Option<usize>,
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub cameras: Option<usize>,
    /// 0 uses every core.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MakeTargetArgs {
    #[arg(long)]
    pub material: String,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 1)]
    pub cameras: usize,
    #[arg(long)]
    pub frames: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub material: String,
    /// Directory of numbered `.d256` frames and `meta.json`.
    #[arg(long)]
    pub capture: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SplitArg {
    All,
    Train,
    Holdout,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::All => Split::All,
            SplitArg::Train => Split::Train,
            SplitArg::Holdout => Split::Holdout,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus manifest, or the directory holding it.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Defaults to `train` when the corpus has a camera to hold out.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub metric: Option<String>,
    /// Defaults to `holdout` when the corpus has a camera to hold out.
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Target manifest, or the directory holding it.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long)]
    pub net: PathBuf,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub acquisition: Option<String>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// `estimate.json` written by `estimate`.
    #[arg(long, required_unless_present = "scale", conflicts_with = "scale")]
    pub estimate: Option<PathBuf>,
    /// Plot a given stiffness scale instead of an estimate.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Required with `--scale`; taken from the estimate otherwise.
    #[arg(long)]
    pub material: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
