//! `glyphlstm` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 IO or data error.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use glyphlstm::oneshot::{FeedforwardMask, NoiseMode, OneShotOptimizer};

#[derive(Debug, Parser)]
#[command(name = "glyphlstm", version, about = "Trajectory generator with one-shot acquisition", args_override_self = true)]
pub struct Cli {
    /// Plain-text `key = value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic corpus from the glyph templates.
    GenCorpus(GenCorpusArgs),
    /// Train on the a-m half of a corpus.
    Train(TrainArgs),
    /// Acquire held-out characters from single examples.
    Oneshot(OneshotArgs),
    /// Classify query trajectories by inferring their input code.
    Classify(ClassifyArgs),
    /// Render a label and noisy variants of it.
    Variants(VariantsArgs),
    /// Render an alpha sweep between two labels.
    Blend(BlendArgs),
    /// Export cell and hidden state heatmaps of one generation.
    States(StatesArgs),
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub out: std::path::PathBuf,
    #[arg(long, default_value_t = 40)]
    pub variants: usize,
    #[arg(long, default_value_t = glyphlstm::corpus::DEFAULT_JITTER)]
    pub jitter: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Template document to use instead of the built-in table.
    #[arg(long)]
    pub templates: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: std::path::PathBuf,
    #[arg(long)]
    pub model_out: std::path::PathBuf,
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub n_ff: usize,
    #[arg(long, default_value_t = 100)]
    pub n_lstm: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    /// Loss history path; defaults to `<model-out>.loss.txt`.
    #[arg(long)]
    pub loss_out: Option<std::path::PathBuf>,
    /// Also write `<model-out>.step<N>` every N steps.
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum OptimizerArg {
    Adam,
    Sgd,
}

impl From<OptimizerArg> for OneShotOptimizer {
    fn from(v: OptimizerArg) -> Self {
        match v {
            OptimizerArg::Adam => OneShotOptimizer::Adam,
            OptimizerArg::Sgd => OneShotOptimizer::GradientDescent,
        }
    }
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum MaskArg {
    WeightsAndBias,
    WeightsOnly,
}

impl From<MaskArg> for FeedforwardMask {
    fn from(v: MaskArg) -> Self {
        match v {
            MaskArg::WeightsAndBias => FeedforwardMask::WeightsAndBias,
            MaskArg::WeightsOnly => FeedforwardMask::WeightsOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct OneshotArgs {
    #[arg(long)]
    pub model: std::path::PathBuf,
    /// Corpus holding the examples.
    #[arg(long)]
    pub corpus: std::path::PathBuf,
    /// Labels to acquire, comma separated, or `heldout` for n-z.
    #[arg(long)]
    pub label: String,
    /// Which sample of each label in the corpus to use.
    #[arg(long, default_value_t = 0)]
    pub variant: usize,
    #[arg(long, default_value_t = 13_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, value_enum, default_value = "adam")]
    pub optimizer: OptimizerArg,
    #[arg(long, value_enum)]
    pub mask: Option<MaskArg>,
    #[arg(long)]
    pub model_out: std::path::PathBuf,
    #[arg(long)]
    pub svg_out: Option<std::path::PathBuf>,
    /// Repeat each acquisition from a freshly initialized model and report both losses.
    #[arg(long)]
    pub untrained_control: bool,
    #[arg(long, default_value_t = 1)]
    pub untrained_seed: u64,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: std::path::PathBuf,
    /// Corpus file of query samples.
    #[arg(long)]
    pub queries: std::path::PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Inferred codes, one row of 26 values per query.
    #[arg(long)]
    pub vector_out: Option<std::path::PathBuf>,
    #[arg(long)]
    pub svg_out: Option<std::path::PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum NoiseArg {
    PerStep,
    PerVariant,
}

impl From<NoiseArg> for NoiseMode {
    fn from(v: NoiseArg) -> Self {
        match v {
            NoiseArg::PerStep => NoiseMode::PerStep,
            NoiseArg::PerVariant => NoiseMode::PerVariant,
        }
    }
}

#[derive(Debug, Args)]
pub struct VariantsArgs {
    #[arg(long)]
    pub model: std::path::PathBuf,
    #[arg(long)]
    pub label: String,
    #[arg(long, default_value_t = glyphlstm::oneshot::DEFAULT_VARIANT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "per-step")]
    pub noise: NoiseArg,
    /// Generation length; defaults to the length recorded in the manifest.
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub svg_out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct BlendArgs {
    #[arg(long)]
    pub model: std::path::PathBuf,
    #[arg(long)]
    pub label_a: String,
    #[arg(long)]
    pub label_b: String,
    /// Number of glyph columns from pure `label-a` to pure `label-b`.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub svg_out: std::path::PathBuf,
}

#[derive(Debug, Args)]
pub struct StatesArgs {
    #[arg(long)]
    pub model: std::path::PathBuf,
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub length: Option<usize>,
    /// Writes `<prefix>_c.svg`, `<prefix>_h.svg` and `<prefix>_trajectory.svg`.
    #[arg(long)]
    pub heatmap_out: std::path::PathBuf,
    /// Also write the matrices as numeric text grids.
    #[arg(long)]
    pub grids: bool,
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let args = match config::expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
