mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cyclezsl", version, about = "Zero-shot learning by cycle-consistent adversarial feature synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Style {
    Scs,
    Sce,
}

#[derive(Subcommand)]
enum Command {
    /// Build a dataset from a directory of class documents and a feature CSV.
    Prepare(PrepareArgs),
    /// Generate a synthetic dataset with a linear semantic-to-visual ground truth.
    SynthData(SynthArgs),
    /// Split the classes of a dataset into seen and unseen sets.
    Split(SplitArgs),
    /// Train the model and write a checkpoint with its loss history.
    Train(TrainArgs),
    /// Zero-shot evaluation of a checkpoint; writes an EvalReport JSON.
    Eval(EvalArgs),
    /// Generalized evaluation: seen-unseen curve CSV and AUSUC.
    Gzsl(GzslArgs),
    /// Train and evaluate the four inverse-pair variants and tabulate them.
    Ablate(AblateArgs),
}

#[derive(Args)]
pub struct PrepareArgs {
    /// Directory with one text file per class; the file stem is the class name.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Headerless CSV of visual features: class name, then one column per dimension.
    #[arg(long)]
    pub features: PathBuf,
    /// Optional headerless CSV mapping class name to super-class id.
    #[arg(long)]
    pub super_classes: Option<PathBuf>,
    /// Minimum number of documents a token must appear in.
    #[arg(long, default_value_t = 1)]
    pub min_df: usize,
    /// Keep raw tf-idf rows instead of scaling them to unit length.
    #[arg(long)]
    pub no_normalize: bool,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SynthArgs {
    /// TOML file with SynthConfig fields; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise as a multiple of the median distance between class means (overrides noise_scale).
    #[arg(long)]
    pub relative_noise: Option<f64>,
    /// Output dataset directory; the split is written to `<out>/split.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "scs")]
    pub style: Style,
    #[arg(long, default_value_t = 0.2)]
    pub unseen_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ModelArgs {
    /// TOML file with TrainConfig fields; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from the CPU-sized configuration (batch 64, 500 iterations, narrow layers).
    #[arg(long, conflicts_with = "config")]
    pub desk_scale: bool,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, value_enum, default_value = "f32")]
    pub precision: Precision,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Training seed (overrides the config file).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Continue from the checkpoint in `--out` instead of starting afresh.
    #[arg(long)]
    pub resume: bool,
    /// Checkpoint directory; the loss history goes to `<out>/loss_history.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SynthesisArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Seed of the synthesized bank.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Synthesized features per unseen class.
    #[arg(long, default_value_t = cyclezsl_core::evaluation::DEFAULT_BANK_SIZE)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
}

#[derive(Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub synthesis: SynthesisArgs,
    /// Record wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GzslArgs {
    #[command(flatten)]
    pub synthesis: SynthesisArgs,
    /// Output CSV of (gamma, unseen_acc, seen_acc).
    #[arg(long)]
    pub curve: PathBuf,
}

#[derive(Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seed: Vec<u64>,
    /// Also run the single-GAN reduction (no cycle, no inverse pair).
    #[arg(long)]
    pub single_gan: bool,
    /// Per-run CSV (variant, seed, top1_unseen, ausuc).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Prepare(a) => commands::prepare(&a),
        Command::SynthData(a) => commands::synth_data(&a),
        Command::Split(a) => commands::split(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Gzsl(a) => commands::gzsl(&a),
        Command::Ablate(a) => commands::ablate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
