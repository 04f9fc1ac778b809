use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Dependency forests and forest-encoding relation extraction.
#[derive(Debug, Parser)]
#[command(name = "depforest", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build forests from arc probabilities.
    Forest(ForestArgs),
    /// Density, oracle LAS and mention connectivity of forest files.
    Stats(StatsArgs),
    /// Generate a synthetic corpus with gold trees and parser output.
    Synth(SynthArgs),
    /// Train a relation classifier.
    Train(TrainArgs),
    /// Score a trained model.
    Eval(EvalArgs),
    /// Write per-instance predictions.
    Predict(PredictArgs),
    /// Compare analytic gradients with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Algo {
    Edgewise,
    Kbest,
}

#[derive(Debug, Args)]
struct ForestArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    /// Edge threshold (edgewise only); defaults to 0.2.
    #[arg(long)]
    gamma: Option<f64>,
    /// Trees to merge (kbest only); defaults to 10.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    arcs: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Give modifiers without candidates a uniform distribution of this mass
    /// per head.
    #[arg(long)]
    fallback_eps: Option<f64>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// One table row per file.
    #[arg(long, required = true, num_args = 1..)]
    forests: Vec<PathBuf>,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    gold: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    sentences: usize,
    #[arg(long, default_value_t = 5)]
    min_len: usize,
    #[arg(long, default_value_t = 12)]
    max_len: usize,
    /// Dependency labels including root.
    #[arg(long, default_value_t = 8)]
    labels: usize,
    #[arg(long, value_delimiter = ',', default_value = "R1,R2,R3")]
    relations: Vec<String>,
    #[arg(long, default_value_t = 50)]
    words: usize,
    #[arg(long, default_value_t = 0.25)]
    temperature: f64,
    #[arg(long, default_value_t = 1.5)]
    noise: f64,
    #[arg(long, default_value_t = depforest::io::STORAGE_FLOOR)]
    floor: f64,
    #[arg(long, default_value = "synth")]
    id_prefix: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StructureArg {
    Textonly,
    Tree,
    Forest,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, value_enum, default_value = "forest")]
    structure: StructureArg,
    /// Forests (or 1-best trees) aligned with the training corpus.
    #[arg(long)]
    train_forests: Option<PathBuf>,
    #[arg(long)]
    dev_forests: Option<PathBuf>,
    /// Scale messages by edge probabilities.
    #[arg(long)]
    weighted: bool,
    /// Add the NER loss.
    #[arg(long)]
    ner: bool,
    #[arg(long)]
    freeze_embeddings: bool,
    #[arg(long, default_value_t = 200)]
    word_dim: usize,
    #[arg(long, default_value_t = 100)]
    label_dim: usize,
    /// Hidden size of each LSTM direction.
    #[arg(long, default_value_t = 100)]
    lstm_dim: usize,
    #[arg(long, default_value_t = 2)]
    steps: usize,
    #[arg(long, default_value_t = 0.1)]
    dropout: f64,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    #[arg(long, default_value_t = 20)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-8)]
    l2: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint of the best-dev epoch.
    #[arg(long)]
    model_out: PathBuf,
    /// Per-epoch metric log.
    #[arg(long)]
    log: PathBuf,
    /// Per-epoch wall-clock times.
    #[arg(long)]
    timing: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    forests: Option<PathBuf>,
    /// Recall denominator override, e.g. all gold relations of the full test set.
    #[arg(long)]
    external_gold_count: Option<usize>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    forests: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Forest(args) => commands::forest(args),
        Command::Stats(args) => commands::stats(args),
        Command::Synth(args) => commands::synth(args),
        Command::Train(args) => commands::train(args),
        Command::Eval(args) => commands::eval(args),
        Command::Predict(args) => commands::predict(args),
        Command::Gradcheck(args) => commands::gradcheck(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
