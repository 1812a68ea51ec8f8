use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "topeval",
    version,
    about = "Topic model evaluation: coherence, diversity, human-evaluation tasks and scoring"
)]
pub struct Cli {
    /// Master seed for every random step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// JSON file of defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build and save the corpus vocabulary.
    Ingest(IngestArgs),
    /// C_V coherence and topic diversity per model.
    Metrics(MetricsArgs),
    /// Generate word intrusion tasks.
    GenTwi(GenArgs),
    /// Generate word mixing tasks.
    GenTwm(GenArgs),
    /// Generate tasks of one or both kinds into a single bundle.
    Generate(GenerateArgs),
    /// Re-export an existing bundle.
    Export(ExportArgs),
    /// Score annotations against a bundle and its key.
    Score(ScoreArgs),
    /// Percent agreement and Fleiss' kappa only.
    Agreement(AnnotatedArgs),
    /// Write seeded simulated annotations for a bundle.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusFormatArg {
    Lines,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Corpus file: one document per line, or JSON lines.
    #[arg(long)]
    pub corpus: Option<PathBuf>,

    /// Corpus format; inferred from the extension when omitted.
    #[arg(long)]
    pub corpus_format: Option<CorpusFormatArg>,

    #[arg(long)]
    pub min_sentence_freq: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    /// Model files or directories of `*.model.json`.
    #[arg(long, required = true, num_args = 1..)]
    pub models: Vec<PathBuf>,

    #[arg(long)]
    pub window_size: Option<usize>,

    #[arg(long)]
    pub top_n: Option<usize>,

    /// Drop the self term from C_V context vectors.
    #[arg(long)]
    pub exclude_self: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,

    #[arg(long, required = true, num_args = 1..)]
    pub models: Vec<PathBuf>,

    /// Word vectors (`word v1 v2 ...`, optional `count dim` header).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,

    /// Output of `metrics`, used to pick single-topic mixing controls.
    #[arg(long)]
    pub metrics: Option<PathBuf>,

    /// standard | all | fraction=F
    #[arg(long)]
    pub sampling: Option<String>,

    /// Control tasks per model and kind.
    #[arg(long)]
    pub controls: Option<usize>,

    #[arg(long)]
    pub tracks: Option<usize>,

    #[arg(long)]
    pub topic_embed_topn: Option<usize>,

    #[arg(long)]
    pub window_size: Option<usize>,

    /// Bundle id and output file stem.
    #[arg(long)]
    pub name: Option<String>,

    /// native-json | labelstudio-json
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Twi,
    Twm,
    Both,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub kind: KindArg,

    #[command(flatten)]
    pub gen: GenArgs,
}

#[derive(Debug, Args)]
pub struct BundleArgs {
    #[arg(long)]
    pub bundle: PathBuf,

    #[arg(long)]
    pub key: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,

    #[arg(long)]
    pub format: Option<String>,

    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnnotatedArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,

    #[arg(long)]
    pub annotations: PathBuf,

    /// native | labelstudio
    #[arg(long)]
    pub annotation_format: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub annotated: AnnotatedArgs,

    /// Regress task accuracy instead of single annotations.
    #[arg(long)]
    pub task_level_regression: bool,

    #[arg(long)]
    pub bootstrap: Option<usize>,

    #[arg(long)]
    pub ci_level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub bundle: BundleArgs,

    #[arg(long, default_value_t = 5)]
    pub annotators: usize,
}
