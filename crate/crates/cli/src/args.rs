use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "revhelper", version, about = "Mine, label, analyze and predict the usefulness of code review comments")]
pub struct Cli {
    /// Cap on worker threads used by parallel steps.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download pull requests, commits and inline comments from a forge.
    Fetch(FetchArgs),
    /// Generate a synthetic corpus with planted signal.
    Synth(SynthArgs),
    /// Label every comment with the change-triggering heuristic.
    Label(LabelArgs),
    /// Compute the feature dataset of a labeled corpus.
    Features(FeaturesArgs),
    /// Compare useful and non-useful comments feature by feature.
    Study(StudyArgs),
    /// Train a classifier and write the model file.
    Train(TrainArgs),
    /// Cross-validation, repeated runs, the model grid or the baseline comparison.
    Evaluate(EvaluateArgs),
    /// Predict the usefulness of one drafted comment.
    Predict(PredictArgs),
    /// Serve predictions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; `-` writes to stdout.
    #[arg(short, long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Input {
    /// Input file; `-` reads stdin.
    #[arg(short, long, default_value = "-")]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Random seed; a fresh one is drawn and printed to stderr when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct LexiconArgs {
    /// Replace the stop-word list (one word per line, `#` comments).
    #[arg(long, value_name = "FILE")]
    pub stop_words: Option<PathBuf>,
    /// Replace the programming-keyword list.
    #[arg(long, value_name = "FILE")]
    pub keywords: Option<PathBuf>,
    /// Replace the positive sentiment list.
    #[arg(long, value_name = "FILE")]
    pub positive: Option<PathBuf>,
    /// Replace the negative sentiment list.
    #[arg(long, value_name = "FILE")]
    pub negative: Option<PathBuf>,
    /// Replace the baseline keyword list.
    #[arg(long, value_name = "FILE")]
    pub baseline_keywords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// API root, e.g. https://api.github.com.
    #[arg(long, default_value = "https://api.github.com")]
    pub base_url: String,
    /// Repository as owner/name.
    #[arg(long)]
    pub repo: String,
    #[arg(long, default_value_t = 100)]
    pub max_prs: usize,
    #[arg(long, default_value_t = 100)]
    pub page_size: u32,
    /// Replay responses from a recorded tape instead of the network.
    #[arg(long, value_name = "FILE", conflicts_with = "record")]
    pub tape: Option<PathBuf>,
    /// Fetch live and record every response to this tape.
    #[arg(long, value_name = "FILE")]
    pub record: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    pub n_prs: usize,
    /// Inclusive range of comments per pull request, `MIN..MAX` or a single number.
    #[arg(long, default_value = "1..4")]
    pub comments_per_pr: String,
    #[arg(long, default_value_t = 0.5553)]
    pub useful_fraction: f64,
    /// Planted signal strength; 0 makes features label-independent.
    #[arg(long, default_value_t = 1.0)]
    pub signal: f64,
    #[arg(long, default_value_t = 12)]
    pub developers: usize,
    /// Warm-up pull requests that build reviewer history.
    #[arg(long)]
    pub history_prs: Option<usize>,
    #[arg(long, default_value = "synthetic")]
    pub system: String,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
    /// Maximum line distance of a triggered change.
    #[arg(long, default_value_t = 10)]
    pub vicinity: u32,
    /// Count changes in any file of the pull request.
    #[arg(long)]
    pub any_file: bool,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
    /// `csv` (default) or `json` (one JSON object per row).
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Developer history recorded before the corpus starts.
    #[arg(long, value_name = "FILE")]
    pub history: Option<PathBuf>,
    /// Only count library experience from this many days before a comment.
    #[arg(long)]
    pub ele_window_days: Option<u32>,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Args)]
pub struct DatasetInput {
    /// Dataset (CSV or JSON lines) or labeled corpus-JSON; `-` reads stdin.
    #[arg(short, long, default_value = "-")]
    pub input: PathBuf,
    /// Columns to use: all, textual, experience, selected, or a comma list.
    #[arg(long, default_value = "all")]
    pub feature_set: String,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub data: DatasetInput,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Nb,
    Lr,
    Rf,
    Cart,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    #[arg(long, value_enum, default_value = "rf")]
    pub kind: Kind,
    /// Trees per forest.
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Reduce features with PCA first, keeping this share of variance.
    #[arg(long, value_name = "SHARE")]
    pub pca: Option<f64>,
    /// Extra hyperparameter, `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetInput,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Skip permutation importance (random forests only).
    #[arg(long)]
    pub no_importance: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    /// Stratified k-fold cross-validation.
    Cv,
    /// Repeated stratified 65/35 train/test runs.
    Runs,
    /// The full performance grid (NB/LR with and without PCA, RF per feature set).
    Grid,
    /// CART baselines against the forests on test and validation data.
    Baselines,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DatasetInput,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Defaults to `runs` for rf and `cv` otherwise.
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(short, long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Separate validation dataset for `baselines`.
    #[arg(long, value_name = "FILE")]
    pub validation: Option<PathBuf>,
    /// Also write per-fold or per-run metrics as CSV.
    #[arg(long, value_name = "FILE")]
    pub units_out: Option<PathBuf>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained model file.
    #[arg(short, long)]
    pub model: PathBuf,
    /// File holding the comment text; `-` reads stdin.
    #[arg(short, long, default_value = "-")]
    pub input: PathBuf,
    /// Treat the input as a JSON prediction request instead of plain text.
    #[arg(long)]
    pub request: bool,
    /// A changed source line the comment refers to; repeatable.
    #[arg(long = "changed-line", value_name = "TEXT")]
    pub changed_lines: Vec<String>,
    /// File of changed source lines, one per line.
    #[arg(long, value_name = "FILE")]
    pub changed_lines_file: Option<PathBuf>,
    #[arg(long)]
    pub ca_file: Option<f64>,
    #[arg(long)]
    pub ca_sys: Option<f64>,
    #[arg(long)]
    pub cr_file: Option<f64>,
    #[arg(long)]
    pub cr_commits: Option<f64>,
    #[arg(long)]
    pub cr_prs: Option<f64>,
    #[arg(long)]
    pub ele: Option<f64>,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
    #[command(flatten)]
    pub output: Output,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(short, long)]
    pub model: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Identifier reported by /health; defaults to the model file stem.
    #[arg(long)]
    pub model_id: Option<String>,
    /// Do not send cross-origin headers.
    #[arg(long)]
    pub no_cors: bool,
    /// Poll the model file every N seconds and reload it when it changes.
    #[arg(long, value_name = "SECS")]
    pub reload_secs: Option<u64>,
    #[command(flatten)]
    pub lexicons: LexiconArgs,
}
