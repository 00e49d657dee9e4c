//! `tagmine`: caption corpora to tag vocabularies, taggers and tag-aware
//! retrieval.
//!
//! Data goes to stdout or `--output`; progress and counts go to stderr.
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tagmine::losskit::gradcheck::Kernel;
use tagmine::Shard;

#[derive(Parser, Debug)]
#[command(name = "tagmine", version, about = "Mine image tags from captions and put them to work")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse captions into heads, modifiers, relations and tags
    Parse(ParseArgs),
    /// Build or inspect a tag vocabulary
    #[command(subcommand)]
    Vocab(VocabCommand),
    /// Corpus statistics
    Stats(StatsArgs),
    /// Train a linear tagger on features and parsed-tag labels
    Train(TrainArgs),
    /// Score or tag feature vectors with a trained model
    Predict(PredictArgs),
    /// Evaluate predictions or captions against truth tags
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Rank a gallery by embedding similarity blended with tag overlap
    Rerank(RerankArgs),
    /// Rank a gallery by keyword overlap
    Search(SearchArgs),
    /// Finite-difference check of the loss gradients
    Gradcheck(GradcheckArgs),
    /// Seeded shuffle of each image's tag order
    Shuffle(ShuffleArgs),
}

#[derive(Subcommand, Debug)]
enum VocabCommand {
    /// Count tags and keep the most frequent
    Build(VocabBuildArgs),
    /// Match an external category list against the vocabulary
    Overlap(OverlapArgs),
}

#[derive(Subcommand, Debug)]
enum EvalCommand {
    /// mAP and thresholded P/R/F1 of tagger predictions
    Tagging(EvalTaggingArgs),
    /// P/R/F1 of captions used as a tagger through the parser
    Caption(EvalCaptionArgs),
    /// Precision and recall across a threshold grid
    Sweep(EvalSweepArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Builtin,
    External,
}

#[derive(Args, Debug)]
struct ParseArgs {
    /// Caption corpus (JSON lines with image_id and text)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "builtin")]
    mode: Mode,
    /// Pre-computed parses for --mode external
    #[arg(long)]
    sidecar: Option<PathBuf>,
    #[arg(long, value_parser = shard, default_value = "0/1")]
    shard: Shard,
}

#[derive(Args, Debug)]
struct VocabBuildArgs {
    /// Parse output, tag-id lines or raw captions; repeat for several files
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    synonyms: Option<PathBuf>,
    #[arg(long)]
    allowlist: Option<PathBuf>,
    #[arg(long, value_parser = positive_count, default_value = "5000")]
    top_k: usize,
    #[arg(long, value_parser = positive_u64, default_value = "1")]
    min_freq: u64,
    #[arg(long, value_parser = shard, default_value = "0/1")]
    shard: Shard,
}

#[derive(Args, Debug)]
struct OverlapArgs {
    #[arg(long)]
    vocab: PathBuf,
    /// Category names, one per line
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = shard, default_value = "0/1")]
    shard: Shard,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Feature vectors (JSON lines with image_id and vector)
    #[arg(long)]
    input: PathBuf,
    /// Per-image tags: tag ids, parse output or raw captions
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Model file to write
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = non_negative, default_value = "0")]
    gamma_pos: f64,
    #[arg(long, value_parser = non_negative, default_value = "4")]
    gamma_neg: f64,
    #[arg(long, value_parser = positive, default_value = "0.1")]
    lr: f64,
    #[arg(long, default_value = "20")]
    epochs: usize,
    #[arg(long, default_value = "0")]
    seed: u64,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Checked against the model's vocabulary hash when given
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Emit tag ids above this probability instead of scores
    #[arg(long, value_parser = unit_interval)]
    threshold: Option<f64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalTaggingArgs {
    /// Predictions (scores or tag ids per image)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long, value_parser = unit_interval, default_value = "0.5")]
    threshold: f64,
    /// Restrict metrics to the categories this list keeps
    #[arg(long)]
    allowlist: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalCaptionArgs {
    /// Caption corpus
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    allowlist: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalSweepArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Inclusive threshold grid START:STOP:STEP
    #[arg(long, value_parser = grid, default_value = "0.1:0.9:0.1")]
    sweep: Grid,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RerankArgs {
    /// Gallery (JSON lines with id, vector and tags)
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Query text, parsed for tags
    #[arg(long)]
    query: String,
    /// Query embedding as a JSON array of numbers
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long, value_parser = unit_interval, default_value = "0.8")]
    alpha: f64,
    #[arg(long, value_parser = positive_count, default_value = "10")]
    topk: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    vocab: PathBuf,
    /// Comma-separated keywords
    #[arg(long)]
    query: String,
    #[arg(long, value_parser = positive_count, default_value = "10")]
    topk: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// One of bce, asl, lm, itc, itm; all when omitted
    #[arg(long, value_parser = kernel)]
    loss: Option<Kernel>,
    #[arg(long, default_value = "0")]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ShuffleArgs {
    /// Tag lines: tag ids, parse output or raw captions
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "0")]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn shard(s: &str) -> Result<Shard, String> {
    s.parse().map_err(|e: tagmine::corpus::CorpusError| e.to_string())
}

fn grid(s: &str) -> Result<Grid, String> {
    tagmine::evalkit::parse_sweep(s).map(Grid).map_err(|e| e.to_string())
}

fn kernel(s: &str) -> Result<Kernel, String> {
    s.parse()
}

fn float(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not finite"))
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v = float(s)?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = float(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let v = float(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} is negative"))
    }
}

fn positive_count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("{s:?} is not a count")),
    }
}

fn positive_u64(s: &str) -> Result<u64, String> {
    positive_count(s).map(|v| v as u64)
}

/// Errors that are the caller's fault rather than the data's.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn init_threads() -> Result<(), Usage> {
    let Ok(raw) = std::env::var("TAGMINE_THREADS") else {
        return Ok(());
    };
    let n = positive_count(&raw).map_err(|e| Usage(format!("TAGMINE_THREADS: {e}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Usage(format!("TAGMINE_THREADS: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
