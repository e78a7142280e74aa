use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qinterp_core::config::{EngineConfig, SegmentationMode};
use qinterp_core::interpreter::ScoringWeights;
use qinterp_core::segmentation::{DEFAULT_MAX_TERMS, DEFAULT_THRESHOLD};
use qinterp_core::kbstore::DEFAULT_FUZZY_DEPTH;
use qinterp_core::config::DEFAULT_MAX_COMBINATIONS;

#[derive(Debug, Parser)]
#[command(name = "qinterp", version, about = "Entity-based interpretation of keyword queries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Emit human-readable tables instead of JSON lines.
    #[arg(long, global = true)]
    pub pretty: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a binary snapshot from tab-separated source files.
    Ingest(IngestArgs),
    /// Rank the segmentations of a query and show the skeleton filter.
    Segment(QueryArgs),
    /// List candidate entities for every segment of a query.
    Link(QueryArgs),
    /// Produce ranked interpretations for a query, a query file or a corpus.
    Interpret(InterpretArgs),
    /// Score a run file against a ground-truth corpus.
    Evaluate(EvaluateArgs),
    /// Split a corpus into train and test sets without breaking clusters.
    Split(SplitArgs),
    /// Serve interpretations over HTTP.
    Serve(ServeArgs),
    /// Measure interpretation latency over a query file.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegmentationArg {
    TitleAware,
    Frequency,
    None,
}

impl From<SegmentationArg> for SegmentationMode {
    fn from(arg: SegmentationArg) -> Self {
        match arg {
            SegmentationArg::TitleAware => SegmentationMode::TitleAware,
            SegmentationArg::Frequency => SegmentationMode::Frequency,
            SegmentationArg::None => SegmentationMode::None,
        }
    }
}

/// Snapshot location and engine parameters.
#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Snapshot directory, or a directory of source files.
    #[arg(long, env = "QINTERP_KB")]
    pub kb: PathBuf,

    /// Score-ratio threshold of the skeleton filter.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,

    /// Fuzzy lookup depth per segment (0 disables fuzzy matching).
    #[arg(long, default_value_t = DEFAULT_FUZZY_DEPTH)]
    pub depth: usize,

    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,

    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,

    /// Keep only the best K interpretations per query.
    #[arg(long, value_name = "K")]
    pub top_k: Option<usize>,

    /// Interpretations generated per skeleton before pruning.
    #[arg(long, default_value_t = DEFAULT_MAX_COMBINATIONS)]
    pub max_combinations: usize,

    #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
    pub max_terms: usize,

    #[arg(long, value_enum, default_value_t = SegmentationArg::TitleAware)]
    pub segmentation: SegmentationArg,

    /// Run the segmentation and linking phases on one thread.
    #[arg(long)]
    pub sequential: bool,
}

impl EngineArgs {
    pub fn config(&self) -> qinterp_core::Result<EngineConfig> {
        let config = EngineConfig {
            threshold: self.threshold,
            depth: self.depth,
            weights: ScoringWeights {
                alpha: self.alpha,
                beta: self.beta,
                gamma: self.gamma,
            },
            max_combinations: self.max_combinations,
            max_terms: self.max_terms,
            top_k: self.top_k,
            segmentation: self.segmentation.into(),
            parallel: !self.sequential,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding aliases.tsv, anchors.tsv, ngrams.tsv and embeddings.txt.
    #[arg(long)]
    pub source: PathBuf,

    /// Output snapshot directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub engine: EngineArgs,

    pub query: String,
}

#[derive(Debug, Args)]
pub struct InterpretArgs {
    #[command(flatten)]
    pub engine: EngineArgs,

    /// Query text; omit when using --queries or --batch.
    #[arg(conflicts_with_all = ["queries", "batch"], required_unless_present_any = ["queries", "batch"])]
    pub query: Option<String>,

    /// File with one query per line.
    #[arg(long, conflicts_with = "batch")]
    pub queries: Option<PathBuf>,

    /// Corpus file; writes one run record per corpus query.
    #[arg(long)]
    pub batch: Option<PathBuf>,

    /// Return only the single top-commonness interpretation.
    #[arg(long)]
    pub baseline: bool,

    /// Write output here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: PathBuf,

    #[arg(long)]
    pub run: PathBuf,

    /// Lowest grade of a gold interpretation.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub min_grade: u8,

    /// Score only the first K interpretations of each query.
    #[arg(long, value_name = "K")]
    pub top_k: Option<usize>,

    /// Include per-query values.
    #[arg(long)]
    pub per_query: bool,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,

    /// Output directory for train.ids, test.ids and split.json.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Target train share.
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,

    #[arg(long, default_value_t = 0.05)]
    pub error_threshold: f64,

    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub engine: EngineArgs,

    #[arg(long, default_value = "127.0.0.1:8080")]
    pub address: SocketAddr,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub engine: EngineArgs,

    /// File with one query per line.
    #[arg(long)]
    pub queries: PathBuf,

    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    pub repetitions: u32,

    /// Skip the warm-up pass.
    #[arg(long)]
    pub no_warmup: bool,
}
