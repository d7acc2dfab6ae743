//! The `topicforge` command line.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data validation error,
//! 3 runtime failure. Failures print one JSON line on stderr.

mod commands;
pub mod config;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::Method;

pub use commands::{ModelFile, ModelPayload};

#[derive(Debug, Parser)]
#[command(
    name = "topicforge",
    version,
    about = "Short-text topic modelling toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tokenize a JSONL document file into a corpus JSON file.
    Preprocess(PreprocessArgs),
    /// Rank the most frequent n-grams of a corpus.
    Ngrams(NgramsArgs),
    /// Fit an LDA, GSDMM or embedding-cluster model.
    Fit(FitArgs),
    /// Score a model's topics with NPMI coherence.
    Coherence(CoherenceArgs),
    /// Compare the topics of two models.
    Align(AlignArgs),
    /// Merge embedding-cluster topics down to a target count.
    Reduce(ReduceArgs),
    /// Write 2-D document coordinates and topics as CSV.
    ExportScatter(ScatterArgs),
    /// Generate a synthetic corpus with matching embeddings.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Run configuration JSON.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// JSONL input (`id`, `text`, optional `timestamp`).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Model family the corpus is for; sets the stemming default.
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long, overrides_with = "no_stem")]
    pub stem: bool,
    #[arg(long)]
    pub no_stem: bool,
    #[arg(long)]
    pub min_token_len: Option<usize>,
    /// Stopword file (one word per line).
    #[arg(long)]
    pub stopwords: Option<String>,
    /// JSON object of emoji → token overrides.
    #[arg(long)]
    pub emoji_map: Option<String>,
}

#[derive(Debug, Args)]
pub struct NgramsArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub n: u8,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// RNG seed. Required here or as `seed` in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// K for LDA, T for GSDMM.
    #[arg(long)]
    pub topics: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Embedding file (embed method only).
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Keep per-token LDA assignments in the model file.
    #[arg(long)]
    pub keep_assignments: bool,
}

#[derive(Debug, Args)]
pub struct CoherenceArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub model: PathBuf,
    /// Reference corpus; normally the corpus the model was fitted on.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub top_n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub model_a: PathBuf,
    #[arg(long)]
    pub model_b: PathBuf,
    /// Heatmap CSV.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Best-match JSON; defaults to `<output stem>.matches.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Keep the N largest topics of each model (0 keeps all).
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Words listed per topic in the report.
    #[arg(long, default_value_t = 20)]
    pub top_words: usize,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub target: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub topics: usize,
    #[arg(long, default_value_t = 30)]
    pub docs_per_topic: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.code {
            1 => "usage",
            2 => "data",
            _ => "runtime",
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json_line(&self) -> String {
        json!({"error": {"code": self.code, "kind": self.kind(), "message": self.message}})
            .to_string()
    }
}

impl From<crate::corpus::CorpusError> for CliError {
    fn from(e: crate::corpus::CorpusError) -> Self {
        match e {
            crate::corpus::CorpusError::InvalidConfig(_) => Self::usage(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<crate::lda::LdaError> for CliError {
    fn from(e: crate::lda::LdaError) -> Self {
        match e {
            crate::lda::LdaError::InvalidConfig(_) => Self::usage(e.to_string()),
            crate::lda::LdaError::EmptyCorpus => Self::data(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

impl From<crate::gsdmm::GsdmmError> for CliError {
    fn from(e: crate::gsdmm::GsdmmError) -> Self {
        match e {
            crate::gsdmm::GsdmmError::InvalidConfig(_) => Self::usage(e.to_string()),
            crate::gsdmm::GsdmmError::EmptyCorpus => Self::data(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

impl From<crate::embed::EmbeddingError> for CliError {
    fn from(e: crate::embed::EmbeddingError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<crate::embed::EmbedError> for CliError {
    fn from(e: crate::embed::EmbedError) -> Self {
        use crate::embed::{ClusterError, EmbedError, ReduceError};
        match e {
            EmbedError::Reduce(ReduceError::InvalidConfig(_))
            | EmbedError::Cluster(ClusterError::InvalidConfig(_)) => Self::usage(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<crate::coherence::CoherenceError> for CliError {
    fn from(e: crate::coherence::CoherenceError) -> Self {
        match e {
            crate::coherence::CoherenceError::InvalidConfig(_) => Self::usage(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

impl From<crate::align::AlignError> for CliError {
    fn from(e: crate::align::AlignError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<crate::embed::scatter::ScatterError> for CliError {
    fn from(e: crate::embed::scatter::ScatterError) -> Self {
        match e {
            crate::embed::scatter::ScatterError::Csv(_) => Self::runtime(e.to_string()),
            _ => Self::data(e.to_string()),
        }
    }
}

/// Applies `TOPICFORGE_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("TOPICFORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| {
            CliError::usage(format!(
                "TOPICFORGE_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::runtime(format!("cannot start worker pool: {e}")))
}

/// Parses `args` and runs the command. Help and version output are
/// successes; other parse failures are usage errors.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("usage error");
            return Err(CliError::usage(first.trim_start_matches("error: ")));
        }
    };
    configure_threads()?;
    commands::dispatch(cli.command)
}
