//! The `mnm` command line. Every subcommand reads one TOML experiment file
//! (`--config`), applies command-line overrides, writes the resolved
//! config next to its outputs and reads/writes artifacts in the output
//! directory. Exit codes: 0 success, 1 usage or config error, 2 data error,
//! 3 numerical error.

mod commands;
mod config;
mod topwords;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::eval::{EvalError, MatchMode};
use crate::kb::KbError;
use crate::model::{KnowledgeMode, ModelError, Variant};
use crate::numerics::NumericsError;
use crate::pipeline::PipelineError;

pub use config::{CvConfig, EvalConfig, Loaded, Paths, RulesConfig, RunConfig, CONFIG_VERSION};
pub use topwords::{read_attention, top_weight_words, write_attention, DEFAULT_TOP_WORDS};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::NonFinite => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<KbError> for CliError {
    fn from(e: KbError) -> Self {
        match e {
            KbError::NonFiniteLoss => CliError::Numeric(e.to_string()),
            KbError::Config(_) | KbError::DimensionMismatch { .. } => CliError::Usage(e.to_string()),
            KbError::Numerics(n) => n.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFinite => CliError::Numeric(e.to_string()),
            ModelError::Config(_) => CliError::Usage(e.to_string()),
            ModelError::Numerics(n) => n.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::NonFiniteLoss { .. } => CliError::Numeric(e.to_string()),
            PipelineError::Config(_) => CliError::Usage(e.to_string()),
            PipelineError::Model(m) => m.into(),
            PipelineError::Numerics(n) => n.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "mnm", version, about = "Knowledge-augmented memory networks for protein-pair relation extraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Worker threads for per-document parallelism.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Overrides `output_dir`.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Overrides every seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelOverrides {
    #[arg(long)]
    pub layers: Option<usize>,
    /// MNM, MNM-Single, MNM-DA or MNM-Max.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// AE, TE, AE-TR or full.
    #[arg(long)]
    pub knowledge: Option<KnowledgeMode>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Exact,
    Mapped,
}

impl From<ModeArg> for MatchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => MatchMode::Exact,
            ModeArg::Mapped => MatchMode::Mapped,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train TransE on the knowledge base; writes kb/entities.*, kb/relations.*, kb/loss.tsv, kb/link_prediction.json.
    KbTrain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Parse annotations and write candidates.jsonl.
    Preprocess {
        #[command(flatten)]
        common: Common,
    },
    /// Train a memory network on candidates.jsonl; writes model.ckpt and loss.tsv.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelOverrides,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Document-level k-fold cross-validation over `[cv].grid`; writes cv.json.
    CrossValidate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelOverrides,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Score candidates and aggregate per document; writes predictions.tsv.
    Predict {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelOverrides,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Sentence co-occurrence rule; writes rules.tsv.
    Rules {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        threshold: Option<usize>,
    },
    /// Union of model and rule predictions; writes merged.tsv.
    Merge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Micro precision/recall/F1 against gold pairs; writes report.json and report.txt.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Gold pairs (`doc<TAB>g1<TAB>g2`); defaults to the annotation file's relations.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Attention weights of every candidate; writes attention.jsonl.
    AttentionDump {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelOverrides,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Most frequent highest-weight words; writes top_words.tsv.
    TopWords {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_TOP_WORDS)]
        k: usize,
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::KbTrain { common, .. }
            | Command::Preprocess { common }
            | Command::Train { common, .. }
            | Command::CrossValidate { common, .. }
            | Command::Predict { common, .. }
            | Command::Rules { common, .. }
            | Command::Merge { common, .. }
            | Command::Evaluate { common, .. }
            | Command::AttentionDump { common, .. }
            | Command::TopWords { common, .. } => common,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::KbTrain { .. } => "kb-train",
            Command::Preprocess { .. } => "preprocess",
            Command::Train { .. } => "train",
            Command::CrossValidate { .. } => "cross-validate",
            Command::Predict { .. } => "predict",
            Command::Rules { .. } => "rules",
            Command::Merge { .. } => "merge",
            Command::Evaluate { .. } => "evaluate",
            Command::AttentionDump { .. } => "attention-dump",
            Command::TopWords { .. } => "top-words",
        }
    }
}

/// Runs one parsed command.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    if common.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| commands::dispatch(&cli.command))
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
