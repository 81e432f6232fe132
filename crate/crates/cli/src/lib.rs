//! Command-line front end for the disease-symptom relation pipeline.
//!
//! `main.rs` only parses arguments and maps errors to exit codes; every
//! command is callable from tests through [`run`].

pub mod commands;
pub mod config;

use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use dsr_core::collection::CollectionError;
use dsr_core::corpus::CorpusError;
use dsr_core::embedding::EmbeddingError;
use dsr_core::eval::EvalError;
use dsr_core::miner::MinerError;
use dsr_core::pipeline::{PipelineError, DEFAULT_BATCH};
use dsr_core::vocab::VocabError;

use config::{PipelineConfig, Settings};

/// Invalid flags or configuration.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Inputs that loaded but failed a check.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct DataError(pub String);

#[derive(Debug, Parser)]
#[command(name = "dsr", version, about = "Mine, rank and evaluate disease-symptom relations")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// key=value settings file; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Vocabulary TSV (id, kind, name, synonyms).
    #[arg(long, global = true, value_name = "FILE")]
    pub vocab: Option<PathBuf>,
    /// Corpus of JSON-lines articles.
    #[arg(long, global = true, value_name = "FILE")]
    pub corpus: Option<PathBuf>,
    /// Regimes to mine, comma separated (kwd, fulltext).
    #[arg(long, global = true, value_name = "LIST")]
    pub regime: Option<String>,
    /// Concept vectors (text format, one row per concept).
    #[arg(long, global = true, value_name = "FILE")]
    pub vectors: Option<PathBuf>,
    /// Relation scores TSV (disease, symptom, score).
    #[arg(long, global = true, value_name = "FILE")]
    pub scores: Option<PathBuf>,
    /// Graded collection JSON.
    #[arg(long, global = true, value_name = "FILE")]
    pub collection: Option<PathBuf>,
    /// Metric cutoffs, comma separated [default: 5,10].
    #[arg(long, global = true, value_name = "LIST")]
    pub cutoffs: Option<String>,
    /// Significance threshold for paired t-tests [default: 0.01].
    #[arg(long, global = true)]
    pub alpha: Option<String>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    pub workers: Option<String>,
    /// Log and skip malformed corpus records instead of aborting.
    #[arg(long, global = true)]
    pub skip_bad_records: bool,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// nDCG gain: linear or exponential [default: linear].
    #[arg(long, global = true)]
    pub gain: Option<String>,
    /// P@k denominator: cutoff or retrieved [default: cutoff].
    #[arg(long, global = true)]
    pub precision_denominator: Option<String>,
}

impl CommonArgs {
    fn settings(&self) -> Settings {
        let mut s = Settings::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                s.insert(k.to_string(), v);
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        put("vocab", path(&self.vocab));
        put("corpus", path(&self.corpus));
        put("vectors", path(&self.vectors));
        put("scores", path(&self.scores));
        put("collection", path(&self.collection));
        put("out", path(&self.out));
        put("regime", self.regime.clone());
        put("cutoffs", self.cutoffs.clone());
        put("alpha", self.alpha.clone());
        put("workers", self.workers.clone());
        put("gain", self.gain.clone());
        put("precision-denominator", self.precision_denominator.clone());
        put("skip-bad-records", self.skip_bad_records.then(|| "true".to_string()));
        s
    }

    pub fn resolve(&self) -> Result<PipelineConfig, UsageError> {
        let file = match &self.config {
            Some(path) => config::load_settings(path)?,
            None => Settings::new(),
        };
        PipelineConfig::from_layers([&file, &self.settings()])
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tag every article and write section concept sets as JSON lines.
    Tag,
    /// Count co-occurrences and write index snapshots and relation scores.
    Mine {
        /// Articles per parallel batch.
        #[arg(long, default_value_t = DEFAULT_BATCH)]
        batch_size: usize,
    },
    /// Rank symptoms for one disease, or write a run file for all diseases.
    Rank {
        /// Disease id or name; omit to rank every disease.
        #[arg(long)]
        disease: Option<String>,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
        /// Method label of the scores (kwd, kwdlarge, fulltext, embedding).
        #[arg(long)]
        method: Option<String>,
    },
    /// Evaluate run files against the collection.
    Eval {
        /// Run files as LABEL=PATH (or PATH), in table order.
        #[arg(required = true, value_name = "RUN")]
        runs: Vec<String>,
    },
    /// Fleiss' kappa over primary-symptom annotations.
    Kappa {
        #[arg(long, value_name = "CSV")]
        annotations: PathBuf,
    },
    /// Build a graded collection by majority vote.
    Vote {
        #[arg(long, value_name = "CSV")]
        annotations: PathBuf,
        /// Relevant pairs, `disease_id<TAB>symptom_id` per line.
        #[arg(long, value_name = "TSV")]
        pairs: PathBuf,
    },
    /// Check a collection (or a vocabulary, or a corpus).
    Validate {
        /// Count expectations JSON.
        #[arg(long, value_name = "JSON")]
        expect: Option<PathBuf>,
    },
}

/// Runs a parsed command line, writing terminal output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut (dyn Write + Send)) -> Result<()> {
    let config = cli.common.resolve()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build()?;
    pool.install(|| dispatch(&cli.command, &config, stdout))
}

fn dispatch(command: &Command, config: &PipelineConfig, stdout: &mut (dyn Write + Send)) -> Result<()> {
    match command {
        Command::Tag => commands::cmd_tag(config, stdout),
        Command::Mine { batch_size } => commands::cmd_mine(config, *batch_size, stdout),
        Command::Rank { disease, k, method } => commands::cmd_rank(config, disease.as_deref(), *k, method.as_deref(), stdout),
        Command::Eval { runs } => commands::cmd_eval(config, runs, stdout).map(|_| ()),
        Command::Kappa { annotations } => commands::cmd_kappa(config, annotations, stdout).map(|_| ()),
        Command::Vote { annotations, pairs } => commands::cmd_vote(config, annotations, pairs, stdout).map(|_| ()),
        Command::Validate { expect } => commands::cmd_validate(config, expect.as_deref(), stdout),
    }
}

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit status for an error: 2 usage, 3 invalid data, 4 I/O, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        let code = if cause.is::<UsageError>() {
            Some(EXIT_USAGE)
        } else if cause.is::<io::Error>() {
            Some(EXIT_IO)
        } else if let Some(e) = cause.downcast_ref::<VocabError>() {
            Some(if matches!(e, VocabError::Io(_)) { EXIT_IO } else { EXIT_DATA })
        } else if let Some(e) = cause.downcast_ref::<CorpusError>() {
            Some(if matches!(e, CorpusError::Io(_)) { EXIT_IO } else { EXIT_DATA })
        } else if let Some(e) = cause.downcast_ref::<MinerError>() {
            Some(if matches!(e, MinerError::Io(_)) { EXIT_IO } else { EXIT_DATA })
        } else if let Some(e) = cause.downcast_ref::<EmbeddingError>() {
            Some(if matches!(e, EmbeddingError::Io(_)) { EXIT_IO } else { EXIT_DATA })
        } else if let Some(e) = cause.downcast_ref::<CollectionError>() {
            Some(if matches!(e, CollectionError::Io(_)) { EXIT_IO } else { EXIT_DATA })
        } else if let Some(e) = cause.downcast_ref::<EvalError>() {
            Some(match e {
                EvalError::Io(_) => EXIT_IO,
                EvalError::TooManyRuns(_) | EvalError::InvalidConfig(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            })
        } else if let Some(e) = cause.downcast_ref::<PipelineError>() {
            Some(match e {
                PipelineError::Corpus(CorpusError::Io(_)) | PipelineError::Miner(MinerError::Io(_)) => EXIT_IO,
                _ => EXIT_DATA,
            })
        } else if cause.is::<DataError>() || cause.is::<serde_json::Error>() {
            Some(EXIT_DATA)
        } else {
            None
        };
        if let Some(code) = code {
            return code;
        }
    }
    EXIT_OTHER
}
