use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mspider_core::model::{Language, Split};
use mspider_core::prep::ZeroShotMode;

#[derive(Debug, Parser)]
#[command(name = "mspider", version, about = "Multilingual text-to-SQL dataset toolkit")]
pub struct Cli {
    /// TOML configuration; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Model sidecar base URL.
    #[arg(long, global = true, env = "MSPIDER_SIDECAR", value_name = "URL")]
    pub sidecar: Option<String>,
    /// Fixture table answering backend requests offline.
    #[arg(long, global = true, value_name = "PATH")]
    pub fixtures: Option<PathBuf>,
    /// Persistent JSONL response cache.
    #[arg(long, global = true, value_name = "PATH")]
    pub cache: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

/// One dataset: a schema file plus example files, or a corpus directory.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Schema file (`tables.json`).
    #[arg(long = "db", alias = "tables", value_name = "PATH")]
    pub tables: Option<PathBuf>,
    /// Example files.
    #[arg(long = "gold", alias = "examples", value_name = "PATH", num_args = 1..)]
    pub examples: Vec<PathBuf>,
    /// Directory holding `tables.json`, `train*.json` and `dev.json`.
    #[arg(long, value_name = "DIR", conflicts_with_all = ["tables", "examples"])]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "en")]
    pub lang: Language,
    /// Split of `--gold` files, or the split taken from `--corpus`.
    #[arg(long)]
    pub split: Option<Split>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Question, query and database counts.
    Stats {
        #[command(flatten)]
        data: DataArgs,
        /// Root with one corpus directory per language.
        #[arg(long, value_name = "DIR", conflicts_with_all = ["corpus", "tables"])]
        corpus_root: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        langs: Vec<Language>,
        #[arg(long)]
        json: bool,
    },
    /// Checks examples against their schemas.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        json: bool,
    },
    /// Exact-match accuracy of predictions against gold SQL.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        /// One predicted query per line, aligned with the gold examples.
        #[arg(long, value_name = "PATH")]
        pred: PathBuf,
        /// Compare literal values too.
        #[arg(long)]
        with_values: bool,
        /// Directory for the JSON report and run manifest.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Difficulty of each gold query.
    Hardness {
        #[command(flatten)]
        data: DataArgs,
        /// Print one line per example.
        #[arg(long)]
        details: bool,
        #[arg(long)]
        json: bool,
    },
    /// Fuzzy schema-linking score per language.
    LinkScore {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "DIR", conflicts_with_all = ["corpus", "tables"])]
        corpus_root: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        langs: Vec<Language>,
        #[arg(long)]
        json: bool,
    },
    /// Builds verified schema synonyms by back-translation.
    Augment {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Recorded in the manifest; synonym building itself is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        rounds: Option<u32>,
        #[arg(long, value_delimiter = ',')]
        intermediates: Vec<Language>,
        /// Entailment threshold for every language without its own.
        #[arg(long)]
        default_threshold: Option<f64>,
        /// Per-language threshold, `LANG=VALUE`.
        #[arg(long = "threshold", value_name = "LANG=VALUE")]
        thresholds: Vec<String>,
        /// Use the built-in connectives instead of asking the translator.
        #[arg(long)]
        no_probe: bool,
        #[arg(long, value_delimiter = ',')]
        databases: Vec<String>,
    },
    /// Adds renamed variants of each example and writes training files.
    Synthesize {
        #[command(flatten)]
        data: DataArgs,
        /// Output directory of `augment`.
        #[arg(long, value_name = "DIR")]
        augmented: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        variants: Option<u32>,
        /// Replacement probability per item.
        #[arg(long = "p")]
        replace_probability: Option<f64>,
    },
    /// Prepares data for a zero-shot setting.
    PrepZeroshot {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        mode: ZeroShotMode,
        /// Target language; English for translate_then_predict.
        #[arg(long)]
        target: Option<Language>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stats { .. } => "stats",
            Command::Validate { .. } => "validate",
            Command::Evaluate { .. } => "evaluate",
            Command::Hardness { .. } => "hardness",
            Command::LinkScore { .. } => "link-score",
            Command::Augment { .. } => "augment",
            Command::Synthesize { .. } => "synthesize",
            Command::PrepZeroshot { .. } => "prep-zeroshot",
        }
    }
}
