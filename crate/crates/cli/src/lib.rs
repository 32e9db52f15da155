//! The `phantom` command line: argument definitions, command implementations
//! and the mapping from failures to exit codes.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::run;

/// Exit status for a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage,
    Data,
    Transport,
}

impl ExitKind {
    pub fn code(self) -> i32 {
        match self {
            ExitKind::Usage => 2,
            ExitKind::Data => 3,
            ExitKind::Transport => 4,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl CliError {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        CliError { kind: ExitKind::Usage, error: e.into() }
    }
    pub fn data(e: impl Into<anyhow::Error>) -> Self {
        CliError { kind: ExitKind::Data, error: e.into() }
    }
    pub fn transport(e: impl Into<anyhow::Error>) -> Self {
        CliError { kind: ExitKind::Transport, error: e.into() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "phantom", version, about = "Probe language-model outputs for phantom edits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select target words and write annotated documents.
    Prepare(PrepareArgs),
    /// Align outputs with annotated documents and write trials and reports.
    Analyze(AnalyzeArgs),
    /// Build a token-id blocklist from the Different trials of a trials file.
    Mask(MaskArgs),
    /// Run the seeded simulator over annotated documents.
    Simulate(SimulateArgs),
    /// List the segmentations of a word under a vocabulary.
    Enumerate(EnumerateArgs),
    /// Request outputs from a completion endpoint.
    Generate(GenerateArgs),
    /// Write a synthetic corpus built from the bundled lexicon.
    SynthCorpus(SynthArgs),
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct VocabArgs {
    /// Vocabulary JSON file; the bundled toy vocabulary when omitted.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Merges file; makes `--vocab` a token→id map in the usual BPE layout.
    #[arg(long, requires = "vocab")]
    pub merges: Option<PathBuf>,
    /// Override the file's whitespace-normalization flag.
    #[arg(long)]
    pub normalize_whitespace: Option<bool>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct PrepareArgs {
    /// Corpus records `{doc_id, text}`, one per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of eligible words to target per document.
    #[arg(long, default_value_t = 0.05)]
    pub fraction: f64,
    #[arg(long, default_value_t = 100)]
    pub min_words: usize,
    #[arg(long, default_value_t = 600)]
    pub max_words: usize,
    /// Only words of this many characters, e.g. `3-15`.
    #[arg(long, value_parser = parse_range)]
    pub length_range: Option<(usize, usize)>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Prompt template containing `{doc}`.
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Where to write the run manifest; `<out>.manifest.jsonl` by default.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub annotated: PathBuf,
    #[arg(long)]
    pub outputs: PathBuf,
    /// Directory for trials.jsonl, summary.json, the matrix grids and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub vocab: VocabArgs,
    /// Ignore reported output ids and encode output texts instead.
    #[arg(long)]
    pub encode_outputs: bool,
    /// Largest fragment count with its own matrix row and column.
    #[arg(long, default_value_t = 8)]
    pub bound: usize,
    /// Count whitespace-only tokens as fragments.
    #[arg(long)]
    pub count_gap_tokens: bool,
    /// Affix lexicon JSON for the morphological error type.
    #[arg(long)]
    pub affixes: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct MaskArgs {
    #[arg(long)]
    pub trials: PathBuf,
    /// Blocklist file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the blocklist as an endpoint logit-bias map.
    #[arg(long)]
    pub logit_bias: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub annotated: PathBuf,
    /// Directory for outputs.jsonl, labels.jsonl, annotated.jsonl and the manifest.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub vocab: VocabArgs,
    /// Bundled mixture preset.
    #[arg(long, default_value = "gemma3-4b", conflicts_with = "mixture")]
    pub preset: String,
    /// Mixture JSON file overriding the preset.
    #[arg(long)]
    pub mixture: Option<PathBuf>,
    /// Synonym map JSON (word → list of replacements).
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Blocklist applied at every decode step.
    #[arg(long)]
    pub blocklist: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop after this many targets; every target when omitted.
    #[arg(long)]
    pub n_trials: Option<usize>,
    #[arg(long)]
    pub affixes: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct EnumerateArgs {
    pub word: String,
    #[command(flatten)]
    pub vocab: VocabArgs,
    /// Prepend a space, as for a word in running text.
    #[arg(long)]
    pub spaced: bool,
    /// Drop segmentations using implausible single-byte tokens.
    #[arg(long)]
    pub plausible: bool,
    #[arg(long, default_value_t = 10_000)]
    pub limit: usize,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct GenerateArgs {
    #[arg(long)]
    pub annotated: PathBuf,
    #[arg(long)]
    pub endpoint: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Blocklist sent as a logit-bias map with every request.
    #[arg(long)]
    pub blocklist: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub attempts: u32,
    #[arg(long, default_value_t = 250)]
    pub backoff_ms: u64,
    #[arg(long, default_value_t = 2048)]
    pub max_tokens: u32,
    #[arg(long, default_value_t = 60_000)]
    pub timeout_ms: u64,
    /// Environment variable holding a bearer token.
    #[arg(long)]
    pub api_key_env: Option<String>,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub docs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Word lexicon TSV; the bundled one when omitted.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').ok_or_else(|| format!("expected LO-HI, got {s:?}"))?;
    let lo: usize = a.trim().parse().map_err(|_| format!("bad lower bound {a:?}"))?;
    let hi: usize = b.trim().parse().map_err(|_| format!("bad upper bound {b:?}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}-{hi}"));
    }
    Ok((lo, hi))
}
