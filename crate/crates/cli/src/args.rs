//! Command-line and config-file surface. Every subcommand's options are one
//! struct that clap parses from flags and serde parses from the matching
//! config table, so the two share names by construction.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use grg_core::embedding::EmbeddingKind;
use grg_core::genai::ProviderKind;
use grg_core::pipeline::Preset;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "grg", version, about = "Generate-retrieve-generate experiment harness")]
pub struct Cli {
    /// TOML file whose tables supply defaults for each subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Build and persist a BM25 index over a corpus file.
    Index(IndexArgs),
    /// Train the passage quality filter on labeled documents.
    TrainFilter(TrainFilterArgs),
    /// Execute a run preset over a topics file.
    Run(RunArgs),
    /// Score a run file against qrels.
    Eval(EvalArgs),
    /// Tabulate metric reports side by side.
    Compare(CompareArgs),
    /// Check a trace log for blindness and budget violations.
    Trace(TraceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Index(_) => "index",
            Command::TrainFilter(_) => "train-filter",
            Command::Run(_) => "run",
            Command::Eval(_) => "eval",
            Command::Compare(_) => "compare",
            Command::Trace(_) => "trace",
        }
    }
}

/// Declares an options struct whose fields are all optional, plus `or` to
/// fill unset fields from a lower-precedence layer and `rebase` to resolve
/// relative paths against a directory.
macro_rules! layered {
    (
        $(#[$meta:meta])*
        pub struct $name:ident {
            $(
                $(#[$fmeta:meta])*
                pub $field:ident: Option<$ty:ty>,
            )*
        }
        paths: [$($path:ident),*]
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $name {
            $(
                $(#[$fmeta])*
                #[arg(long)]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            pub fn or(self, lower: Self) -> Self {
                $name { $($field: self.$field.or(lower.$field),)* }
            }

            pub fn rebase(&mut self, dir: &Path) {
                $(rebase(&mut self.$path, dir);)*
            }
        }
    };
}

fn rebase<P: Rebase>(value: &mut Option<P>, dir: &Path) {
    if let Some(v) = value {
        v.rebase(dir);
    }
}

trait Rebase {
    fn rebase(&mut self, dir: &Path);
}

impl Rebase for PathBuf {
    fn rebase(&mut self, dir: &Path) {
        if self.is_relative() {
            *self = dir.join(&*self);
        }
    }
}

impl Rebase for Vec<PathBuf> {
    fn rebase(&mut self, dir: &Path) {
        for p in self {
            p.rebase(dir);
        }
    }
}

layered! {
    pub struct IndexArgs {
        /// Corpus JSONL file, one passage per line.
        pub corpus: Option<PathBuf>,
        /// Where to write the index file.
        pub out: Option<PathBuf>,
        /// BM25 term-frequency saturation [default: 0.9].
        pub k1: Option<f64>,
        /// BM25 length normalization in [0, 1] [default: 0.4].
        pub b: Option<f64>,
    }
    paths: [corpus, out]
}

layered! {
    pub struct TrainFilterArgs {
        /// Labeled JSONL file with `text` and `label` fields.
        pub data: Option<PathBuf>,
        /// WikiText-style dump whose articles are added as reliable documents.
        pub wikitext: Option<PathBuf>,
        /// Where to write the model file.
        pub out: Option<PathBuf>,
        /// Vocabulary cap [default: 20000].
        pub max_features: Option<usize>,
        /// Gradient descent epochs [default: 500].
        pub epochs: Option<usize>,
        /// Gradient descent step size [default: 0.5].
        pub learning_rate: Option<f64>,
        /// L2 penalty on the weights [default: 0.0001].
        pub l2_lambda: Option<f64>,
    }
    paths: [data, wikitext, out]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatKind {
    #[value(name = "http_chat")]
    HttpChat,
    #[value(name = "scripted_mock")]
    ScriptedMock,
}

impl From<ChatKind> for ProviderKind {
    fn from(k: ChatKind) -> Self {
        match k {
            ChatKind::HttpChat => ProviderKind::HttpChat,
            ChatKind::ScriptedMock => ProviderKind::ScriptedMock,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedKind {
    #[value(name = "http")]
    Http,
    #[value(name = "hashed_lexical")]
    HashedLexical,
}

impl From<EmbedKind> for EmbeddingKind {
    fn from(k: EmbedKind) -> Self {
        match k {
            EmbedKind::Http => EmbeddingKind::Http,
            EmbedKind::HashedLexical => EmbeddingKind::HashedLexical,
        }
    }
}

layered! {
    pub struct RunArgs {
        /// One of run1, run2, run3, rtg.
        pub preset: Option<Preset>,
        /// Topics JSON file.
        pub topics: Option<PathBuf>,
        /// Index file written by `grg index`.
        pub index: Option<PathBuf>,
        /// Quality model written by `grg train-filter`; required by run1 and run2.
        pub filter_model: Option<PathBuf>,
        /// Output directory.
        pub out: Option<PathBuf>,
        /// Topics processed concurrently [default: 1].
        pub parallel: Option<usize>,
        /// Tag written in the run file [default: the preset name].
        pub run_tag: Option<String>,
        /// Minimum PTKB similarity [default: 0.3].
        pub ptkb_threshold: Option<f64>,
        /// BM25 hits retrieved per shot [default: 50].
        pub top_k_retrieve: Option<usize>,
        /// Passages summarized per shot [default: 5].
        pub top_n_passages: Option<usize>,
        /// Answer model provider [default: scripted_mock].
        pub answer_kind: Option<ChatKind>,
        /// Answer model endpoint; env GRG_ANSWER_URL.
        pub answer_url: Option<String>,
        /// Mock script for the answer model.
        pub answer_script: Option<PathBuf>,
        /// Summary model provider [default: scripted_mock].
        pub summary_kind: Option<ChatKind>,
        /// Summary model endpoint; env GRG_SUMMARY_URL.
        pub summary_url: Option<String>,
        /// Mock script for the summary model [default: the answer script].
        pub summary_script: Option<PathBuf>,
        /// Embedding provider [default: hashed_lexical].
        pub embed_kind: Option<EmbedKind>,
        /// Embedding endpoint; env GRG_EMBED_URL.
        pub embed_url: Option<String>,
        /// Embedding dimension [default: 384].
        pub embed_dimension: Option<usize>,
        /// Prompt token budget for both chat models [default: 2048].
        pub context_budget: Option<usize>,
        /// Per-request timeout for every provider, in milliseconds.
        pub timeout_ms: Option<u64>,
    }
    paths: [topics, index, filter_model, out, answer_script, summary_script]
}

layered! {
    pub struct EvalArgs {
        /// TREC run file.
        pub run: Option<PathBuf>,
        /// TREC qrels file.
        pub qrels: Option<PathBuf>,
        /// Write the report JSON here instead of stdout.
        pub out: Option<PathBuf>,
    }
    paths: [run, qrels, out]
}

layered! {
    pub struct CompareArgs {
        /// Report files written by `grg eval`; rows are named by file stem.
        #[arg(num_args = 1..)]
        pub reports: Option<Vec<PathBuf>>,
    }
    paths: [reports]
}

layered! {
    pub struct TraceArgs {
        /// Trace log, usually `<run dir>/trace.jsonl`.
        pub file: Option<PathBuf>,
        /// Token budget to check prompts against [default: 2048].
        pub budget: Option<usize>,
        /// Write the recorded responses as a mock script.
        pub export_script: Option<PathBuf>,
    }
    paths: [file, export_script]
}
