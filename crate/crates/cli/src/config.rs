//! Config file loading and the flag > env > file > default layering.

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

use crate::args::{CompareArgs, EvalArgs, IndexArgs, RunArgs, TraceArgs, TrainFilterArgs};

/// One optional table per subcommand. Relative paths are resolved against
/// the directory holding the file.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub index: IndexArgs,
    pub train_filter: TrainFilterArgs,
    pub run: RunArgs,
    pub eval: EvalArgs,
    pub compare: CompareArgs,
    pub trace: TraceArgs,
}

impl ConfigFile {
    pub fn parse(raw: &str, base: &Path) -> Result<Self, toml::de::Error> {
        let mut cfg: ConfigFile = toml::from_str(raw)?;
        cfg.index.rebase(base);
        cfg.train_filter.rebase(base);
        cfg.run.rebase(base);
        cfg.eval.rebase(base);
        cfg.compare.rebase(base);
        cfg.trace.rebase(base);
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&raw, base).with_context(|| format!("config {}", path.display()))
    }
}

/// Endpoint overrides from `GRG_ANSWER_URL`, `GRG_SUMMARY_URL` and
/// `GRG_EMBED_URL`.
pub fn env_layer(get: impl Fn(&str) -> Option<String>) -> RunArgs {
    RunArgs {
        answer_url: get("GRG_ANSWER_URL"),
        summary_url: get("GRG_SUMMARY_URL"),
        embed_url: get("GRG_EMBED_URL"),
        ..RunArgs::default()
    }
}

pub fn process_env(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}
