//! Run output directory:
//!
//! - `run.trec`: TREC run file of every turn's provenance
//! - `turns.jsonl`: one [`TurnRecord`] per answered turn
//! - `trace.jsonl`: every provider call, see [`crate::genai::trace`]
//! - `config.resolved.json`: the effective configuration
//! - `errors.jsonl`: failed turns, only written when there are any
//!
//! Everything is written in topic file order, so identical inputs give
//! identical bytes regardless of parallelism.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineError, RunOutput, TurnResult};
use crate::eval::emit_run_file;
use crate::genai::trace::write_trace;

pub const TRACE_FILE: &str = "trace.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub id: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub topic_id: String,
    pub turn_id: u32,
    pub ptkb_provenance: Vec<String>,
    pub response: String,
    pub passage_provenance: Vec<ProvenanceEntry>,
    pub trace_path: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degraded: bool,
}

impl From<&TurnResult> for TurnRecord {
    fn from(r: &TurnResult) -> Self {
        TurnRecord {
            topic_id: r.topic_id.clone(),
            turn_id: r.turn_id,
            ptkb_provenance: r.selected_ptkbs.iter().map(|(id, _)| id.clone()).collect(),
            response: r.final_response.clone(),
            passage_provenance: r
                .provenance
                .iter()
                .map(|h| ProvenanceEntry { id: h.passage_id.clone(), score: h.score, rank: h.rank })
                .collect(),
            trace_path: TRACE_FILE.to_string(),
            degraded: r.degraded,
        }
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    topic_id: &'a str,
    turn_id: u32,
    error: String,
    provider_failure: bool,
    skipped_turns: &'a [u32],
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    File::create(path).map(BufWriter::new).map_err(io(path))
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<(), PipelineError> {
    let mut out = create(path)?;
    for item in items {
        serde_json::to_writer(&mut out, &item).map_err(|e| io(path)(e.into()))?;
        out.write_all(b"\n").map_err(io(path))?;
    }
    out.flush().map_err(io(path))
}

/// Writes the output directory, creating it if needed. `run.trec` is only
/// written when at least one turn succeeded.
pub fn write_run_dir(
    dir: impl AsRef<Path>,
    resolved_config: &impl Serialize,
    tag: &str,
    output: &RunOutput,
) -> Result<(), PipelineError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(io(dir))?;

    let results = output.results();
    let run_path = dir.join("run.trec");
    if !results.is_empty() {
        emit_run_file(&results, tag, &run_path)?;
    } else if run_path.exists() {
        std::fs::remove_file(&run_path).map_err(io(&run_path))?;
    }
    write_jsonl(&dir.join("turns.jsonl"), results.iter().map(TurnRecord::from))?;

    let trace_path = dir.join(TRACE_FILE);
    let mut out = create(&trace_path)?;
    write_trace(&output.trace(), &mut out).map_err(io(&trace_path))?;

    let config_path = dir.join("config.resolved.json");
    let mut config = serde_json::to_string_pretty(resolved_config).map_err(|e| io(&config_path)(e.into()))?;
    config.push('\n');
    std::fs::write(&config_path, config).map_err(io(&config_path))?;

    let errors_path = dir.join("errors.jsonl");
    if output.errors.is_empty() {
        if errors_path.exists() {
            std::fs::remove_file(&errors_path).map_err(io(&errors_path))?;
        }
    } else {
        write_jsonl(
            &errors_path,
            output.errors.iter().map(|e| ErrorRecord {
                topic_id: &e.topic_id,
                turn_id: e.turn_id,
                error: e.error.to_string(),
                provider_failure: e.error.is_provider_failure(),
                skipped_turns: &e.skipped_turns,
            }),
        )?;
    }
    Ok(())
}
