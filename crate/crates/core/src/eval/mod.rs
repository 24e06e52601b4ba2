//! TREC run files, qrels, and the success@1 / nDCG@k metrics.
//!
//! nDCG uses linear gain, `rel / log2(i + 1)`, as trec_eval's `ndcg_cut`
//! does. A query with no relevant documents scores 0. Query ids are
//! `topic_turn`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::pipeline::TurnResult;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("query {query_id}: {message}")]
    InvalidRun { query_id: String, message: String },
    #[error("no results to emit")]
    EmptyRun,
    #[error("no reports to compare")]
    NoReports,
}

fn io(path: &Path, source: std::io::Error) -> EvalError {
    EvalError::Io { path: path.to_path_buf(), source }
}

pub fn query_id(topic_id: &str, turn_id: u32) -> String {
    format!("{topic_id}_{turn_id}")
}

/// Graded judgments, query id → doc id → grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<String, BTreeMap<String, u32>>,
}

impl Qrels {
    pub fn new(judgments: BTreeMap<String, BTreeMap<String, u32>>) -> Self {
        Qrels { judgments }
    }

    /// Parses `qid 0 docid grade` lines. Blank lines are skipped; a repeated
    /// (qid, docid) pair keeps the last grade.
    pub fn parse(reader: impl BufRead) -> Result<Self, EvalError> {
        let mut judgments: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| EvalError::Parse { line: line_no, message: e.to_string() })?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            let bad = |message: String| EvalError::Parse { line: line_no, message };
            let [qid, _iter, doc, grade] = fields[..] else {
                return Err(bad(format!("expected 4 fields, found {}", fields.len())));
            };
            let grade: u32 = grade.parse().map_err(|_| bad(format!("invalid grade {grade:?}")))?;
            judgments.entry(qid.to_string()).or_default().insert(doc.to_string(), grade);
        }
        Ok(Qrels { judgments })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| io(path, e))?;
        Self::parse(BufReader::new(file))
    }

    pub fn query(&self, query_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.judgments.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }
}

/// `qid Q0 docid rank score tag`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLine {
    pub query_id: String,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

impl RunLine {
    pub fn render(&self) -> String {
        format!("{} Q0 {} {} {} {}", self.query_id, self.doc_id, self.rank, self.score, self.tag)
    }
}

pub fn parse_run(reader: impl BufRead) -> Result<Vec<RunLine>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| EvalError::Parse { line: line_no, message: e.to_string() })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let bad = |message: String| EvalError::Parse { line: line_no, message };
        let [qid, q0, doc, rank, score, tag] = fields[..] else {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        };
        if q0 != "Q0" {
            return Err(bad(format!("expected literal Q0, found {q0:?}")));
        }
        let rank: usize = rank.parse().ok().filter(|r| *r >= 1).ok_or_else(|| bad(format!("invalid rank {rank:?}")))?;
        let score: f64 = score.parse().ok().filter(|s: &f64| s.is_finite()).ok_or_else(|| bad(format!("invalid score {score:?}")))?;
        out.push(RunLine { query_id: qid.to_string(), doc_id: doc.to_string(), rank, score, tag: tag.to_string() });
    }
    Ok(out)
}

pub fn load_run(path: impl AsRef<Path>) -> Result<Vec<RunLine>, EvalError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io(path, e))?;
    parse_run(BufReader::new(file))
}

/// Groups lines by query, each group sorted by rank.
fn group_by_query(lines: &[RunLine]) -> BTreeMap<&str, Vec<&RunLine>> {
    let mut groups: BTreeMap<&str, Vec<&RunLine>> = BTreeMap::new();
    for l in lines {
        groups.entry(l.query_id.as_str()).or_default().push(l);
    }
    for g in groups.values_mut() {
        g.sort_by_key(|l| l.rank);
    }
    groups
}

/// Checks that every query's ranks run 1..n and scores never rise with rank.
pub fn validate_run(lines: &[RunLine]) -> Result<(), EvalError> {
    for (qid, group) in group_by_query(lines) {
        let invalid = |message: String| EvalError::InvalidRun { query_id: qid.to_string(), message };
        for (i, l) in group.iter().enumerate() {
            if l.rank != i + 1 {
                return Err(invalid(format!("ranks not consecutive from 1 (found {} at position {})", l.rank, i + 1)));
            }
        }
        if let Some(w) = group.windows(2).find(|w| w[1].score > w[0].score) {
            return Err(invalid(format!("score rises from rank {} to rank {}", w[0].rank, w[1].rank)));
        }
    }
    Ok(())
}

/// Run lines for every provenance entry, sorted by (qid, rank).
pub fn run_lines(results: &[TurnResult], tag: &str) -> Vec<RunLine> {
    let mut lines: Vec<RunLine> = results
        .iter()
        .flat_map(|r| {
            let qid = query_id(&r.topic_id, r.turn_id);
            r.provenance.iter().map(move |h| RunLine {
                query_id: qid.clone(),
                doc_id: h.passage_id.clone(),
                rank: h.rank,
                score: h.score,
                tag: tag.to_string(),
            })
        })
        .collect();
    lines.sort_by(|a, b| a.query_id.cmp(&b.query_id).then(a.rank.cmp(&b.rank)));
    lines
}

/// Writes a TREC run file. The lines are validated before anything is
/// written.
pub fn emit_run_file(results: &[TurnResult], tag: &str, path: impl AsRef<Path>) -> Result<(), EvalError> {
    let path = path.as_ref();
    if results.is_empty() {
        return Err(EvalError::EmptyRun);
    }
    let lines = run_lines(results, tag);
    validate_run(&lines)?;
    let file = File::create(path).map_err(|e| io(path, e))?;
    let mut out = BufWriter::new(file);
    for l in &lines {
        writeln!(out, "{}", l.render()).map_err(|e| io(path, e))?;
    }
    out.flush().map_err(|e| io(path, e))
}

fn grade(qrels: &BTreeMap<String, u32>, doc: &str) -> u32 {
    qrels.get(doc).copied().unwrap_or(0)
}

pub fn ndcg_at_k<S: AsRef<str>>(ranked: &[S], qrels: &BTreeMap<String, u32>, k: usize) -> f64 {
    let mut ideal: Vec<u32> = qrels.values().copied().filter(|g| *g > 0).collect();
    if ideal.is_empty() || k == 0 {
        return 0.0;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let discount = |i: usize| ((i + 2) as f64).log2();
    let dcg: f64 = ranked.iter().take(k).enumerate().map(|(i, d)| f64::from(grade(qrels, d.as_ref())) / discount(i)).sum();
    let idcg: f64 = ideal.iter().take(k).enumerate().map(|(i, g)| f64::from(*g) / discount(i)).sum();
    dcg / idcg
}

pub fn success_at_1<S: AsRef<str>>(ranked: &[S], qrels: &BTreeMap<String, u32>) -> f64 {
    match ranked.first() {
        Some(d) if grade(qrels, d.as_ref()) >= 1 => 1.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub success_1: f64,
    pub ndcg_cut_5: f64,
    pub ndcg_cut_10: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_query: BTreeMap<String, QueryMetrics>,
    pub mean: QueryMetrics,
    pub evaluated: usize,
    /// Run queries that have no judgments.
    pub skipped: Vec<String>,
}

impl MetricReport {
    /// A report carrying only means, as when quoting published numbers.
    pub fn from_means(success_1: f64, ndcg_cut_5: f64, ndcg_cut_10: f64) -> Self {
        MetricReport { mean: QueryMetrics { success_1, ndcg_cut_5, ndcg_cut_10 }, ..Default::default() }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| EvalError::Parse { line: e.line(), message: e.to_string() })
    }
}

/// Scores every run query that has judgments. Means are plain arithmetic
/// means over the evaluated queries, 0 when there are none.
pub fn evaluate(run: &[RunLine], qrels: &Qrels) -> MetricReport {
    let mut report = MetricReport::default();
    for (qid, group) in group_by_query(run) {
        let Some(judged) = qrels.query(qid) else {
            report.skipped.push(qid.to_string());
            continue;
        };
        let ranked: Vec<&str> = group.iter().map(|l| l.doc_id.as_str()).collect();
        let m = QueryMetrics {
            success_1: success_at_1(&ranked, judged),
            ndcg_cut_5: ndcg_at_k(&ranked, judged, 5),
            ndcg_cut_10: ndcg_at_k(&ranked, judged, 10),
        };
        report.per_query.insert(qid.to_string(), m);
    }
    report.evaluated = report.per_query.len();
    if report.evaluated > 0 {
        let n = report.evaluated as f64;
        let sum = |f: fn(&QueryMetrics) -> f64| report.per_query.values().map(f).sum::<f64>() / n;
        report.mean = QueryMetrics { success_1: sum(|m| m.success_1), ndcg_cut_5: sum(|m| m.ndcg_cut_5), ndcg_cut_10: sum(|m| m.ndcg_cut_10) };
    }
    report
}

/// Text table of mean metrics, one row per run in the given order:
///
/// ```text
/// run    success_1  ndcg_cut_5  ndcg_cut_10
/// run3   0.5341  0.3233  0.3216
/// ```
pub fn compare_runs<S: AsRef<str>>(reports: &[(S, MetricReport)]) -> Result<String, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::NoReports);
    }
    let width = reports.iter().map(|(n, _)| n.as_ref().len()).max().unwrap_or(0).max(3);
    let mut table = format!("{:<width$}  success_1  ndcg_cut_5  ndcg_cut_10\n", "run");
    for (name, r) in reports {
        let m = r.mean;
        let _ = writeln!(table, "{:<width$}  {:.4}  {:.4}  {:.4}", name.as_ref(), m.success_1, m.ndcg_cut_5, m.ndcg_cut_10);
    }
    Ok(table)
}
