use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use grg_core::corpus::{load_corpus, load_labeled, load_topics, load_wikitext};
use grg_core::embedding::{build_embedder, EmbeddingProviderConfig};
use grg_core::eval::{compare_runs, evaluate, load_run, MetricReport, Qrels};
use grg_core::genai::trace::{check_trace, read_trace, TraceEvent};
use grg_core::genai::{build_chat_provider, CallRole, ProviderConfig, ScriptedMock};
use grg_core::index::{load_index, save_index, IndexBundle, IndexConfig};
use grg_core::pipeline::{write_run_dir, Pipeline, Preset, Providers, RunConfig};
use grg_core::quality::{FilterConfig, QualityFilter, TrainConfig};
use serde::Serialize;

use crate::args::{ChatKind, CompareArgs, EmbedKind, EvalArgs, IndexArgs, RunArgs, TraceArgs, TrainFilterArgs};

/// Exit code for turns that failed at a model or embedding endpoint.
pub const PROVIDER_FAILURE: u8 = 2;

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.with_context(|| format!("missing --{flag}"))
}

pub fn index(args: IndexArgs, out: &mut impl Write) -> Result<ExitCode> {
    let corpus = required(args.corpus, "corpus")?;
    let path = required(args.out, "out")?;
    let defaults = IndexConfig::default();
    let cfg = IndexConfig { k1: args.k1.unwrap_or(defaults.k1), b: args.b.unwrap_or(defaults.b), ..defaults };
    let passages = load_corpus(&corpus).with_context(|| format!("loading corpus {}", corpus.display()))?;
    let bundle = IndexBundle::build(passages, cfg)?;
    save_index(&bundle, &path)?;
    let idx = &bundle.index;
    writeln!(out, "docs={} vocab={} avgdl={:.4}", idx.doc_count(), idx.vocabulary_size(), idx.avg_doc_length())?;
    Ok(ExitCode::SUCCESS)
}

pub fn train_filter(args: TrainFilterArgs, out: &mut impl Write) -> Result<ExitCode> {
    let data = required(args.data, "data")?;
    let path = required(args.out, "out")?;
    let defaults = FilterConfig::default();
    let cfg = FilterConfig {
        max_features: args.max_features.unwrap_or(defaults.max_features),
        train: TrainConfig {
            learning_rate: args.learning_rate.unwrap_or(defaults.train.learning_rate),
            epochs: args.epochs.unwrap_or(defaults.train.epochs),
            l2_lambda: args.l2_lambda.unwrap_or(defaults.train.l2_lambda),
        },
        ..defaults
    };
    let mut docs = load_labeled(&data).with_context(|| format!("loading training data {}", data.display()))?;
    if let Some(w) = &args.wikitext {
        docs.extend(load_wikitext(w).with_context(|| format!("loading wikitext {}", w.display()))?);
    }
    let (filter, report) = QualityFilter::fit(&docs, &cfg)?;
    filter.save(&path)?;
    writeln!(
        out,
        "docs={} vocab={} accuracy={:.4} loss={:.6}",
        docs.len(),
        filter.vectorizer().num_features(),
        filter.accuracy(&docs),
        report.loss_history.last().copied().unwrap_or(f64::NAN)
    )?;
    Ok(ExitCode::SUCCESS)
}

/// Everything that determines a run's output, written to
/// `config.resolved.json`. The output directory and thread count are left
/// out since neither changes the results.
#[derive(Debug, Serialize)]
pub struct ResolvedRun {
    pub preset: Preset,
    pub topics: PathBuf,
    pub index: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub filter_model: Option<PathBuf>,
    pub pipeline: RunConfig,
    pub answer: ProviderConfig,
    pub summary: ProviderConfig,
    pub embedding: EmbeddingProviderConfig,
}

fn chat_config(kind: Option<ChatKind>, url: Option<String>, script: Option<PathBuf>, args: &RunArgs) -> ProviderConfig {
    let defaults = ProviderConfig::default();
    ProviderConfig {
        kind: kind.map_or(defaults.kind, Into::into),
        endpoint_url: url,
        script_path: script,
        context_budget_tokens: args.context_budget.unwrap_or(defaults.context_budget_tokens),
        timeout_ms: args.timeout_ms.unwrap_or(defaults.timeout_ms),
        ..defaults
    }
}

pub fn resolve_run(args: RunArgs) -> Result<(ResolvedRun, PathBuf, usize)> {
    let preset = required(args.preset, "preset")?;
    let mut pipeline = RunConfig::preset(preset);
    if let Some(tag) = &args.run_tag {
        pipeline.run_tag = tag.clone();
    }
    pipeline.ptkb_threshold = args.ptkb_threshold.unwrap_or(pipeline.ptkb_threshold);
    pipeline.top_k_retrieve = args.top_k_retrieve.unwrap_or(pipeline.top_k_retrieve);
    pipeline.top_n_passages = args.top_n_passages.unwrap_or(pipeline.top_n_passages);
    pipeline.validate()?;

    let answer = chat_config(args.answer_kind, args.answer_url.clone(), args.answer_script.clone(), &args);
    let summary_script = args.summary_script.clone().or_else(|| args.answer_script.clone());
    let summary = chat_config(args.summary_kind, args.summary_url.clone(), summary_script, &args);
    let ed = EmbeddingProviderConfig::default();
    let embedding = EmbeddingProviderConfig {
        kind: args.embed_kind.unwrap_or(EmbedKind::HashedLexical).into(),
        endpoint_url: args.embed_url.clone(),
        dimension: args.embed_dimension.unwrap_or(ed.dimension),
        timeout_ms: args.timeout_ms.unwrap_or(ed.timeout_ms),
        ..ed
    };
    let resolved = ResolvedRun {
        preset,
        topics: required(args.topics, "topics")?,
        index: required(args.index, "index")?,
        filter_model: args.filter_model,
        pipeline,
        answer,
        summary,
        embedding,
    };
    let out = required(args.out, "out")?;
    let parallel = args.parallel.unwrap_or(1);
    if parallel == 0 {
        bail!("--parallel must be at least 1");
    }
    Ok((resolved, out, parallel))
}

pub fn run(args: RunArgs, out: &mut impl Write, err: &mut impl Write) -> Result<ExitCode> {
    let (resolved, dir, parallel) = resolve_run(args)?;
    if resolved.pipeline.use_quality_filter && resolved.filter_model.is_none() {
        bail!("preset requires quality filter: {} needs --filter-model", resolved.preset);
    }
    let topics = load_topics(&resolved.topics).with_context(|| format!("loading topics {}", resolved.topics.display()))?;
    let bundle = load_index(&resolved.index).with_context(|| format!("loading index {}", resolved.index.display()))?;
    let filter = match &resolved.filter_model {
        Some(p) if resolved.pipeline.use_quality_filter => {
            Some(QualityFilter::load(p).with_context(|| format!("loading filter model {}", p.display()))?)
        }
        _ => None,
    };
    let providers = Providers {
        answerer: build_chat_provider(&resolved.answer).context("answer provider")?,
        answer_cfg: resolved.answer.clone(),
        summarizer: build_chat_provider(&resolved.summary).context("summary provider")?,
        summary_cfg: resolved.summary.clone(),
        embedder: Arc::from(build_embedder(&resolved.embedding)?),
    };
    let pipeline = Pipeline::new(&resolved.pipeline, &providers, &bundle, filter.as_ref())?;
    let output = pipeline.run_topics(&topics, parallel)?;
    write_run_dir(&dir, &resolved, &resolved.pipeline.run_tag, &output)?;
    writeln!(out, "turns={} errors={} out={}", output.turns.len(), output.errors.len(), dir.display())?;
    for e in &output.errors {
        writeln!(err, "error: {e}")?;
    }
    Ok(if output.errors.iter().any(|e| e.error.is_provider_failure()) {
        ExitCode::from(PROVIDER_FAILURE)
    } else if output.errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub fn eval(args: EvalArgs, out: &mut impl Write, err: &mut impl Write) -> Result<ExitCode> {
    let run_path = required(args.run, "run")?;
    let qrels_path = required(args.qrels, "qrels")?;
    let run = load_run(&run_path).with_context(|| format!("run file {}", run_path.display()))?;
    let qrels = Qrels::load(&qrels_path).with_context(|| format!("qrels file {}", qrels_path.display()))?;
    let report = evaluate(&run, &qrels);
    if report.evaluated == 0 {
        writeln!(err, "warning: no run query has judgments; all {} queries skipped", report.skipped.len())?;
    } else if !report.skipped.is_empty() {
        writeln!(err, "warning: {} queries without judgments skipped: {}", report.skipped.len(), report.skipped.join(" "))?;
    }
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(p) => std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?,
        None => writeln!(out, "{json}")?,
    }
    write!(out, "{}", compare_runs(&[(stem(&run_path), report)])?)?;
    Ok(ExitCode::SUCCESS)
}

pub fn compare(args: CompareArgs, out: &mut impl Write) -> Result<ExitCode> {
    let paths = required(args.reports, "reports")?;
    let reports = paths
        .iter()
        .map(|p| Ok((stem(p), MetricReport::load(p).with_context(|| format!("report {}", p.display()))?)))
        .collect::<Result<Vec<_>>>()?;
    write!(out, "{}", compare_runs(&reports)?)?;
    Ok(ExitCode::SUCCESS)
}

pub fn trace(args: TraceArgs, out: &mut impl Write, err: &mut impl Write) -> Result<ExitCode> {
    let path = required(args.file, "file")?;
    let file = std::fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let events = read_trace(std::io::BufReader::new(file))
        .map_err(anyhow::Error::msg)
        .with_context(|| format!("trace {}", path.display()))?;
    let budget = args.budget.unwrap_or(ProviderConfig::default().context_budget_tokens);
    let violations = check_trace(&events, budget);
    let (mut calls, mut summaries) = (0, 0);
    for e in &events {
        if let TraceEvent::Call { role, .. } = e {
            calls += 1;
            summaries += usize::from(matches!(role, CallRole::Summary { .. }));
        }
    }
    writeln!(out, "calls={calls} summaries={summaries} violations={}", violations.len())?;
    for v in &violations {
        writeln!(err, "violation: {v}")?;
    }
    if let Some(p) = &args.export_script {
        let script = ScriptedMock::from_trace(&events);
        let json = serde_json::to_string_pretty(script.script())? + "\n";
        std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
