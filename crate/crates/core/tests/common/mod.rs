#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};
use std::thread::JoinHandle;

use grg_core::corpus::{load_corpus, load_labeled, load_topics, Topic};
use grg_core::embedding::HashedLexicalEmbedder;
use grg_core::genai::{ProviderConfig, ScriptedMock};
use grg_core::index::{IndexBundle, IndexConfig};
use grg_core::pipeline::{write_run_dir, Pipeline, Preset, Providers, RunConfig, RunOutput};
use grg_core::quality::{FilterConfig, QualityFilter};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn bundle(corpus: &str) -> IndexBundle {
    IndexBundle::build(load_corpus(fixture(corpus)).unwrap(), IndexConfig::default()).unwrap()
}

pub fn topics() -> Vec<Topic> {
    load_topics(fixture("topics.json")).unwrap()
}

/// The filter trained on the shipped fixture, trained once per test binary.
pub fn filter() -> QualityFilter {
    static TRAINED: OnceLock<QualityFilter> = OnceLock::new();
    TRAINED
        .get_or_init(|| {
            let docs = load_labeled(fixture("quality_train.jsonl")).unwrap();
            QualityFilter::fit(&docs, &FilterConfig::default()).unwrap().0
        })
        .clone()
}

pub fn mock_providers() -> Providers {
    let mock = Arc::new(ScriptedMock::load(fixture("mock_script.json")).unwrap());
    Providers {
        answerer: mock.clone(),
        answer_cfg: ProviderConfig::default(),
        summarizer: mock,
        summary_cfg: ProviderConfig::default(),
        embedder: Arc::new(HashedLexicalEmbedder::new(384)),
    }
}

/// Runs a preset over the fixture topics with scripted providers.
pub fn run_preset(preset: Preset, corpus: &str, parallelism: usize) -> RunOutput {
    let cfg = RunConfig::preset(preset);
    let providers = mock_providers();
    let bundle = bundle(corpus);
    let filter = filter();
    let pipeline = Pipeline::new(&cfg, &providers, &bundle, Some(&filter)).unwrap();
    pipeline.run_topics(&topics(), parallelism).unwrap()
}

/// Runs a preset and writes its output directory, returning the directory.
pub fn run_to_dir(preset: Preset, corpus: &str, parallelism: usize) -> tempfile::TempDir {
    let out = run_preset(preset, corpus, parallelism);
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::preset(preset);
    write_run_dir(dir.path(), &cfg, &cfg.run_tag, &out).unwrap();
    dir
}

/// Every file in a directory, name → bytes, sorted by name.
pub fn dir_contents(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// A recorded request to the stub server.
#[derive(Debug, Clone)]
pub struct StubRequest {
    pub path: String,
    pub body: String,
}

/// A one-thread HTTP server that answers `responses.len()` requests in order
/// with the given status and body, recording what it received.
pub struct StubServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<StubRequest>>>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(responses: Vec<(u16, String)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let seen = requests.clone();
        let handle = std::thread::spawn(move || {
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                reader.read_line(&mut request_line).unwrap();
                let path = request_line.split_whitespace().nth(1).unwrap_or_default().to_string();
                let mut length = 0usize;
                loop {
                    let mut header = String::new();
                    reader.read_line(&mut header).unwrap();
                    let header = header.trim_end();
                    if header.is_empty() {
                        break;
                    }
                    if let Some((name, value)) = header.split_once(':') {
                        if name.eq_ignore_ascii_case("content-length") {
                            length = value.trim().parse().unwrap();
                        }
                    }
                }
                let mut buf = vec![0; length];
                reader.read_exact(&mut buf).unwrap();
                seen.lock().unwrap().push(StubRequest { path, body: String::from_utf8(buf).unwrap() });
                let reply = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
        });
        StubServer { url, requests, handle: Some(handle) }
    }

    pub fn finish(mut self) -> Vec<StubRequest> {
        self.handle.take().unwrap().join().unwrap();
        self.requests.lock().unwrap().clone()
    }
}

pub mod oracle;
