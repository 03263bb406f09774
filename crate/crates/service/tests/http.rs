use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use squash_core::backends::mock::MockGenerator;
use squash_core::backends::{DecodeConfig, QuestionAnswerer, QuestionGenerator};
use squash_core::pipeline::{self, BackendConfig, PipelineConfig};
use squash_core::spans::select_spans;
use squash_core::taxonomy::FallbackClassifier;
use squash_core::{BackendError, Paragraph, SpecificityLabel};
use squash_service::{serve, serve_mock_backend, AppState, HttpBackend, ResolvedBackends};

const TEXT: &str = "In 1942, Dodds enlisted in the US army and served as an anti aircraft gunner during World War II.\n\n\
                    Weston was born in Springfield. He later moved to Chicago with his band. In 1990 the band split up.";

/// Starts a server on an ephemeral port in a background runtime.
fn spawn<F, Fut>(make: F) -> SocketAddr
where
    F: FnOnce(tokio::net::TcpListener) -> Fut + Send + 'static,
    Fut: std::future::Future<Output = std::io::Result<()>> + Send + 'static,
{
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            make(listener).await.unwrap();
        });
    });
    rx.recv().unwrap()
}

fn mock_backend(seed: u64) -> String {
    let addr = spawn(move |l| serve_mock_backend(l, seed));
    format!("http://{addr}")
}

fn client(base: &str) -> HttpBackend {
    HttpBackend::new(base, Duration::from_secs(10), 0, 4).unwrap()
}

#[test]
fn http_backends_match_in_process_mocks() {
    let base = mock_backend(5);
    let config = PipelineConfig {
        backend: BackendConfig::all(&base),
        seed: 5,
        ..Default::default()
    };
    let document = pipeline::parse_document(TEXT, &config).unwrap();
    let remote = ResolvedBackends::new(&config.backend, config.seed).unwrap();
    let over_http = pipeline::squash(&document, &config, remote.backends()).unwrap();

    let local_config = PipelineConfig {
        backend: BackendConfig::default(),
        ..config.clone()
    };
    let mocks = pipeline::MockBackends::new(5);
    let local = pipeline::squash(&document, &local_config, mocks.backends()).unwrap();
    assert_eq!(over_http.paragraphs, local.paragraphs);
}

#[test]
fn generate_and_answer_over_the_wire() {
    let base = mock_backend(1);
    let http = client(&base);
    let p = Paragraph::new(0, TEXT.split("\n\n").next().unwrap());
    let spans = select_spans(&p).unwrap();
    let requests: Vec<_> = spans
        .iter()
        .map(|s| DecodeConfig::default().request(&p.text, s))
        .collect();

    let batch = http.generate_batch(&requests).unwrap();
    let local = MockGenerator::new(1);
    for (r, got) in requests.iter().zip(&batch) {
        assert_eq!(got.len(), 13);
        assert_eq!(got, &local.generate(r).unwrap());
    }
    assert_eq!(http.generate(&requests[0]).unwrap(), batch[0]);

    let qs = vec!["who is dodds?".to_string(), "who is gandalf?".to_string()];
    let answers = http.answer_batch(&p.text, &qs).unwrap();
    assert!(answers[0].answerable);
    assert!(!answers[1].answerable);
    assert_eq!(http.answer(&p.text, &qs[0]).unwrap(), answers[0]);

    let labels = http
        .classify(&["what colour is the sky?".into(), "who is dodds?".into()])
        .unwrap();
    assert_eq!(labels, [SpecificityLabel::General, SpecificityLabel::Specific]);
}

#[test]
fn bad_requests_are_not_retried() {
    let base = mock_backend(1);
    let http = HttpBackend::new(&base, Duration::from_secs(10), 3, 1).unwrap();
    let err = http.answer("", "who?").unwrap_err();
    assert!(matches!(err, BackendError::Protocol { .. }), "{err:?}");
}

fn api() -> (String, reqwest::blocking::Client) {
    let state = Arc::new(AppState::new(None, None).unwrap());
    let addr = spawn(move |l| serve(l, state));
    (format!("http://{addr}"), reqwest::blocking::Client::new())
}

fn wait_done(http: &reqwest::blocking::Client, base: &str, id: &str) -> Value {
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        let v: Value = http
            .get(format!("{base}/api/squash/{id}"))
            .send()
            .unwrap()
            .json()
            .unwrap();
        if v["status"] == "done" || v["status"] == "failed" {
            return v;
        }
        assert!(Instant::now() < deadline, "job did not finish");
        std::thread::sleep(Duration::from_millis(20));
    }
}

#[test]
fn job_lifecycle_and_refilter() {
    let (base, http) = api();
    let health: Value = http.get(format!("{base}/api/health")).send().unwrap().json().unwrap();
    assert_eq!(health["status"], "ok");

    let resp = http
        .post(format!("{base}/api/squash"))
        .json(&json!({"document": TEXT, "config": {"seed": 7}}))
        .send()
        .unwrap();
    assert_eq!(resp.status(), 202);
    let id = resp.json::<Value>().unwrap()["id"].as_str().unwrap().to_owned();

    let job = wait_done(&http, &base, &id);
    assert_eq!(job["status"], "done", "{job}");
    let full = &job["result"];
    assert_eq!(full["paragraphs"].as_array().unwrap().len(), 2);

    let local = pipeline::squash_with_mocks(
        TEXT,
        &PipelineConfig {
            seed: 7,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(full["paragraphs"], serde_json::to_value(&local.paragraphs).unwrap());

    let half: Value = http
        .post(format!("{base}/api/squash/{id}/refilter"))
        .json(&json!({"general_fraction": 0.5, "specific_fraction": 0.5}))
        .send()
        .unwrap()
        .json()
        .unwrap();
    let count = |v: &Value| -> usize {
        v["paragraphs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|p| {
                let trees = p["trees"].as_array().unwrap();
                trees.len()
                    + trees
                        .iter()
                        .map(|t| t["children"].as_array().unwrap().len())
                        .sum::<usize>()
                    + p["orphans"].as_array().unwrap().len()
            })
            .sum()
    };
    assert!(count(&half) <= count(full));
    assert_eq!(half["config"]["budget"]["general_fraction"], 0.5);

    let bad = http
        .post(format!("{base}/api/squash/{id}/refilter"))
        .json(&json!({"general_fraction": 0.0}))
        .send()
        .unwrap();
    assert_eq!(bad.status(), 400);
}

#[test]
fn structured_documents_and_errors() {
    let (base, http) = api();
    let resp = http
        .post(format!("{base}/api/squash"))
        .json(&json!({"document": {"title": "T", "paragraphs": ["Ada wrote code in London."]}}))
        .send()
        .unwrap();
    assert_eq!(resp.status(), 202);
    let id = resp.json::<Value>().unwrap()["id"].as_str().unwrap().to_owned();
    assert_eq!(wait_done(&http, &base, &id)["status"], "done");

    let empty = http
        .post(format!("{base}/api/squash"))
        .json(&json!({"document": "  "}))
        .send()
        .unwrap();
    assert_eq!(empty.status(), 400);
    let bad_config = http
        .post(format!("{base}/api/squash"))
        .json(&json!({"document": "Text.", "config": {"budget": {"general_fraction": 2.0}}}))
        .send()
        .unwrap();
    assert_eq!(bad_config.status(), 400);
    assert_eq!(
        http.get(format!("{base}/api/squash/nope")).send().unwrap().status(),
        404
    );
    assert_eq!(
        http.post(format!("{base}/api/squash/nope/refilter"))
            .json(&json!({}))
            .send()
            .unwrap()
            .status(),
        404
    );
}

#[test]
fn unreachable_backend_fails_the_job() {
    let (base, http) = api();
    let resp = http
        .post(format!("{base}/api/squash"))
        .json(&json!({"document": TEXT, "config": {"backend": {
            "generator": "http://127.0.0.1:9", "answerer": "http://127.0.0.1:9",
            "classifier": "mock", "retries": 0, "timeout_ms": 500}}}))
        .send()
        .unwrap();
    let id = resp.json::<Value>().unwrap()["id"].as_str().unwrap().to_owned();
    let job = wait_done(&http, &base, &id);
    assert_eq!(job["status"], "failed");
    assert!(job["error"].as_str().unwrap().contains("127.0.0.1:9"));
    let refilter = http
        .post(format!("{base}/api/squash/{id}/refilter"))
        .json(&json!({}))
        .send()
        .unwrap();
    assert_eq!(refilter.status(), 409);
}

#[test]
fn jobs_survive_restart_with_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let state = Arc::new(AppState::new(Some(dir.path().to_owned()), None).unwrap());
    let addr = spawn(move |l| serve(l, state));
    let base = format!("http://{addr}");
    let http = reqwest::blocking::Client::new();
    let id = http
        .post(format!("{base}/api/squash"))
        .json(&json!({"document": TEXT}))
        .send()
        .unwrap()
        .json::<Value>()
        .unwrap()["id"]
        .as_str()
        .unwrap()
        .to_owned();
    let before = wait_done(&http, &base, &id);

    let reloaded = AppState::new(Some(dir.path().to_owned()), None).unwrap();
    let job = reloaded.get(&id).unwrap();
    let run = job.run.as_ref().unwrap();
    let rendered = pipeline::render(run, &job.config, &job.config.budget).unwrap();
    assert_eq!(serde_json::to_value(&rendered).unwrap(), before["result"]);
}
