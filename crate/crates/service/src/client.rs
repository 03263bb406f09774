//! Blocking HTTP clients for remote backends.
//!
//! One [`HttpBackend`] talks to one base URL and implements all three
//! backend traits. Requests time out, transport failures and 5xx/429
//! replies are retried with exponential backoff, and a per-client gate
//! caps the number of requests in flight.
//!
//! The clients block. Inside an async runtime, call them from
//! `spawn_blocking`.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use squash_core::backends::mock::{MockAnswerer, MockGenerator};
use squash_core::backends::wire::{
    AnswerBatchRequest, AnswerBatchResponse, AnswerRequest, ClassifyRequest, ClassifyResponse, GenerateBatchRequest,
    GenerateBatchResponse, GenerateResponse, ANSWER_BATCH_PATH, ANSWER_PATH, CLASSIFY_PATH, GENERATE_BATCH_PATH,
    GENERATE_PATH,
};
use squash_core::backends::{
    AnswerPrediction, GeneratedQuestion, GenerationRequest, QuestionAnswerer, QuestionGenerator,
};
use squash_core::pipeline::{BackendConfig, Backends, MOCK};
use squash_core::taxonomy::{FallbackClassifier, HeuristicFallback, SpecificityLabel};
use squash_core::BackendError;

type BackendResult<T> = std::result::Result<T, BackendError>;

const BACKOFF_BASE: Duration = Duration::from_millis(100);

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone)]
pub struct HttpBackend {
    base: String,
    client: reqwest::blocking::Client,
    retries: u32,
    gate: Arc<Gate>,
}

impl HttpBackend {
    pub fn new(base: &str, timeout: Duration, retries: u32, max_in_flight: usize) -> BackendResult<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::InvalidRequest(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            base: base.trim_end_matches('/').to_owned(),
            client,
            retries,
            gate: Arc::new(Gate::new(max_in_flight)),
        })
    }

    pub fn from_config(base: &str, config: &BackendConfig) -> BackendResult<Self> {
        Self::new(
            base,
            Duration::from_millis(config.timeout_ms),
            config.retries,
            config.max_in_flight,
        )
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, path: &str, body: &Req) -> BackendResult<Resp> {
        let endpoint = format!("{}{}", self.base, path);
        let _permit = self.gate.acquire();
        let mut attempt = 0;
        loop {
            attempt += 1;
            let failure = match self.client.post(&endpoint).json(body).send() {
                Ok(resp) if resp.status().is_success() => {
                    return resp.json::<Resp>().map_err(|e| BackendError::Protocol {
                        endpoint: endpoint.clone(),
                        message: format!("undecodable reply: {e}"),
                    });
                }
                Ok(resp) => {
                    let status = resp.status();
                    let text = resp.text().unwrap_or_default();
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        return Err(BackendError::Protocol {
                            endpoint,
                            message: format!("HTTP {status}: {text}"),
                        });
                    }
                    format!("HTTP {status}: {text}")
                }
                Err(e) => e.to_string(),
            };
            if attempt > self.retries {
                return Err(BackendError::Transport {
                    endpoint,
                    attempts: attempt,
                    retryable: true,
                    message: failure,
                });
            }
            tracing::debug!(%endpoint, attempt, %failure, "retrying backend request");
            std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempt - 1));
        }
    }
}

impl QuestionGenerator for HttpBackend {
    fn generate(&self, request: &GenerationRequest) -> BackendResult<Vec<GeneratedQuestion>> {
        let r: GenerateResponse = self.post(GENERATE_PATH, request)?;
        Ok(r.candidates)
    }

    fn generate_batch(&self, requests: &[GenerationRequest]) -> BackendResult<Vec<Vec<GeneratedQuestion>>> {
        let body = GenerateBatchRequest {
            requests: requests.to_vec(),
        };
        let r: GenerateBatchResponse = self.post(GENERATE_BATCH_PATH, &body)?;
        Ok(r.results.into_iter().map(|g| g.candidates).collect())
    }
}

impl QuestionAnswerer for HttpBackend {
    fn answer(&self, paragraph: &str, question: &str) -> BackendResult<AnswerPrediction> {
        let body = AnswerRequest {
            paragraph: paragraph.to_owned(),
            question: question.to_owned(),
        };
        self.post(ANSWER_PATH, &body)
    }

    fn answer_batch(&self, paragraph: &str, questions: &[String]) -> BackendResult<Vec<AnswerPrediction>> {
        let body = AnswerBatchRequest {
            requests: questions
                .iter()
                .map(|q| AnswerRequest {
                    paragraph: paragraph.to_owned(),
                    question: q.clone(),
                })
                .collect(),
        };
        let r: AnswerBatchResponse = self.post(ANSWER_BATCH_PATH, &body)?;
        Ok(r.results)
    }
}

impl FallbackClassifier for HttpBackend {
    fn classify(&self, questions: &[String]) -> BackendResult<Vec<SpecificityLabel>> {
        let body = ClassifyRequest {
            questions: questions.to_vec(),
        };
        let r: ClassifyResponse = self.post(CLASSIFY_PATH, &body)?;
        Ok(r.labels)
    }
}

/// Backends resolved from a [`BackendConfig`]: mocks or HTTP clients.
pub struct ResolvedBackends {
    generator: Box<dyn QuestionGenerator>,
    answerer: Box<dyn QuestionAnswerer>,
    classifier: Box<dyn FallbackClassifier>,
}

impl ResolvedBackends {
    pub fn new(config: &BackendConfig, seed: u64) -> BackendResult<Self> {
        let http = |base: &str| HttpBackend::from_config(base, config);
        Ok(Self {
            generator: match config.generator.as_str() {
                MOCK => Box::new(MockGenerator::new(seed)),
                url => Box::new(http(url)?),
            },
            answerer: match config.answerer.as_str() {
                MOCK => Box::new(MockAnswerer),
                url => Box::new(http(url)?),
            },
            classifier: match config.classifier.as_str() {
                MOCK => Box::new(HeuristicFallback),
                url => Box::new(http(url)?),
            },
        })
    }

    pub fn backends(&self) -> Backends<'_> {
        Backends {
            generator: self.generator.as_ref(),
            answerer: self.answerer.as_ref(),
        }
    }

    pub fn classifier(&self) -> &dyn FallbackClassifier {
        self.classifier.as_ref()
    }
}
