//! Question-generation and question-answering backends.
//!
//! Backends implement the raw [`QuestionGenerator`] / [`QuestionAnswerer`]
//! traits. The free functions [`generate`] and [`answer`] wrap a backend
//! call and enforce the protocol contract: candidate counts per decode
//! policy, finite scores, in-paragraph answer spans.

pub mod mock;
pub mod wire;

use serde::{Deserialize, Serialize};

use crate::error::BackendError;
use crate::spans::AnswerSpanCandidate;
use crate::taxonomy::SpecificityLabel;
use crate::text::{CharIndex, CharSpan};

pub const BEAM_WIDTH: usize = 3;
pub const SAMPLED_CANDIDATES: usize = 10;
pub const DEFAULT_TOP_K: u32 = 10;
pub const DEFAULT_TOP_P: f64 = 0.9;

type BackendResult<T> = std::result::Result<T, BackendError>;

/// How a backend decodes questions for one span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DecodePolicy {
    /// Beam search (width 3) plus 10 top-k samples: 13 candidates.
    Overgenerate,
    /// One nucleus-sampled candidate.
    Single,
}

impl DecodePolicy {
    pub fn max_beam(&self) -> usize {
        match self {
            Self::Overgenerate => BEAM_WIDTH,
            Self::Single => 0,
        }
    }

    pub fn max_sampled(&self) -> usize {
        match self {
            Self::Overgenerate => SAMPLED_CANDIDATES,
            Self::Single => 1,
        }
    }

    pub fn expected_candidates(&self) -> usize {
        match self {
            Self::Overgenerate => BEAM_WIDTH + SAMPLED_CANDIDATES,
            Self::Single => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub paragraph: String,
    pub span: CharSpan,
    pub label: SpecificityLabel,
    pub policy: DecodePolicy,
    pub k: u32,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Origin {
    Beam,
    Sampled,
}

/// One question as a backend returns it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub question: String,
    pub origin: Origin,
    /// Log-probability-like; higher is better.
    pub score: f64,
}

/// A generated question tied to the span it was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionCandidate {
    pub question: String,
    pub origin: Origin,
    pub score: f64,
    pub source: AnswerSpanCandidate,
}

impl QuestionCandidate {
    pub fn target(&self) -> SpecificityLabel {
        self.source.target
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerPrediction {
    pub answerable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<CharSpan>,
    pub confidence: f64,
}

impl AnswerPrediction {
    pub fn unanswerable() -> Self {
        Self {
            answerable: false,
            span: None,
            confidence: 0.0,
        }
    }

    pub fn answered(span: CharSpan, confidence: f64) -> Self {
        Self {
            answerable: true,
            span: Some(span),
            confidence,
        }
    }
}

pub trait QuestionGenerator: Send + Sync {
    fn generate(&self, request: &GenerationRequest) -> BackendResult<Vec<GeneratedQuestion>>;

    fn generate_batch(&self, requests: &[GenerationRequest]) -> BackendResult<Vec<Vec<GeneratedQuestion>>> {
        requests.iter().map(|r| self.generate(r)).collect()
    }
}

pub trait QuestionAnswerer: Send + Sync {
    fn answer(&self, paragraph: &str, question: &str) -> BackendResult<AnswerPrediction>;

    fn answer_batch(&self, paragraph: &str, questions: &[String]) -> BackendResult<Vec<AnswerPrediction>> {
        questions.iter().map(|q| self.answer(paragraph, q)).collect()
    }
}

/// Decoding parameters applied to every generation request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    pub policy: DecodePolicy,
    pub k: u32,
    pub p: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            policy: DecodePolicy::Overgenerate,
            k: DEFAULT_TOP_K,
            p: DEFAULT_TOP_P,
        }
    }
}

impl DecodeConfig {
    pub fn request(&self, paragraph: &str, source: &AnswerSpanCandidate) -> GenerationRequest {
        GenerationRequest {
            paragraph: paragraph.to_owned(),
            span: source.span,
            label: source.target,
            policy: self.policy,
            k: self.k,
            p: self.p,
        }
    }
}

pub fn check_request(request: &GenerationRequest) -> BackendResult<()> {
    let len = request.paragraph.chars().count();
    if request.span.is_empty() || request.span.end > len {
        return Err(BackendError::InvalidRequest(format!(
            "span {}..{} outside paragraph of {len} chars",
            request.span.start, request.span.end
        )));
    }
    if request.label == SpecificityLabel::Yesno {
        return Err(BackendError::InvalidRequest("YESNO is not a generation target".into()));
    }
    if request.k == 0 || !(request.p > 0.0 && request.p <= 1.0) {
        return Err(BackendError::InvalidRequest(format!(
            "bad sampling parameters k={} p={}",
            request.k, request.p
        )));
    }
    Ok(())
}

/// Checks a generation reply against the decode policy.
pub fn check_reply(endpoint: &str, policy: DecodePolicy, reply: &[GeneratedQuestion]) -> BackendResult<()> {
    let protocol = |message: String| BackendError::Protocol {
        endpoint: endpoint.to_owned(),
        message,
    };
    let beams = reply.iter().filter(|c| c.origin == Origin::Beam).count();
    let sampled = reply.len() - beams;
    if reply.len() != policy.expected_candidates() || beams > policy.max_beam() || sampled > policy.max_sampled() {
        return Err(protocol(format!(
            "{policy:?} expects {} candidates (≤{} beam, ≤{} sampled), got {beams} beam + {sampled} sampled",
            policy.expected_candidates(),
            policy.max_beam(),
            policy.max_sampled()
        )));
    }
    if let Some(c) = reply.iter().find(|c| !c.score.is_finite()) {
        return Err(protocol(format!("non-finite score for {:?}", c.question)));
    }
    if reply.iter().any(|c| c.question.trim().is_empty()) {
        return Err(protocol("empty question text".into()));
    }
    Ok(())
}

/// Generates candidates for one span and ties them to it.
pub fn generate(
    backend: &dyn QuestionGenerator,
    paragraph: &str,
    source: &AnswerSpanCandidate,
    decode: &DecodeConfig,
) -> BackendResult<Vec<QuestionCandidate>> {
    let request = decode.request(paragraph, source);
    check_request(&request)?;
    let reply = backend.generate(&request)?;
    check_reply("generate", decode.policy, &reply)?;
    Ok(attach(reply, source))
}

pub fn attach(reply: Vec<GeneratedQuestion>, source: &AnswerSpanCandidate) -> Vec<QuestionCandidate> {
    reply
        .into_iter()
        .map(|g| QuestionCandidate {
            question: g.question,
            origin: g.origin,
            score: g.score,
            source: *source,
        })
        .collect()
}

pub fn check_prediction(endpoint: &str, paragraph_chars: usize, p: &AnswerPrediction) -> BackendResult<()> {
    let protocol = |message: String| BackendError::Protocol {
        endpoint: endpoint.to_owned(),
        message,
    };
    if !(p.confidence.is_finite() && (0.0..=1.0).contains(&p.confidence)) {
        return Err(protocol(format!("confidence {} outside [0,1]", p.confidence)));
    }
    match (p.answerable, p.span) {
        (true, Some(s)) if !s.is_empty() && s.end <= paragraph_chars => Ok(()),
        (true, Some(s)) => Err(protocol(format!(
            "answer span {}..{} invalid for paragraph of {paragraph_chars} chars",
            s.start, s.end
        ))),
        (true, None) => Err(protocol("answerable prediction without a span".into())),
        (false, Some(_)) => Err(protocol("unanswerable prediction with a span".into())),
        (false, None) => Ok(()),
    }
}

/// Answers a batch of questions over one paragraph, checking every reply.
pub fn answer(
    backend: &dyn QuestionAnswerer,
    paragraph: &str,
    questions: &[String],
) -> BackendResult<Vec<AnswerPrediction>> {
    if paragraph.trim().is_empty() {
        return Err(BackendError::InvalidRequest("paragraph is empty".into()));
    }
    if questions.iter().any(|q| q.trim().is_empty()) {
        return Err(BackendError::InvalidRequest("question is empty".into()));
    }
    if questions.is_empty() {
        return Ok(Vec::new());
    }
    let predictions = backend.answer_batch(paragraph, questions)?;
    if predictions.len() != questions.len() {
        return Err(BackendError::Protocol {
            endpoint: "answer".into(),
            message: format!("expected {} predictions, got {}", questions.len(), predictions.len()),
        });
    }
    let chars = CharIndex::new(paragraph).char_len();
    for p in &predictions {
        check_prediction("answer", chars, p)?;
    }
    Ok(predictions)
}
