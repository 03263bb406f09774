//! JSON bodies of the backend wire protocol.
//!
//! ```text
//! POST /generate        GenerationRequest            -> GenerateResponse
//! POST /generate/batch  {requests: [GenerationRequest]} -> {results: [GenerateResponse]}
//! POST /answer          AnswerRequest                -> AnswerPrediction
//! POST /answer/batch    {requests: [AnswerRequest]}  -> {results: [AnswerPrediction]}
//! POST /classify        ClassifyRequest              -> ClassifyResponse
//! ```
//!
//! Single-item bodies are the domain types themselves:
//! [`GenerationRequest`](super::GenerationRequest) serializes as
//! `{paragraph, span: {start, end}, label, policy, k, p}` and
//! [`AnswerPrediction`](super::AnswerPrediction) as
//! `{answerable, span?: {start, end}, confidence}`.

use serde::{Deserialize, Serialize};

use super::{AnswerPrediction, GeneratedQuestion, GenerationRequest};
use crate::taxonomy::SpecificityLabel;

pub const GENERATE_PATH: &str = "/generate";
pub const GENERATE_BATCH_PATH: &str = "/generate/batch";
pub const ANSWER_PATH: &str = "/answer";
pub const ANSWER_BATCH_PATH: &str = "/answer/batch";
pub const CLASSIFY_PATH: &str = "/classify";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub candidates: Vec<GeneratedQuestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateBatchRequest {
    pub requests: Vec<GenerationRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateBatchResponse {
    pub results: Vec<GenerateResponse>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub paragraph: String,
    pub question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerBatchRequest {
    pub requests: Vec<AnswerRequest>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerBatchResponse {
    pub results: Vec<AnswerPrediction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyRequest {
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyResponse {
    pub labels: Vec<SpecificityLabel>,
}
