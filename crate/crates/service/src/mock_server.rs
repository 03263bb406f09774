//! The mock backends served over the wire protocol, for exercising the HTTP
//! clients and for running the service without models.

use std::sync::Arc;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::json;

use squash_core::backends::mock::{MockAnswerer, MockGenerator};
use squash_core::backends::wire::{
    AnswerBatchRequest, AnswerBatchResponse, AnswerRequest, ClassifyRequest, ClassifyResponse, GenerateBatchRequest,
    GenerateBatchResponse, GenerateResponse, ANSWER_BATCH_PATH, ANSWER_PATH, CLASSIFY_PATH, GENERATE_BATCH_PATH,
    GENERATE_PATH,
};
use squash_core::backends::{GenerationRequest, QuestionAnswerer, QuestionGenerator};
use squash_core::taxonomy::{FallbackClassifier, HeuristicFallback};
use squash_core::BackendError;

struct Mocks {
    generator: MockGenerator,
    answerer: MockAnswerer,
}

fn reject(e: BackendError) -> Response {
    let status = match e {
        BackendError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (status, Json(json!({"error": e.to_string()}))).into_response()
}

async fn generate(State(m): State<Arc<Mocks>>, Json(r): Json<GenerationRequest>) -> Response {
    match m.generator.generate(&r) {
        Ok(candidates) => Json(GenerateResponse { candidates }).into_response(),
        Err(e) => reject(e),
    }
}

async fn generate_batch(State(m): State<Arc<Mocks>>, Json(r): Json<GenerateBatchRequest>) -> Response {
    match m.generator.generate_batch(&r.requests) {
        Ok(results) => Json(GenerateBatchResponse {
            results: results
                .into_iter()
                .map(|candidates| GenerateResponse { candidates })
                .collect(),
        })
        .into_response(),
        Err(e) => reject(e),
    }
}

async fn answer(State(m): State<Arc<Mocks>>, Json(r): Json<AnswerRequest>) -> Response {
    match m.answerer.answer(&r.paragraph, &r.question) {
        Ok(p) => Json(p).into_response(),
        Err(e) => reject(e),
    }
}

async fn answer_batch(State(m): State<Arc<Mocks>>, Json(r): Json<AnswerBatchRequest>) -> Response {
    let mut results = Vec::with_capacity(r.requests.len());
    for q in &r.requests {
        match m.answerer.answer(&q.paragraph, &q.question) {
            Ok(p) => results.push(p),
            Err(e) => return reject(e),
        }
    }
    Json(AnswerBatchResponse { results }).into_response()
}

async fn classify(Json(r): Json<ClassifyRequest>) -> Response {
    match HeuristicFallback.classify(&r.questions) {
        Ok(labels) => Json(ClassifyResponse { labels }).into_response(),
        Err(e) => reject(e),
    }
}

pub fn mock_backend_router(seed: u64) -> Router {
    let mocks = Arc::new(Mocks {
        generator: MockGenerator::new(seed),
        answerer: MockAnswerer,
    });
    Router::new()
        .route(GENERATE_PATH, post(generate))
        .route(GENERATE_BATCH_PATH, post(generate_batch))
        .route(ANSWER_PATH, post(answer))
        .route(ANSWER_BATCH_PATH, post(answer_batch))
        .route(CLASSIFY_PATH, post(classify))
        .with_state(mocks)
}
