//! Job API.
//!
//! ```text
//! POST /api/squash               {document, config?}  -> 202 {id, status}
//! GET  /api/squash/{id}          -> {id, status, error?, result?}
//! POST /api/squash/{id}/refilter BudgetConfig         -> SquashOutput
//! GET  /api/health               -> {status, version}
//! ```
//!
//! `document` is raw text (blank-line paragraphs) or `{title?, paragraphs}`.
//! Finished runs are stored unbudgeted so a refilter only reapplies the
//! budget. With a data directory every job is also written to
//! `<dir>/<id>.json` and reloaded on startup.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use squash_core::budget::BudgetConfig;
use squash_core::pipeline::{self, BackendConfig, PipelineConfig, SquashOutput, SquashRun, VERSION};
use squash_core::text::{DocumentInput, Segmenter};
use squash_core::{Document, Error as CoreError};

use crate::client::ResolvedBackends;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: PipelineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<SquashRun>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum DocumentBody {
    Text(String),
    Structured(DocumentInput),
}

#[derive(Debug, Deserialize)]
pub struct SubmitRequest {
    pub document: DocumentBody,
    #[serde(default)]
    pub config: Option<PipelineConfig>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JobView {
    pub id: String,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<SquashOutput>,
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("job {0} not found")]
    NotFound(String),
    #[error("job {0} is {1:?}, not done")]
    NotReady(String, JobStatus),
    #[error("{0}")]
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self {
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::NotReady(..) => StatusCode::CONFLICT,
            Self::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({"error": self.to_string()}))).into_response()
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidInput(_) | CoreError::InvalidConfig(_) | CoreError::Parse { .. } => {
                Self::BadRequest(e.to_string())
            }
            other => Self::Internal(other.to_string()),
        }
    }
}

/// Job store. Records are immutable snapshots replaced wholesale, so
/// readers only hold the lock long enough to clone an `Arc`.
pub struct AppState {
    jobs: RwLock<HashMap<String, Arc<JobRecord>>>,
    data_dir: Option<PathBuf>,
    default_backend: Option<String>,
}

impl AppState {
    /// Opens the store, reloading persisted jobs from `data_dir`.
    pub fn new(data_dir: Option<PathBuf>, default_backend: Option<String>) -> std::io::Result<Self> {
        let mut jobs = HashMap::new();
        if let Some(dir) = &data_dir {
            std::fs::create_dir_all(dir)?;
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.extension().is_none_or(|e| e != "json") {
                    continue;
                }
                match std::fs::read_to_string(&path).map(|t| serde_json::from_str::<JobRecord>(&t)) {
                    Ok(Ok(mut job)) => {
                        if matches!(job.status, JobStatus::Pending | JobStatus::Running) {
                            job.status = JobStatus::Failed;
                            job.error = Some("interrupted by restart".into());
                        }
                        jobs.insert(job.id.clone(), Arc::new(job));
                    }
                    _ => tracing::warn!(path = %path.display(), "skipping unreadable job file"),
                }
            }
        }
        Ok(Self {
            jobs: RwLock::new(jobs),
            data_dir,
            default_backend,
        })
    }

    pub fn get(&self, id: &str) -> Option<Arc<JobRecord>> {
        self.jobs.read().expect("job store lock").get(id).cloned()
    }

    fn put(&self, job: JobRecord) {
        if let Some(dir) = &self.data_dir {
            if let Err(e) = persist(dir, &job) {
                tracing::warn!(id = %job.id, error = %e, "could not persist job");
            }
        }
        self.jobs
            .write()
            .expect("job store lock")
            .insert(job.id.clone(), Arc::new(job));
    }

    fn default_config(&self) -> PipelineConfig {
        let mut config = PipelineConfig::default();
        if let Some(url) = &self.default_backend {
            config.backend = BackendConfig::all(url);
        }
        config
    }
}

fn persist(dir: &Path, job: &JobRecord) -> std::io::Result<()> {
    let tmp = dir.join(format!("{}.json.tmp", job.id));
    std::fs::write(&tmp, serde_json::to_vec(job).map_err(std::io::Error::other)?)?;
    std::fs::rename(tmp, dir.join(format!("{}.json", job.id)))
}

fn execute(document: &Document, config: &PipelineConfig) -> Result<SquashRun, String> {
    let backends = ResolvedBackends::new(&config.backend, config.seed).map_err(|e| e.to_string())?;
    pipeline::run(document, config, backends.backends()).map_err(|e| e.to_string())
}

async fn submit(State(state): State<Arc<AppState>>, Json(req): Json<SubmitRequest>) -> Result<Response, ApiError> {
    let config = req.config.unwrap_or_else(|| state.default_config());
    config.validate()?;
    let segmenter = Segmenter {
        max_paragraph_chars: config.max_paragraph_chars,
        ..Segmenter::default()
    };
    let document = match req.document {
        DocumentBody::Text(t) => segmenter.segment(&t)?,
        DocumentBody::Structured(d) => segmenter.from_input(d)?,
    };
    let id = uuid::Uuid::new_v4().to_string();
    let mut job = JobRecord {
        id: id.clone(),
        status: JobStatus::Pending,
        error: None,
        config,
        run: None,
    };
    state.put(job.clone());

    let worker_state = state.clone();
    tokio::spawn(async move {
        job.status = JobStatus::Running;
        worker_state.put(job.clone());
        let config = job.config.clone();
        let result = tokio::task::spawn_blocking(move || execute(&document, &config))
            .await
            .unwrap_or_else(|e| Err(format!("job panicked: {e}")));
        match result {
            Ok(run) => {
                job.status = JobStatus::Done;
                job.run = Some(run);
            }
            Err(e) => {
                tracing::warn!(id = %job.id, error = %e, "job failed");
                job.status = JobStatus::Failed;
                job.error = Some(e);
            }
        }
        worker_state.put(job);
    });

    Ok((
        StatusCode::ACCEPTED,
        Json(json!({"id": id, "status": JobStatus::Pending})),
    )
        .into_response())
}

fn finished(job: &JobRecord) -> Result<&SquashRun, ApiError> {
    match (&job.status, &job.run) {
        (JobStatus::Done, Some(run)) => Ok(run),
        (status, _) => Err(ApiError::NotReady(job.id.clone(), *status)),
    }
}

async fn status(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<JobView>, ApiError> {
    let job = state.get(&id).ok_or_else(|| ApiError::NotFound(id.clone()))?;
    let result = match finished(&job) {
        Ok(run) => Some(pipeline::render(run, &job.config, &job.config.budget)?),
        Err(_) => None,
    };
    Ok(Json(JobView {
        id: job.id.clone(),
        status: job.status,
        error: job.error.clone(),
        result,
    }))
}

async fn refilter(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(budget): Json<BudgetConfig>,
) -> Result<Json<SquashOutput>, ApiError> {
    budget.validate()?;
    let job = state.get(&id).ok_or_else(|| ApiError::NotFound(id.clone()))?;
    let run = finished(&job)?;
    Ok(Json(pipeline::render(run, &job.config, &budget)?))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok", "version": VERSION}))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/squash", post(submit))
        .route("/api/squash/{id}", get(status))
        .route("/api/squash/{id}/refilter", post(refilter))
        .route("/api/health", get(health))
        .with_state(state)
}
