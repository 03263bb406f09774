//! HTTP side of squash: blocking clients for remote backends, a server
//! exposing the mock backends over the same protocol, and the job API.

pub mod api;
pub mod client;
pub mod mock_server;

use std::sync::Arc;

pub use api::{router, AppState};
pub use client::{HttpBackend, ResolvedBackends};
pub use mock_server::mock_backend_router;

/// Serves the job API until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

/// Serves the mock backends until the listener fails.
pub async fn serve_mock_backend(listener: tokio::net::TcpListener, seed: u64) -> std::io::Result<()> {
    axum::serve(listener, mock_backend_router(seed)).await
}
