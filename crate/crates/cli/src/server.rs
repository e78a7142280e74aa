use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use qinterp_core::config::EngineConfig;
use qinterp_core::kbstore::KnowledgeSnapshot;
use qinterp_core::Error;
use serde::Deserialize;
use serde_json::json;

use crate::commands::respond;

/// Read-only state shared by all requests.
#[derive(Debug)]
pub struct AppState {
    pub kb: KnowledgeSnapshot,
    pub config: EngineConfig,
}

#[derive(Debug, Deserialize)]
struct InterpretParams {
    q: Option<String>,
}

fn error(status: StatusCode, message: String) -> Response {
    (status, Json(json!({ "error": message }))).into_response()
}

async fn interpret_handler(State(state): State<Arc<AppState>>, Query(params): Query<InterpretParams>) -> Response {
    let Some(q) = params.q.filter(|q| !q.trim().is_empty()) else {
        return error(StatusCode::BAD_REQUEST, "missing or empty query parameter `q`".into());
    };
    let worker = Arc::clone(&state);
    let result = tokio::task::spawn_blocking(move || respond(&worker.kb, &q, &worker.config, false)).await;
    match result {
        Ok(Ok(body)) => Json(body).into_response(),
        Ok(Err(e @ (Error::EmptyQuery | Error::QueryTooLong { .. }))) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    Json(json!({
        "status": "ok",
        "surfaces": state.kb.surface_count(),
        "anchors": state.kb.anchor_count(),
    }))
    .into_response()
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/interpret", get(interpret_handler))
        .route("/health", get(health))
        .with_state(state)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = terminate => {},
    }
    tracing::info!("shutting down");
}

pub async fn serve(state: Arc<AppState>, address: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(address).await?;
    tracing::info!(address = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown_signal()).await?;
    Ok(())
}
