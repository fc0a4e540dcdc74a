//! HTTP service over a popmine store.
//!
//! Every response body is JSON, either `{"data": ...}` or
//! `{"error": {"code", "message", "details"?}}`; the one exception is the
//! empty 204 from the annotation queue. Routes under `/api/v1` take an
//! optional bearer token.

pub mod error;
mod handlers;
pub mod poller;
mod query;
pub mod state;

use std::future::Future;

use axum::extract::{Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::net::TcpListener;

pub use error::{ApiError, Data};
pub use handlers::{IngestReport, RetrainReport};
pub use state::{AppState, Models, ServiceConfig, SharedState, DISAMBIG_MODEL_FILE, SENTIMENT_MODEL_FILE};

async fn require_token(State(state): State<SharedState>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let given = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if given != Some(token.as_str()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token").into_response();
        }
    }
    next.run(req).await
}

pub fn router(state: SharedState) -> Router {
    let v1 = Router::new()
        .route("/documents", post(handlers::post_documents))
        .route("/entities", get(handlers::entities))
        .route("/indicators/buzz", get(handlers::buzz))
        .route("/indicators/sentiment", get(handlers::sentiment))
        .route("/annotation/next", get(handlers::annotation_next))
        .route("/annotation", post(handlers::annotation_submit))
        .route("/models/{task}/retrain", post(handlers::retrain))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/health", get(handlers::health))
        .nest("/api/v1", v1)
        .fallback(handlers::not_found)
        .method_not_allowed_fallback(handlers::method_not_allowed)
        .with_state(state)
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
pub async fn serve(listener: TcpListener, state: SharedState, shutdown: impl Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Resolves on Ctrl-C or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
