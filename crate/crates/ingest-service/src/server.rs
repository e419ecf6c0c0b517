use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::header::{AUTHORIZATION, CONTENT_TYPE};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::Deserialize;
use store_query::{QueryRequest, StoreError, TelemetryStore, DEFAULT_PAGE_SIZE, DEFAULT_WINDOW_S};
use thiserror::Error;

use crate::config::ServiceConfig;
use crate::core::ServiceCore;

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("invalid service config: {0}")]
    Config(#[from] crate::config::ConfigError),
    #[error("store: {0}")]
    Store(#[from] StoreError),
    #[error("bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
struct AppCtx {
    core: Arc<ServiceCore>,
    display_offset_s: i32,
}

/// Build the HTTP surface over a service core.
///
/// Routes: `POST /v1/telemetry`, `GET /v1/query`, `GET /v1/export.csv`.
pub fn router(core: Arc<ServiceCore>, display_offset_s: i32) -> Router {
    Router::new()
        .route("/v1/telemetry", post(post_telemetry))
        .route("/v1/query", get(get_query))
        .route("/v1/export.csv", get(get_export))
        .with_state(AppCtx { core, display_offset_s })
}

/// Run the service until interrupted. Appends are flushed synchronously,
/// so an interrupt leaves the store files complete.
pub async fn serve(config: ServiceConfig) -> Result<(), ServeError> {
    config.validate()?;
    let store = Arc::new(TelemetryStore::open(&config.store_path)?);
    let core = Arc::new(ServiceCore::new(store, config.tokens.clone())?);
    let app = router(core, config.display_offset_s);
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .map_err(|source| ServeError::Bind { addr: config.bind.clone(), source })?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            tracing::info!("shutting down");
        })
        .await?;
    Ok(())
}

async fn post_telemetry(
    State(ctx): State<AppCtx>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let authorization = headers.get(AUTHORIZATION).and_then(|v| v.to_str().ok());
    let resp = ctx.core.handle_post(authorization, &body, Utc::now().timestamp());
    let status = StatusCode::from_u16(resp.status).expect("core emits valid statuses");
    (status, [(CONTENT_TYPE, "application/json")], resp.body).into_response()
}

#[derive(Debug, Deserialize)]
struct ReadParams {
    device_id: Option<String>,
    from: Option<i64>,
    to: Option<i64>,
    page: Option<usize>,
    page_size: Option<usize>,
}

impl ReadParams {
    /// Resolve defaults: last 7 days ending now, first dashboard page.
    fn into_request(self) -> Result<QueryRequest, Response> {
        let device_id = self.device_id.filter(|d| !d.is_empty()).ok_or_else(|| {
            error_response(StatusCode::BAD_REQUEST, "device_id is required")
        })?;
        let to = self.to.unwrap_or_else(|| Utc::now().timestamp());
        let from = self.from.unwrap_or(to - DEFAULT_WINDOW_S);
        Ok(QueryRequest {
            device_id,
            from,
            to,
            page: self.page.unwrap_or(1),
            page_size: self.page_size.unwrap_or(DEFAULT_PAGE_SIZE),
        })
    }
}

async fn get_query(State(ctx): State<AppCtx>, Query(params): Query<ReadParams>) -> Response {
    let req = match params.into_request() {
        Ok(req) => req,
        Err(resp) => return resp,
    };
    match ctx.core.store().query(&req) {
        Ok(page) => Json(page).into_response(),
        Err(e @ StoreError::BadQuery(_)) => {
            error_response(StatusCode::BAD_REQUEST, &e.to_string())
        }
        Err(e) => {
            tracing::error!("query failed: {e}");
            error_response(StatusCode::INTERNAL_SERVER_ERROR, "query failed")
        }
    }
}

async fn get_export(State(ctx): State<AppCtx>, Query(params): Query<ReadParams>) -> Response {
    let req = match params.into_request() {
        Ok(req) => req,
        Err(resp) => return resp,
    };
    let mut csv = Vec::new();
    match ctx.core.store().export_csv(
        &req.device_id,
        req.from,
        req.to,
        ctx.display_offset_s,
        &mut csv,
    ) {
        Ok(_) => (
            StatusCode::OK,
            [(CONTENT_TYPE, "text/csv; charset=utf-8")],
            csv,
        )
            .into_response(),
        Err(e @ StoreError::BadQuery(_)) => {
            error_response(StatusCode::BAD_REQUEST, &e.to_string())
        }
        Err(e) => {
            tracing::error!("export failed: {e}");
            error_response(StatusCode::INTERNAL_SERVER_ERROR, "export failed")
        }
    }
}

fn error_response(status: StatusCode, reason: &str) -> Response {
    (
        status,
        [(CONTENT_TYPE, "application/json")],
        serde_json::json!({ "error": reason }).to_string(),
    )
        .into_response()
}
