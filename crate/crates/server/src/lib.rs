//! HTTP+JSON API over an interpretation bundle.
//!
//! Every response carries the bundle content hash in the `X-Bundle-Hash` header.
//! Errors are `{"error": {"code": ..., "message": ...}}`. Dashboard assets, when
//! configured, are served from `/`.

mod api;
mod error;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::response::Html;
use axum::routing::{get, patch};
use axum::Router;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub use api::{
    DEFAULT_N_ASSOC, DEFAULT_SNIPPET_CHARS, HIGHLIGHT_TERMS, LIST_TOP_TERMS, MAX_NAME_CHARS,
};
pub use error::{ApiError, ApiResult};
pub use state::{AppState, CacheSource, ServerError, ServerOptions};

pub const BUNDLE_HASH_HEADER: &str = "x-bundle-hash";
/// Environment variable overriding the listen address (default `127.0.0.1`).
pub const HOST_ENV: &str = "TOPICSCOPE_HOST";
pub const DEFAULT_HOST: &str = "127.0.0.1";

const PLACEHOLDER_PAGE: &str =
    "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>topicscope</title></head>\
<body><h1>topicscope</h1><p>The JSON API is served under <code>/api</code>, starting at \
<a href=\"/api/meta\">/api/meta</a>.</p></body></html>\n";

/// Builds the application router for an opened state.
pub fn router(state: Arc<AppState>) -> Router {
    let hash =
        HeaderValue::from_str(state.bundle_hash()).expect("hex hash is a valid header value");
    let api = Router::new()
        .route("/meta", get(api::meta))
        .route("/topics", get(api::topics))
        .route("/topics/{id}", get(api::topic))
        .route("/topics/{id}/name", patch(api::rename_topic))
        .route("/topics/{id}/wordcloud", get(api::topic_wordcloud))
        .route("/maps/{kind}", get(api::map))
        .route("/words/{id}", get(api::word))
        .route("/documents/{id}", get(api::document))
        .route("/groups", get(api::groups))
        .route("/groups/{id}", get(api::group))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
        });
    let app = Router::new().nest("/api", api);
    let app = match &state.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    };
    app.with_state(state).layer(axum::middleware::map_response(
        move |mut res: axum::response::Response| {
            let hash = hash.clone();
            async move {
                res.headers_mut()
                    .insert(HeaderName::from_static(BUNDLE_HASH_HEADER), hash);
                res
            }
        },
    ))
}

/// Listen address from `TOPICSCOPE_HOST` and `port`. Port 0 picks a free port.
pub fn listen_addr(port: u16) -> String {
    let host = std::env::var(HOST_ENV).unwrap_or_else(|_| DEFAULT_HOST.to_string());
    if host.contains(':') && !host.starts_with('[') {
        format!("[{host}]:{port}")
    } else {
        format!("{host}:{port}")
    }
}

/// Binds the listener; a busy port is a startup error.
pub async fn bind(addr: &str) -> Result<TcpListener, ServerError> {
    TcpListener::bind(addr)
        .await
        .map_err(|source| ServerError::Bind {
            addr: addr.to_string(),
            source,
        })
}

/// Serves until the process is stopped.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> Result<(), ServerError> {
    axum::serve(listener, router(state)).await?;
    Ok(())
}

/// Opens the bundle, binds and serves. `on_ready` receives the bound address.
pub async fn run(
    bundle_dir: impl AsRef<std::path::Path>,
    port: u16,
    options: ServerOptions,
    on_ready: impl FnOnce(SocketAddr),
) -> Result<(), ServerError> {
    let state = AppState::open(bundle_dir, options).await?;
    let listener = bind(&listen_addr(port)).await?;
    on_ready(listener.local_addr()?);
    serve(listener, state).await
}
