//! JSON-over-HTTP facade for sessions, interpretation, search and evaluation.
//!
//! Errors are returned as `{"code", "message", "retriable"}` with the codes
//! `BAD_INPUT` (400), `NOT_FOUND` (404), `INTERNAL` (500), `PROVIDER_DOWN`
//! (502) and `NO_INDEX` (503). Response schemas live in `docs/schemas`.

pub mod api;
pub mod config;
mod routes;
mod state;

pub use api::{ApiError, ErrorCode};
pub use config::{AppConfig, ConfigError};
pub use routes::router;
pub use state::{AppState, EvalState};

use std::net::SocketAddr;
use std::sync::Arc;

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
