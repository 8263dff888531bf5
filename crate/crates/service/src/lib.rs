//! HTTP retrieval service: vector or lexical search with metadata filters,
//! query autocomplete, and per-hit sentence highlighting.
//!
//! The service holds one immutable [`Snapshot`] of model, indices and passage
//! store at a time; reloads publish a new snapshot atomically.

pub mod api;
pub mod autocomplete;
pub mod config;
pub mod highlight;
pub mod state;

use std::io;

pub use api::{router, ApiError, Mode, RequestLog, SearchHit, SearchRequest, SearchResponse};
pub use autocomplete::Autocomplete;
pub use config::ServiceConfig;
pub use highlight::{highlight, sentences, Highlight, HighlightParams};
pub use state::{AppState, Snapshot};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] finembed::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;

/// Loads every artifact named by `cfg`, then serves until the process is
/// stopped.
pub async fn serve(cfg: ServiceConfig) -> Result<()> {
    let snapshot = cfg.load_snapshot()?;
    log::info!(
        "loaded {} passages, model {}, index {}",
        snapshot.store.len(),
        snapshot.model.version,
        snapshot.index_version()
    );
    let state = AppState::with_snapshot(snapshot);
    let log = cfg.request_log.as_ref().map(RequestLog::open).transpose()?;
    let app = router(state, &cfg.cors_origins, log);
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
