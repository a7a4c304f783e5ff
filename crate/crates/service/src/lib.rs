//! Event-sourced judging service.
//!
//! Each competition is an append-only JSONL log in the data directory. The
//! in-memory state is whatever replaying that log produces, and every score
//! the API returns is recomputed from the stored observations.

pub mod api;
pub mod event;
pub mod log;
pub mod state;
pub mod store;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use skijudge_core::{DifficultyCatalog, RuleConfig};
use thiserror::Error;

pub use api::router;
pub use event::{Event, EventBody, FormObservation, Observation, LOG_VERSION};
pub use log::EventLog;
pub use state::{replay, CompetitionState, JumpState};
pub use store::{DeclareJump, LiveJumpState, Store};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ServiceError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("storage error: {0}")]
    Storage(String),
    #[error("corrupt event log at line {line}: {message}")]
    CorruptLog { line: usize, message: String },
}

/// Binds `addr`, announces the bound address on stdout and serves until
/// interrupted.
pub async fn serve(addr: SocketAddr, data_dir: &Path, rules: RuleConfig, catalog: DifficultyCatalog) -> std::io::Result<()> {
    let store = Store::open(data_dir, rules, catalog).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, api::router(Arc::new(store)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
