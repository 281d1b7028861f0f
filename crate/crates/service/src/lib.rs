//! HTTP/JSON service for interactive feasibility studies.
//!
//! A session wraps one study manifest. It can be run, its labels corrected
//! incrementally, and cleaning scenarios priced without touching the data.
//! Each session lives in its own directory with an append-only journal, so
//! a restarted service reproduces the state it had before.
//!
//! | Method | Path | Body |
//! |---|---|---|
//! | POST | `/sessions` | `{manifest_path}` or `{manifest, base_dir}`, optional `cost_model`, `reference_labels` |
//! | GET | `/sessions` | |
//! | GET | `/sessions/{id}` | |
//! | POST | `/sessions/{id}/run` | |
//! | GET | `/sessions/{id}/result` | |
//! | GET | `/sessions/{id}/curves` | |
//! | POST | `/sessions/{id}/labels` | `{edits: [{split, index, label}]}` |
//! | POST | `/sessions/{id}/clean_step` | `{fraction}` |
//! | POST | `/sessions/{id}/whatif` | `{clean_fraction, assumed_base_ber?, label_cost?}` |
//! | GET | `/sessions/{id}/costs` | |
//!
//! Errors are `{code, message, detail}`.
//!
//! The what-if endpoint is a modelling extension: it assumes the remaining
//! label noise is uniform and that the clean data has Bayes error
//! `assumed_base_ber` (default 0).

mod api;
pub mod cost;
mod error;
pub mod session;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;

pub use api::{router, AppState, CreateSessionRequest, CreatedSession};
pub use cost::{CostLedger, CostModel, CostSummary, LabelPrice};
pub use error::{ErrorBody, ServiceError};
pub use session::{Session, SessionStatus, Snapshot};

pub const DEFAULT_PORT: u16 = 8750;

/// Serves on `addr` until Ctrl-C.
pub async fn serve(addr: SocketAddr, data_dir: PathBuf) -> Result<(), ServiceError> {
    let state = AppState::open(data_dir)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// [`serve`] on a fresh multi-threaded runtime.
pub fn serve_blocking(addr: SocketAddr, data_dir: PathBuf, worker_threads: Option<usize>) -> Result<(), ServiceError> {
    let mut builder = tokio::runtime::Builder::new_multi_thread();
    builder.enable_all();
    if let Some(n) = worker_threads {
        builder.worker_threads(n.max(1));
    }
    builder.build()?.block_on(serve(addr, data_dir))
}
