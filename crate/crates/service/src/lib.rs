//! HTTP service for LMCanvas documents.
//!
//! Documents live as `.lmcanvas` files in a library directory and are loaded
//! on first use. Each document has a single-writer lock; every successful
//! mutation is saved and published as one [`ApiEvent`] on the document's
//! server-sent event stream. The event sequence number doubles as the
//! document revision, which clients may send back in
//! [`REVISION_HEADER`] for optimistic concurrency.

mod error;
mod events;
mod routes;
mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use lmcanvas_core::{Engine, ProviderConfig, ProviderError};
use thiserror::Error;

pub use error::{status_for, ApiError};
pub use events::{ApiEvent, EventKind};
pub use routes::{router, OP_NAMES, REVISION_HEADER};
pub use state::{valid_document_id, AppState, DocHandle, DocState};

pub const DEFAULT_PORT: u16 = 7130;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub library: PathBuf,
    pub provider: ProviderConfig,
    pub max_in_flight: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: DEFAULT_PORT,
            library: PathBuf::from("."),
            provider: ProviderConfig::default(),
            max_in_flight: Engine::DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

impl ServiceConfig {
    pub fn state(&self) -> Result<AppState, ServiceError> {
        std::fs::create_dir_all(&self.library)?;
        let provider = self.provider.build()?;
        Ok(AppState::with_max_in_flight(
            self.library.clone(),
            Arc::from(provider),
            self.max_in_flight,
        ))
    }
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = config.state()?;
    let listener = tokio::net::TcpListener::bind((config.host.as_str(), config.port)).await?;
    tracing::info!(address = %listener.local_addr()?, library = %config.library.display(), "serving");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

/// A server on its own thread and runtime, for tests and embedding. The
/// server stops when the process exits.
pub fn serve_in_background(state: AppState) -> std::io::Result<SocketAddr> {
    let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()?;
    std::thread::spawn(move || {
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            axum::serve(listener, router(state)).await.expect("server");
        });
    });
    Ok(addr)
}
