use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lmcanvas_core::{store, CanvasDocument, Clock, CompletionProvider, Engine};
use serde_json::Value;
use tokio::sync::{broadcast, Mutex, OwnedMutexGuard};

use crate::error::ApiError;
use crate::events::{ApiEvent, EventKind};

const EVENT_BUFFER: usize = 1024;

/// A loaded document and its revision counter.
pub struct DocState {
    pub doc: CanvasDocument,
    pub revision: u64,
    path: PathBuf,
    events: broadcast::Sender<ApiEvent>,
}

impl DocState {
    /// Bumps the revision and publishes one event.
    pub fn emit(&mut self, kind: EventKind, payload: Value) -> u64 {
        self.revision += 1;
        let event = ApiEvent {
            seq: self.revision,
            kind,
            document: self.doc.id().to_string(),
            payload,
        };
        // No subscribers is fine.
        let _ = self.events.send(event);
        self.revision
    }

    pub fn save(&self) -> Result<(), ApiError> {
        store::save(&self.doc, &self.path).map_err(ApiError::from)
    }

    pub fn check_revision(&self, expected: Option<u64>) -> Result<(), ApiError> {
        match expected {
            Some(expected) if expected != self.revision => Err(ApiError::stale_revision(expected, self.revision)),
            _ => Ok(()),
        }
    }
}

pub struct DocHandle {
    state: Arc<Mutex<DocState>>,
    events: broadcast::Sender<ApiEvent>,
}

impl DocHandle {
    fn new(doc: CanvasDocument, path: PathBuf) -> Self {
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        let state = DocState {
            doc,
            revision: 0,
            path,
            events: events.clone(),
        };
        Self {
            state: Arc::new(Mutex::new(state)),
            events,
        }
    }

    pub async fn lock(&self) -> OwnedMutexGuard<DocState> {
        self.state.clone().lock_owned().await
    }

    pub fn subscribe(&self) -> broadcast::Receiver<ApiEvent> {
        self.events.subscribe()
    }
}

struct Inner {
    library: PathBuf,
    provider: Arc<dyn CompletionProvider>,
    max_in_flight: usize,
    documents: Mutex<HashMap<String, Arc<DocHandle>>>,
}

/// Shared service state: the library directory, the provider, and the
/// documents loaded so far.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

pub fn valid_document_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl AppState {
    pub fn new(library: impl Into<PathBuf>, provider: Arc<dyn CompletionProvider>) -> Self {
        Self::with_max_in_flight(library, provider, Engine::DEFAULT_MAX_IN_FLIGHT)
    }

    pub fn with_max_in_flight(
        library: impl Into<PathBuf>,
        provider: Arc<dyn CompletionProvider>,
        max_in_flight: usize,
    ) -> Self {
        Self {
            inner: Arc::new(Inner {
                library: library.into(),
                provider,
                max_in_flight: max_in_flight.max(1),
                documents: Mutex::new(HashMap::new()),
            }),
        }
    }

    pub fn library(&self) -> &Path {
        &self.inner.library
    }

    pub fn provider(&self) -> Arc<dyn CompletionProvider> {
        self.inner.provider.clone()
    }

    pub fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight
    }

    pub fn path_for(&self, id: &str) -> PathBuf {
        self.inner.library.join(format!("{id}.{}", store::EXTENSION))
    }

    /// The handle for `id`, loading it from the library on first use.
    pub async fn document(&self, id: &str) -> Result<Arc<DocHandle>, ApiError> {
        if !valid_document_id(id) {
            return Err(ApiError::unknown_document(id));
        }
        let mut documents = self.inner.documents.lock().await;
        if let Some(handle) = documents.get(id) {
            return Ok(handle.clone());
        }
        let path = self.path_for(id);
        if !path.is_file() {
            return Err(ApiError::unknown_document(id));
        }
        let load_path = path.clone();
        let mut doc = tokio::task::spawn_blocking(move || store::load(load_path))
            .await
            .map_err(|e| ApiError::internal(e.to_string()))??;
        doc.set_clock(Clock::system());
        let handle = Arc::new(DocHandle::new(doc, path));
        documents.insert(id.to_string(), handle.clone());
        Ok(handle)
    }

    /// Registers a new document and writes it to the library.
    pub async fn create(&self, doc: CanvasDocument) -> Result<Arc<DocHandle>, ApiError> {
        let id = doc.id().to_string();
        let mut documents = self.inner.documents.lock().await;
        let path = self.path_for(&id);
        if documents.contains_key(&id) || path.exists() {
            return Err(ApiError::new(
                axum::http::StatusCode::CONFLICT,
                "DocumentExists",
                format!("document `{id}` already exists"),
            ));
        }
        let handle = Arc::new(DocHandle::new(doc, path));
        handle.lock().await.save()?;
        documents.insert(id, handle.clone());
        Ok(handle)
    }

    /// Installs `doc` without validation or saving. Test support for states
    /// the public API cannot produce.
    #[doc(hidden)]
    pub async fn install_unchecked(&self, doc: CanvasDocument) -> Arc<DocHandle> {
        let id = doc.id().to_string();
        let handle = Arc::new(DocHandle::new(doc, self.path_for(&id)));
        self.inner.documents.lock().await.insert(id, handle.clone());
        handle
    }
}
