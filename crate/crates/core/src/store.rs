//! `.lmcanvas` files: canonical pretty-printed JSON with `schema_version` as
//! the first field. Every load runs the full document validator.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::Deserialize;
use thiserror::Error;

use crate::model::{BlockId, CanvasDocument, IntegrityViolations, SCHEMA_VERSION};

pub const EXTENSION: &str = "lmcanvas";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unsupported schema_version {found} (this build reads {SCHEMA_VERSION})")]
    SchemaVersionUnsupported { found: u64 },
    #[error("integrity error: {message}")]
    Integrity {
        message: String,
        /// Set when the document's dependency graph has a cycle.
        cycle: Option<Vec<BlockId>>,
    },
}

impl StoreError {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Io { .. } => "IoError",
            Self::SchemaVersionUnsupported { .. } => "SchemaVersionUnsupported",
            Self::Integrity { .. } => "IntegrityError",
        }
    }

    fn integrity(message: impl Into<String>) -> Self {
        Self::Integrity {
            message: message.into(),
            cycle: None,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<IntegrityViolations> for StoreError {
    fn from(violations: IntegrityViolations) -> Self {
        Self::Integrity {
            message: violations.to_string(),
            cycle: violations.cycle,
        }
    }
}

/// The canonical text of `doc`. Equal documents give byte-identical output.
pub fn to_canonical_string(doc: &CanvasDocument) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("documents always serialize");
    text.push('\n');
    text
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: Option<serde_json::Value>,
}

/// Parses and validates a document.
pub fn from_str(text: &str) -> Result<CanvasDocument, StoreError> {
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| StoreError::integrity(format!("malformed document: {e}")))?;
    let version = probe
        .schema_version
        .ok_or_else(|| StoreError::integrity("missing schema_version"))?;
    let found = version
        .as_u64()
        .ok_or_else(|| StoreError::integrity(format!("schema_version must be an integer, got {version}")))?;
    if found != u64::from(SCHEMA_VERSION) {
        return Err(StoreError::SchemaVersionUnsupported { found });
    }
    let after_brace = text.trim_start().strip_prefix('{').unwrap_or("").trim_start();
    if !after_brace.starts_with("\"schema_version\"") {
        return Err(StoreError::integrity("schema_version must be the first field"));
    }
    let doc: CanvasDocument =
        serde_json::from_str(text).map_err(|e| StoreError::integrity(format!("malformed document: {e}")))?;
    doc.validate()?;
    Ok(doc)
}

pub fn load(path: impl AsRef<Path>) -> Result<CanvasDocument, StoreError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::InvalidData => StoreError::integrity(format!("{} is not UTF-8", path.display())),
        _ => StoreError::io(path, e),
    })?;
    from_str(&text)
}

/// Writes the canonical form through a temporary sibling and a rename.
pub fn save(doc: &CanvasDocument, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, to_canonical_string(doc)).map_err(|e| StoreError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| StoreError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentSummary {
    pub id: String,
    pub title: String,
    pub modified_at: DateTime<Utc>,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LibraryWarning {
    pub path: PathBuf,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Library {
    pub documents: Vec<DocumentSummary>,
    pub warnings: Vec<LibraryWarning>,
}

/// Scans `dir` for `*.lmcanvas` files, newest first. Unreadable or invalid
/// files become warnings.
pub fn list_documents(dir: impl AsRef<Path>) -> Result<Library, StoreError> {
    let dir = dir.as_ref();
    let mut library = Library::default();
    for entry in fs::read_dir(dir).map_err(|e| StoreError::io(dir, e))? {
        let entry = entry.map_err(|e| StoreError::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some(EXTENSION) || !path.is_file() {
            continue;
        }
        let modified = entry.metadata().and_then(|m| m.modified());
        match (load(&path), modified) {
            (Ok(doc), Ok(modified)) => library.documents.push(DocumentSummary {
                id: doc.id().to_string(),
                title: doc.title().to_string(),
                modified_at: modified.into(),
                path,
            }),
            (Err(e), _) => library.warnings.push(LibraryWarning {
                path,
                message: e.to_string(),
            }),
            (_, Err(e)) => library.warnings.push(LibraryWarning {
                path,
                message: e.to_string(),
            }),
        }
    }
    library
        .documents
        .sort_by(|a, b| b.modified_at.cmp(&a.modified_at).then_with(|| a.id.cmp(&b.id)));
    library.warnings.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(library)
}
