use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BlockChanged,
    BlockDeleted,
    GenerationStarted,
    GenerationFinished,
    SelectionChanged,
    DocumentSaved,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::BlockChanged => "block_changed",
            Self::BlockDeleted => "block_deleted",
            Self::GenerationStarted => "generation_started",
            Self::GenerationFinished => "generation_finished",
            Self::SelectionChanged => "selection_changed",
            Self::DocumentSaved => "document_saved",
        }
    }
}

/// One entry of a document's event stream. `seq` is also the document
/// revision after the change it describes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub document: String,
    pub payload: Value,
}
