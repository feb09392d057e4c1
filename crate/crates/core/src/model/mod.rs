//! The canvas document and its blocks.

mod block;
mod document;
mod graph;
mod mutate;
mod params;
mod validate;

pub use block::{
    Block, BlockId, BlockKind, Geometry, ModelBlock, OutputContainer, PipelineBlock, ProngAttachment, RecordId,
    Selection, Sink, TextBlock,
};
pub use document::{CanvasDocument, ChangeReport, Clock};
pub use params::ModelParams;
pub use validate::IntegrityViolations;

pub(crate) use graph::find_cycle;
pub(crate) use mutate::byte_offset;

/// Current document schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Inserted between the two contents when one text block is dropped into another.
pub const CONCATENATE_SEPARATOR: &str = "\n";

/// Inserted before a generation appended as a continuation. Completions carry
/// their own leading whitespace.
pub const CONTINUATION_SEPARATOR: &str = "";
