use thiserror::Error;

use crate::model::{BlockId, RecordId};

/// Errors raised by document mutations, template resolution, and the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CanvasError {
    #[error("unknown block `{0}`")]
    UnknownBlock(BlockId),
    #[error("unknown generation record `{0}`")]
    UnknownRecord(RecordId),
    #[error("block `{0}` is not a text block")]
    NotATextBlock(BlockId),
    #[error("block `{block}` is a {found} block, expected {expected}")]
    WrongBlockKind {
        block: BlockId,
        expected: &'static str,
        found: &'static str,
    },
    #[error("block `{0}` cannot be combined with itself")]
    SameBlock(BlockId),
    #[error("block `{block}` is nested in pipeline `{pipeline}`")]
    SourceNested { block: BlockId, pipeline: BlockId },
    #[error("block `{block}` is already nested in pipeline `{pipeline}`")]
    AlreadyNested { block: BlockId, pipeline: BlockId },
    #[error("block `{block}` is already a slot of pipeline `{pipeline}`")]
    DuplicateSlot { pipeline: BlockId, block: BlockId },
    #[error("wiring `{from}` into `{to}` would create a dependency cycle")]
    WouldCreateCycle { from: BlockId, to: BlockId },
    #[error("range {start}..{end} is out of bounds for block `{block}` of length {len}")]
    RangeOutOfBounds {
        block: BlockId,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("range {start}..{end} of block `{block}` cuts through a command token")]
    SplitsCommandToken { block: BlockId, start: usize, end: usize },
    #[error("invalid model parameter `{field}`: {reason}")]
    InvalidParams { field: String, reason: String },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid sink target: {0}")]
    InvalidSinkTarget(String),
    #[error("block `{host}` has no prong {index} ({count} prongs)")]
    UnknownProng { host: BlockId, index: usize, count: usize },
    #[error("prong {index} of block `{host}` is fed by a pipeline output")]
    ProngOccupied { host: BlockId, index: usize },
    #[error("block `{block}` has no history entry {seq}")]
    UnknownSeq { block: BlockId, seq: u64 },
    #[error("prong {index} of block `{block}` has nothing attached")]
    UnresolvedProng { block: BlockId, index: usize },
    #[error("template needs a selection but nothing is selected")]
    NoSelection,
    #[error("template resolution exceeded {0} levels; the attachment graph is cyclic")]
    DepthExceeded(usize),
    #[error("pipelines form a cycle: {}", join_ids(.cycle))]
    CycleDetected { cycle: Vec<BlockId> },
}

fn join_ids(ids: &[BlockId]) -> String {
    ids.iter().map(BlockId::as_str).collect::<Vec<_>>().join(" -> ")
}

impl CanvasError {
    /// Stable machine-readable name, used by the service and the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Self::UnknownBlock(_) => "UnknownBlock",
            Self::UnknownRecord(_) => "UnknownRecord",
            Self::NotATextBlock(_) => "NotATextBlock",
            Self::WrongBlockKind { .. } => "WrongBlockKind",
            Self::SameBlock(_) => "SameBlock",
            Self::SourceNested { .. } => "SourceNested",
            Self::AlreadyNested { .. } => "AlreadyNested",
            Self::DuplicateSlot { .. } => "DuplicateSlot",
            Self::WouldCreateCycle { .. } => "WouldCreateCycle",
            Self::RangeOutOfBounds { .. } => "RangeOutOfBounds",
            Self::SplitsCommandToken { .. } => "SplitsCommandToken",
            Self::InvalidParams { .. } => "InvalidParams",
            Self::InvalidGeometry(_) => "InvalidGeometry",
            Self::InvalidSinkTarget(_) => "InvalidSinkTarget",
            Self::UnknownProng { .. } => "UnknownProng",
            Self::ProngOccupied { .. } => "ProngOccupied",
            Self::UnknownSeq { .. } => "UnknownSeq",
            Self::UnresolvedProng { .. } => "UnresolvedProng",
            Self::NoSelection => "NoSelection",
            Self::DepthExceeded(_) => "DepthExceeded",
            Self::CycleDetected { .. } => "CycleDetected",
        }
    }

    pub(crate) fn invalid_param(field: &str, reason: impl Into<String>) -> Self {
        Self::InvalidParams {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
