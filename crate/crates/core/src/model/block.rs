use std::fmt;

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use crate::error::CanvasError;

/// Identifier of a block, unique within one document and never reused.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(String);

impl BlockId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn from_counter(n: u64) -> Self {
        Self(format!("b{n}"))
    }

    pub(crate) fn counter(&self) -> Option<u64> {
        parse_counter(&self.0, 'b')
    }
}

impl fmt::Display for BlockId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BlockId {
    fn from(id: &str) -> Self {
        Self::new(id)
    }
}

/// Identifier of a generation record.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RecordId(String);

impl RecordId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub(crate) fn from_counter(n: u64) -> Self {
        Self(format!("g{n}"))
    }

    pub(crate) fn counter(&self) -> Option<u64> {
        parse_counter(&self.0, 'g')
    }
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn parse_counter(id: &str, prefix: char) -> Option<u64> {
    let digits = id.strip_prefix(prefix)?;
    if digits.is_empty() || (digits.len() > 1 && digits.starts_with('0')) || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Position and extent of a block on the canvas, in abstract units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            width: 240.0,
            height: 120.0,
        }
    }
}

impl Geometry {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Result<Self, CanvasError> {
        let geometry = Self { x, y, width, height };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<(), CanvasError> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            return Err(CanvasError::InvalidGeometry("position must be finite".into()));
        }
        if !(self.width.is_finite() && self.width > 0.0 && self.height.is_finite() && self.height > 0.0) {
            return Err(CanvasError::InvalidGeometry(format!(
                "extent {}x{} must be positive and finite",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextBlock {
    pub(crate) id: BlockId,
    pub(crate) content: String,
    pub(crate) geometry: Geometry,
}

impl TextBlock {
    pub fn id(&self) -> &BlockId {
        &self.id
    }

    pub fn content(&self) -> &str {
        &self.content
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    /// Number of `[[input]]` prongs in the current content.
    pub fn prong_count(&self) -> usize {
        crate::template::prong_count(&self.content)
    }

    /// Number of `[[select]]` holes in the current content.
    pub fn select_count(&self) -> usize {
        crate::template::select_count(&self.content)
    }

    pub(crate) fn char_len(&self) -> usize {
        self.content.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub(crate) id: BlockId,
    pub(crate) params: ModelParams,
    pub(crate) geometry: Geometry,
}

impl ModelBlock {
    pub fn id(&self) -> &BlockId {
        &self.id
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }
}

/// Where a pipeline's generations go.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sink {
    /// Each generation becomes a new text block in the output container.
    #[default]
    Container,
    /// Generations are appended to the target text block.
    Continuation { target: BlockId },
    /// The latest generation feeds a prong of the target, chaining pipelines.
    InputProng { target: BlockId, prong_index: usize },
    /// The generation replaces the canvas-wide selection.
    Select,
}

impl Sink {
    pub fn target(&self) -> Option<&BlockId> {
        match self {
            Self::Continuation { target } | Self::InputProng { target, .. } => Some(target),
            Self::Container | Self::Select => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputContainer {
    pub(crate) generations: Vec<RecordId>,
    pub(crate) sink: Sink,
}

impl OutputContainer {
    pub fn generations(&self) -> &[RecordId] {
        &self.generations
    }

    pub fn sink(&self) -> &Sink {
        &self.sink
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineBlock {
    pub(crate) id: BlockId,
    pub(crate) text_slots: Vec<BlockId>,
    pub(crate) model_slots: Vec<BlockId>,
    pub(crate) output: OutputContainer,
    pub(crate) geometry: Geometry,
}

impl PipelineBlock {
    pub fn id(&self) -> &BlockId {
        &self.id
    }

    pub fn text_slots(&self) -> &[BlockId] {
        &self.text_slots
    }

    pub fn model_slots(&self) -> &[BlockId] {
        &self.model_slots
    }

    pub fn output(&self) -> &OutputContainer {
        &self.output
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub(crate) fn has_slot(&self, block: &BlockId) -> bool {
        self.text_slots.contains(block) || self.model_slots.contains(block)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Text,
    Model,
    Pipeline,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Text => "text",
            Self::Model => "model",
            Self::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Block {
    Text(TextBlock),
    Model(ModelBlock),
    Pipeline(PipelineBlock),
}

impl Block {
    pub fn id(&self) -> &BlockId {
        match self {
            Self::Text(b) => &b.id,
            Self::Model(b) => &b.id,
            Self::Pipeline(b) => &b.id,
        }
    }

    pub fn kind(&self) -> BlockKind {
        match self {
            Self::Text(_) => BlockKind::Text,
            Self::Model(_) => BlockKind::Model,
            Self::Pipeline(_) => BlockKind::Pipeline,
        }
    }

    pub fn geometry(&self) -> Geometry {
        match self {
            Self::Text(b) => b.geometry,
            Self::Model(b) => b.geometry,
            Self::Pipeline(b) => b.geometry,
        }
    }

    pub(crate) fn geometry_mut(&mut self) -> &mut Geometry {
        match self {
            Self::Text(b) => &mut b.geometry,
            Self::Model(b) => &mut b.geometry,
            Self::Pipeline(b) => &mut b.geometry,
        }
    }

    pub fn as_text(&self) -> Option<&TextBlock> {
        match self {
            Self::Text(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_model(&self) -> Option<&ModelBlock> {
        match self {
            Self::Model(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_pipeline(&self) -> Option<&PipelineBlock> {
        match self {
            Self::Pipeline(b) => Some(b),
            _ => None,
        }
    }
}

/// A text block plugged into a prong of another text block.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProngAttachment {
    pub host: BlockId,
    pub prong_index: usize,
    pub source: BlockId,
}

/// The canvas-wide text selection, in character offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub block: BlockId,
    pub start: usize,
    pub end: usize,
}
