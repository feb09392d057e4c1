use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::block::{Block, BlockId, ModelBlock, PipelineBlock, ProngAttachment, RecordId, Selection, Sink, TextBlock};
use super::SCHEMA_VERSION;
use crate::engine::GenerationRecord;
use crate::error::CanvasError;
use crate::history::History;

/// Time source for history entries and generation records.
#[derive(Clone)]
pub struct Clock(Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>);

impl Clock {
    pub fn system() -> Self {
        Self(Arc::new(Utc::now))
    }

    /// A clock frozen at `at`; used to make documents byte-reproducible.
    pub fn fixed(at: DateTime<Utc>) -> Self {
        Self(Arc::new(move || at))
    }

    pub fn now(&self) -> DateTime<Utc> {
        (self.0)()
    }
}

impl Default for Clock {
    fn default() -> Self {
        Self::system()
    }
}

impl fmt::Debug for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Clock")
    }
}

// The clock is not document state.
impl PartialEq for Clock {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// What a mutation touched, for event streams and callers that need to
/// refresh derived views.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeReport {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub created: Vec<BlockId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub changed: Vec<BlockId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deleted: Vec<BlockId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detached: Vec<ProngAttachment>,
    /// Pipelines whose sink fell back to the container.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sinks_reset: Vec<BlockId>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub selection_cleared: bool,
}

impl ChangeReport {
    pub fn touch(&mut self, block: &BlockId) {
        if !self.changed.contains(block) {
            self.changed.push(block.clone());
        }
    }

    /// Folds `other` into `self`, keeping ids unique in `created` and `changed`.
    pub fn merge(&mut self, other: ChangeReport) {
        for id in other.created {
            if !self.created.contains(&id) {
                self.created.push(id);
            }
        }
        for id in other.changed {
            self.touch(&id);
        }
        self.deleted.extend(other.deleted);
        self.detached.extend(other.detached);
        self.sinks_reset.extend(other.sinks_reset);
        self.selection_cleared |= other.selection_cleared;
    }
}

/// The complete persistent state of one canvas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanvasDocument {
    pub(crate) schema_version: u32,
    pub(crate) id: String,
    pub(crate) title: String,
    pub(crate) next_block: u64,
    pub(crate) next_record: u64,
    pub(crate) blocks: BTreeMap<BlockId, Block>,
    pub(crate) attachments: Vec<ProngAttachment>,
    pub(crate) selection: Option<Selection>,
    pub(crate) histories: BTreeMap<BlockId, History>,
    pub(crate) records: BTreeMap<RecordId, GenerationRecord>,
    #[serde(skip)]
    pub(crate) clock: Clock,
}

impl CanvasDocument {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: id.into(),
            title: title.into(),
            next_block: 1,
            next_record: 1,
            blocks: BTreeMap::new(),
            attachments: Vec::new(),
            selection: None,
            histories: BTreeMap::new(),
            records: BTreeMap::new(),
            clock: Clock::system(),
        }
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn set_clock(&mut self, clock: Clock) {
        self.clock = clock;
    }

    pub fn schema_version(&self) -> u32 {
        self.schema_version
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn set_title(&mut self, title: impl Into<String>) {
        self.title = title.into();
    }

    pub fn block(&self, id: &BlockId) -> Option<&Block> {
        self.blocks.get(id)
    }

    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.values()
    }

    pub fn block_ids(&self) -> impl Iterator<Item = &BlockId> {
        self.blocks.keys()
    }

    pub fn text_blocks(&self) -> impl Iterator<Item = &TextBlock> {
        self.blocks.values().filter_map(Block::as_text)
    }

    pub fn model_blocks(&self) -> impl Iterator<Item = &ModelBlock> {
        self.blocks.values().filter_map(Block::as_model)
    }

    pub fn pipelines(&self) -> impl Iterator<Item = &PipelineBlock> {
        self.blocks.values().filter_map(Block::as_pipeline)
    }

    pub fn text_block(&self, id: &BlockId) -> Result<&TextBlock, CanvasError> {
        match self.blocks.get(id) {
            Some(Block::Text(text)) => Ok(text),
            Some(_) => Err(CanvasError::NotATextBlock(id.clone())),
            None => Err(CanvasError::UnknownBlock(id.clone())),
        }
    }

    pub fn model_block(&self, id: &BlockId) -> Result<&ModelBlock, CanvasError> {
        match self.blocks.get(id) {
            Some(Block::Model(model)) => Ok(model),
            Some(other) => Err(wrong_kind(other, "model")),
            None => Err(CanvasError::UnknownBlock(id.clone())),
        }
    }

    pub fn pipeline(&self, id: &BlockId) -> Result<&PipelineBlock, CanvasError> {
        match self.blocks.get(id) {
            Some(Block::Pipeline(pipeline)) => Ok(pipeline),
            Some(other) => Err(wrong_kind(other, "pipeline")),
            None => Err(CanvasError::UnknownBlock(id.clone())),
        }
    }

    /// Attachments sorted by `(host, prong_index)`.
    pub fn attachments(&self) -> &[ProngAttachment] {
        &self.attachments
    }

    pub fn attachment(&self, host: &BlockId, prong_index: usize) -> Option<&BlockId> {
        self.attachment_position(host, prong_index)
            .ok()
            .map(|i| &self.attachments[i].source)
    }

    pub(crate) fn attachment_position(&self, host: &BlockId, prong_index: usize) -> Result<usize, usize> {
        self.attachments
            .binary_search_by(|a| (&a.host, a.prong_index).cmp(&(host, prong_index)))
    }

    pub fn selection(&self) -> Option<&Selection> {
        self.selection.as_ref()
    }

    pub fn selected_text(&self) -> Option<String> {
        let selection = self.selection.as_ref()?;
        let text = self.text_block(&selection.block).ok()?;
        Some(
            text.content
                .chars()
                .skip(selection.start)
                .take(selection.end - selection.start)
                .collect(),
        )
    }

    pub fn history(&self, block: &BlockId) -> Option<&History> {
        self.histories.get(block)
    }

    pub fn records(&self) -> impl Iterator<Item = &GenerationRecord> {
        self.records.values()
    }

    pub fn record(&self, id: &RecordId) -> Option<&GenerationRecord> {
        self.records.get(id)
    }

    /// The pipeline holding `block` in one of its slots.
    pub fn nesting_pipeline(&self, block: &BlockId) -> Option<&BlockId> {
        self.pipelines().find(|p| p.has_slot(block)).map(|p| &p.id)
    }

    /// The pipeline whose output feeds `prong_index` of `host`.
    pub fn prong_feeder(&self, host: &BlockId, prong_index: usize) -> Option<&BlockId> {
        self.pipelines()
            .find(|p| {
                matches!(&p.output.sink, Sink::InputProng { target, prong_index: i } if target == host && *i == prong_index)
            })
            .map(|p| &p.id)
    }

    pub(crate) fn now(&self) -> DateTime<Utc> {
        self.clock.now()
    }

    pub(crate) fn alloc_block_id(&mut self) -> BlockId {
        let id = BlockId::from_counter(self.next_block);
        self.next_block += 1;
        id
    }

    pub(crate) fn alloc_record_id(&mut self) -> RecordId {
        let id = RecordId::from_counter(self.next_record);
        self.next_record += 1;
        id
    }

    pub(crate) fn text_mut(&mut self, id: &BlockId) -> Result<&mut TextBlock, CanvasError> {
        match self.blocks.get_mut(id) {
            Some(Block::Text(text)) => Ok(text),
            Some(_) => Err(CanvasError::NotATextBlock(id.clone())),
            None => Err(CanvasError::UnknownBlock(id.clone())),
        }
    }

    pub(crate) fn pipeline_mut(&mut self, id: &BlockId) -> Result<&mut PipelineBlock, CanvasError> {
        match self.blocks.get_mut(id) {
            Some(Block::Pipeline(pipeline)) => Ok(pipeline),
            Some(other) => Err(wrong_kind(other, "pipeline")),
            None => Err(CanvasError::UnknownBlock(id.clone())),
        }
    }

    pub(crate) fn pipelines_mut(&mut self) -> impl Iterator<Item = &mut PipelineBlock> {
        self.blocks.values_mut().filter_map(|b| match b {
            Block::Pipeline(p) => Some(p),
            _ => None,
        })
    }

    /// Replaces a pipeline's sink without any checks. Only for constructing
    /// invalid documents in tests of the planner and validator.
    #[doc(hidden)]
    pub fn force_sink(&mut self, pipeline: &BlockId, sink: Sink) -> Result<(), CanvasError> {
        self.pipeline_mut(pipeline)?.output.sink = sink;
        Ok(())
    }
}

pub(crate) fn wrong_kind(block: &Block, expected: &'static str) -> CanvasError {
    CanvasError::WrongBlockKind {
        block: block.id().clone(),
        expected,
        found: block.kind().as_str(),
    }
}
