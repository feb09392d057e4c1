//! Serializable document operations.
//!
//! One [`Operation`] per structural interaction. The service, the CLI, and the
//! fuzz harnesses all funnel mutations through [`CanvasDocument::apply`], so a
//! script of operations means the same thing everywhere.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CanvasError;
use crate::model::{BlockId, CanvasDocument, ChangeReport, Geometry, ModelParams, Sink};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Operation {
    CreateText {
        content: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        geometry: Option<Geometry>,
    },
    CreateModel {
        #[serde(default)]
        params: ModelParams,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        geometry: Option<Geometry>,
    },
    CreatePipeline {
        text: BlockId,
        model: BlockId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        geometry: Option<Geometry>,
    },
    EditText {
        block: BlockId,
        content: String,
    },
    Move {
        block: BlockId,
        x: f64,
        y: f64,
    },
    Resize {
        block: BlockId,
        width: f64,
        height: f64,
    },
    Configure {
        block: BlockId,
        field: String,
        value: Value,
    },
    Concatenate {
        target: BlockId,
        source: BlockId,
    },
    Split {
        block: BlockId,
        start: usize,
        end: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        geometry: Option<Geometry>,
    },
    Attach {
        host: BlockId,
        prong_index: usize,
        source: BlockId,
    },
    Detach {
        host: BlockId,
        prong_index: usize,
    },
    Expand {
        pipeline: BlockId,
        block: BlockId,
    },
    ConnectOutput {
        pipeline: BlockId,
        sink: Sink,
    },
    Select {
        block: BlockId,
        start: usize,
        end: usize,
    },
    ClearSelection,
    Delete {
        block: BlockId,
    },
    Revert {
        block: BlockId,
        to_seq: u64,
    },
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CreateText { .. } => "create_text",
            Self::CreateModel { .. } => "create_model",
            Self::CreatePipeline { .. } => "create_pipeline",
            Self::EditText { .. } => "edit_text",
            Self::Move { .. } => "move",
            Self::Resize { .. } => "resize",
            Self::Configure { .. } => "configure",
            Self::Concatenate { .. } => "concatenate",
            Self::Split { .. } => "split",
            Self::Attach { .. } => "attach",
            Self::Detach { .. } => "detach",
            Self::Expand { .. } => "expand",
            Self::ConnectOutput { .. } => "connect_output",
            Self::Select { .. } => "select",
            Self::ClearSelection => "clear_selection",
            Self::Delete { .. } => "delete",
            Self::Revert { .. } => "revert",
        }
    }
}

fn created(id: BlockId) -> ChangeReport {
    ChangeReport {
        created: vec![id],
        ..ChangeReport::default()
    }
}

impl CanvasDocument {
    /// Applies `op`. On error the document is left exactly as it was.
    pub fn apply(&mut self, op: &Operation) -> Result<ChangeReport, CanvasError> {
        let before = self.clone();
        let result = self.apply_unchecked(op);
        if result.is_err() {
            *self = before;
        }
        result
    }

    fn apply_unchecked(&mut self, op: &Operation) -> Result<ChangeReport, CanvasError> {
        let geometry = |g: &Option<Geometry>| g.unwrap_or_default();
        match op {
            Operation::CreateText { content, geometry: g } => {
                self.create_text_block(content, geometry(g)).map(created)
            }
            Operation::CreateModel { params, geometry: g } => {
                self.create_model_block(params.clone(), geometry(g)).map(created)
            }
            Operation::CreatePipeline { text, model, geometry: g } => {
                self.create_pipeline(text, model, geometry(g)).map(created)
            }
            Operation::EditText { block, content } => self.edit_text(block, content),
            Operation::Move { block, x, y } => self.move_block(block, *x, *y),
            Operation::Resize { block, width, height } => self.resize_block(block, *width, *height),
            Operation::Configure { block, field, value } => self.configure_model(block, field, value),
            Operation::Concatenate { target, source } => self.concatenate(target, source),
            Operation::Split { block, start, end, geometry: g } => {
                self.split(block, *start, *end, geometry(g)).map(|(_, report)| report)
            }
            Operation::Attach { host, prong_index, source } => self.attach(host, *prong_index, source),
            Operation::Detach { host, prong_index } => self.detach(host, *prong_index),
            Operation::Expand { pipeline, block } => self.expand_pipeline(pipeline, block),
            Operation::ConnectOutput { pipeline, sink } => self.connect_output(pipeline, sink.clone()),
            Operation::Select { block, start, end } => self.set_selection(block, *start, *end),
            Operation::ClearSelection => Ok(self.clear_selection()),
            Operation::Delete { block } => self.delete_block(block),
            Operation::Revert { block, to_seq } => self.revert(block, *to_seq),
        }
    }
}
