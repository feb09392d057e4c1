use serde::{Deserialize, Serialize};

use crate::error::CanvasError;
use crate::history::EntryKind;
use crate::model::{byte_offset, BlockId, CanvasDocument, ChangeReport, Geometry, RecordId, Sink, CONTINUATION_SEPARATOR};
use crate::template::BoundFeed;

/// Vertical gap between a pipeline and the generations stacked under it.
const CONTAINER_GAP: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RouteAction {
    /// Not an ok record; nothing to route.
    Skipped,
    Materialized { block: BlockId },
    Continued { target: BlockId },
    Bound { target: BlockId, prong_index: usize, feed: BoundFeed },
    Replaced { block: BlockId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteOutcome {
    pub action: RouteAction,
    pub changes: ChangeReport,
}

/// Delivers a committed generation to its pipeline's current sink.
pub fn route(document: &mut CanvasDocument, record_id: &RecordId) -> Result<RouteOutcome, CanvasError> {
    let record = document
        .record(record_id)
        .ok_or_else(|| CanvasError::UnknownRecord(record_id.clone()))?;
    if !record.status.is_ok() {
        return Ok(RouteOutcome {
            action: RouteAction::Skipped,
            changes: ChangeReport::default(),
        });
    }
    let output = record.output_text.clone();
    let pipeline_id = record.pipeline.clone();
    let pipeline = document.pipeline(&pipeline_id)?;
    let vanished = |target: &BlockId| CanvasError::InvalidSinkTarget(format!("`{target}` is no longer a text block"));

    match pipeline.output().sink().clone() {
        Sink::Container => {
            let geometry = container_slot(pipeline.geometry(), pipeline.output().generations(), record_id);
            let block = document.insert_text(&output, geometry, EntryKind::Generated { record: record_id.clone() });
            if let Some(record) = document.records.get_mut(record_id) {
                record.output_block = Some(block.clone());
            }
            Ok(RouteOutcome {
                action: RouteAction::Materialized { block: block.clone() },
                changes: ChangeReport {
                    created: vec![block],
                    ..ChangeReport::default()
                },
            })
        }
        Sink::Continuation { target } => {
            let current = document.text_block(&target).map_err(|_| vanished(&target))?.content();
            let appended = format!("{current}{CONTINUATION_SEPARATOR}{output}");
            let changes = document.replace_content(&target, &appended, EntryKind::Continuation { record: record_id.clone() });
            Ok(RouteOutcome {
                action: RouteAction::Continued { target },
                changes,
            })
        }
        Sink::InputProng { target, prong_index } => {
            let count = document.text_block(&target).map_err(|_| vanished(&target))?.prong_count();
            if prong_index >= count {
                return Err(CanvasError::InvalidSinkTarget(format!("`{target}` no longer has prong {prong_index}")));
            }
            let feed = BoundFeed {
                pipeline: pipeline_id,
                record: record_id.clone(),
                text: output,
            };
            Ok(RouteOutcome {
                action: RouteAction::Bound { target, prong_index, feed },
                changes: ChangeReport::default(),
            })
        }
        Sink::Select => {
            let selection = document.selection().cloned().ok_or(CanvasError::NoSelection)?;
            let content = document
                .text_block(&selection.block)
                .map_err(|_| vanished(&selection.block))?
                .content();
            let (from, to) = (byte_offset(content, selection.start), byte_offset(content, selection.end));
            let spliced = format!("{}{}{}", &content[..from], output, &content[to..]);
            let mut changes = document.replace_content(
                &selection.block,
                &spliced,
                EntryKind::SelectReplacement { record: record_id.clone() },
            );
            changes.merge(document.clear_selection());
            Ok(RouteOutcome {
                action: RouteAction::Replaced { block: selection.block },
                changes,
            })
        }
    }
}

/// Stacks container generations below the pipeline, one per record.
fn container_slot(pipeline: Geometry, generations: &[RecordId], record: &RecordId) -> Geometry {
    let defaults = Geometry::default();
    let position = generations.iter().position(|r| r == record).unwrap_or(generations.len());
    Geometry {
        x: pipeline.x,
        y: pipeline.y + pipeline.height + CONTAINER_GAP + position as f64 * (defaults.height + CONTAINER_GAP),
        ..defaults
    }
}
