use serde_json::Value;

use super::block::{Block, BlockId, BlockKind, Geometry, ModelBlock, OutputContainer, PipelineBlock, ProngAttachment, Selection, Sink, TextBlock};
use super::document::{wrong_kind, CanvasDocument, ChangeReport};
use super::graph::{dependency_edges, find_cycle};
use super::params::ModelParams;
use super::CONCATENATE_SEPARATOR;
use crate::engine::GenerationRecord;
use crate::error::CanvasError;
use crate::history::{EntryKind, History};
use crate::template::{command_tokens, CommandKind};

/// Where a prong of a split block ends up.
#[derive(Clone, Copy)]
enum ProngHome {
    Kept(usize),
    Moved(usize),
}

pub(crate) fn byte_offset(content: &str, chars: usize) -> usize {
    content.char_indices().nth(chars).map_or(content.len(), |(i, _)| i)
}

impl CanvasDocument {
    pub fn create_text_block(&mut self, content: &str, geometry: Geometry) -> Result<BlockId, CanvasError> {
        geometry.validate()?;
        Ok(self.insert_text(content, geometry, EntryKind::Created))
    }

    pub(crate) fn insert_text(&mut self, content: &str, geometry: Geometry, kind: EntryKind) -> BlockId {
        let id = self.alloc_block_id();
        self.blocks.insert(
            id.clone(),
            Block::Text(TextBlock {
                id: id.clone(),
                content: content.to_string(),
                geometry,
            }),
        );
        let history = History::start(kind, content, self.now());
        self.histories.insert(id.clone(), history);
        id
    }

    pub fn edit_text(&mut self, block: &BlockId, new_content: &str) -> Result<ChangeReport, CanvasError> {
        self.text_block(block)?;
        Ok(self.replace_content(block, new_content, EntryKind::Edited))
    }

    /// Sets the content of an existing text block, records it in the block's
    /// history, and drops whatever the new content no longer supports:
    /// attachments and chained sinks on vanished prongs, and the selection
    /// when the selected text or anything before it changed.
    pub(crate) fn replace_content(&mut self, block: &BlockId, new_content: &str, kind: EntryKind) -> ChangeReport {
        let now = self.now();
        let Ok(text) = self.text_mut(block) else {
            return ChangeReport::default();
        };
        let old = std::mem::replace(&mut text.content, new_content.to_string());
        if let Some(history) = self.histories.get_mut(block) {
            history.record(kind, new_content, now);
        }
        let mut report = ChangeReport::default();
        report.touch(block);
        self.drop_vanished_prongs(block, &mut report);
        if let Some(selection) = &self.selection {
            let prefix = &old[..byte_offset(&old, selection.end)];
            if &selection.block == block && !new_content.starts_with(prefix) {
                self.selection = None;
                report.selection_cleared = true;
            }
        }
        report
    }

    fn drop_vanished_prongs(&mut self, block: &BlockId, report: &mut ChangeReport) {
        let count = self.text_block(block).map_or(0, TextBlock::prong_count);
        let (kept, detached): (Vec<_>, Vec<_>) = std::mem::take(&mut self.attachments)
            .into_iter()
            .partition(|a| &a.host != block || a.prong_index < count);
        self.attachments = kept;
        report.detached.extend(detached);
        for pipeline in self.pipelines_mut() {
            if matches!(&pipeline.output.sink, Sink::InputProng { target, prong_index } if target == block && *prong_index >= count) {
                pipeline.output.sink = Sink::Container;
                report.sinks_reset.push(pipeline.id.clone());
            }
        }
        for id in report.sinks_reset.clone() {
            report.touch(&id);
        }
    }

    /// Drops `source` into `target`: the contents are joined with
    /// [`CONCATENATE_SEPARATOR`] and everything wired to `source` is rewired
    /// to `target`, with prong indices shifted past `target`'s own prongs.
    pub fn concatenate(&mut self, target: &BlockId, source: &BlockId) -> Result<ChangeReport, CanvasError> {
        if target == source {
            return Err(CanvasError::SameBlock(target.clone()));
        }
        let shift = self.text_block(target)?.prong_count();
        let target_chars = self.text_block(target)?.char_len();
        self.text_block(source)?;
        if let Some(pipeline) = self.nesting_pipeline(source) {
            return Err(CanvasError::SourceNested {
                block: source.clone(),
                pipeline: pipeline.clone(),
            });
        }
        let rename = |id: &BlockId| if id == source { target.clone() } else { id.clone() };
        let merged: Vec<_> = dependency_edges(self)
            .iter()
            .map(|(from, to)| (rename(from), rename(to)))
            .collect();
        if find_cycle(&merged).is_some() {
            return Err(CanvasError::WouldCreateCycle {
                from: source.clone(),
                to: target.clone(),
            });
        }

        let Some(Block::Text(absorbed)) = self.blocks.remove(source) else {
            unreachable!("source checked to be a text block");
        };
        let mut report = ChangeReport::default();
        for attachment in &mut self.attachments {
            if &attachment.host == source {
                attachment.host = target.clone();
                attachment.prong_index += shift;
            }
            if &attachment.source == source {
                attachment.source = target.clone();
            }
        }
        self.attachments.sort();
        for pipeline in self.pipelines_mut() {
            let rewired = match &pipeline.output.sink {
                Sink::Continuation { target: t } if t == source => Some(Sink::Continuation { target: target.clone() }),
                Sink::InputProng { target: t, prong_index } if t == source => Some(Sink::InputProng {
                    target: target.clone(),
                    prong_index: prong_index + shift,
                }),
                _ => None,
            };
            if let Some(sink) = rewired {
                pipeline.output.sink = sink;
                report.changed.push(pipeline.id.clone());
            }
        }
        if let Some(selection) = &mut self.selection {
            if &selection.block == source {
                let offset = target_chars + CONCATENATE_SEPARATOR.chars().count();
                selection.block = target.clone();
                selection.start += offset;
                selection.end += offset;
            }
        }

        let now = self.now();
        let text = self.text_mut(target)?;
        text.content.push_str(CONCATENATE_SEPARATOR);
        text.content.push_str(&absorbed.content);
        let content = text.content.clone();
        let absorbed_history = self.histories.remove(source).unwrap_or_default();
        if let Some(history) = self.histories.get_mut(target) {
            history.absorb(source.clone(), absorbed_history);
            history.record(EntryKind::Absorbed { source: source.clone() }, &content, now);
        }
        report.touch(target);
        report.deleted.push(source.clone());
        Ok(report)
    }

    /// Moves characters `start..end` of `block` into a new text block. Prongs,
    /// their attachments, and chained sinks follow their token.
    pub fn split(
        &mut self,
        block: &BlockId,
        start: usize,
        end: usize,
        geometry: Geometry,
    ) -> Result<(BlockId, ChangeReport), CanvasError> {
        let text = self.text_block(block)?;
        let len = text.char_len();
        if start >= end || end > len {
            return Err(CanvasError::RangeOutOfBounds {
                block: block.clone(),
                start,
                end,
                len,
            });
        }
        geometry.validate()?;
        let splits_token = || CanvasError::SplitsCommandToken {
            block: block.clone(),
            start,
            end,
        };
        let tokens = command_tokens(&text.content);
        let inside = |t: &crate::template::CommandToken| t.start >= start && t.end <= end;
        if tokens.iter().any(|t| t.start < end && t.end > start && !inside(t)) {
            return Err(splits_token());
        }
        let (from, to) = (byte_offset(&text.content, start), byte_offset(&text.content, end));
        let piece = text.content[from..to].to_string();
        let remainder = format!("{}{}", &text.content[..from], &text.content[to..]);
        // Joining the two sides must not forge a new command across the seam.
        if command_tokens(&remainder).len() != tokens.iter().filter(|t| !inside(t)).count() {
            return Err(splits_token());
        }
        let (mut kept, mut moved) = (0, 0);
        let homes: Vec<ProngHome> = tokens
            .iter()
            .filter(|t| t.kind == CommandKind::Input)
            .map(|t| {
                if inside(t) {
                    moved += 1;
                    ProngHome::Moved(moved - 1)
                } else {
                    kept += 1;
                    ProngHome::Kept(kept - 1)
                }
            })
            .collect();

        let new_id = self.insert_text(&piece, geometry, EntryKind::SplitOut { from: block.clone() });
        let mut report = ChangeReport {
            created: vec![new_id.clone()],
            ..ChangeReport::default()
        };
        for attachment in &mut self.attachments {
            if &attachment.host == block {
                match homes[attachment.prong_index] {
                    ProngHome::Kept(i) => attachment.prong_index = i,
                    ProngHome::Moved(i) => {
                        attachment.host = new_id.clone();
                        attachment.prong_index = i;
                    }
                }
            }
        }
        self.attachments.sort();
        for pipeline in self.pipelines_mut() {
            if let Sink::InputProng { target, prong_index } = &mut pipeline.output.sink {
                if target == block {
                    match homes[*prong_index] {
                        ProngHome::Kept(i) => *prong_index = i,
                        ProngHome::Moved(i) => {
                            *target = new_id.clone();
                            *prong_index = i;
                        }
                    }
                    report.changed.push(pipeline.id.clone());
                }
            }
        }
        if let Some(selection) = self.selection.clone() {
            if &selection.block == block && selection.end > start {
                if selection.start >= end {
                    self.selection = Some(Selection {
                        start: selection.start - (end - start),
                        end: selection.end - (end - start),
                        ..selection
                    });
                } else if selection.start >= start && selection.end <= end {
                    self.selection = Some(Selection {
                        block: new_id.clone(),
                        start: selection.start - start,
                        end: selection.end - start,
                    });
                } else {
                    self.selection = None;
                    report.selection_cleared = true;
                }
            }
        }

        let now = self.now();
        self.text_mut(block)?.content = remainder.clone();
        if let Some(history) = self.histories.get_mut(block) {
            history.record(EntryKind::Split { into: new_id.clone() }, &remainder, now);
        }
        report.touch(block);
        Ok((new_id, report))
    }

    pub fn create_model_block(&mut self, params: ModelParams, geometry: Geometry) -> Result<BlockId, CanvasError> {
        params.validate()?;
        geometry.validate()?;
        let id = self.alloc_block_id();
        self.blocks.insert(id.clone(), Block::Model(ModelBlock { id: id.clone(), params, geometry }));
        Ok(id)
    }

    pub fn configure_model(&mut self, block: &BlockId, field: &str, value: &Value) -> Result<ChangeReport, CanvasError> {
        let params = self.model_block(block)?.params.with_field(field, value)?;
        if let Some(Block::Model(model)) = self.blocks.get_mut(block) {
            model.params = params;
        }
        Ok(ChangeReport {
            changed: vec![block.clone()],
            ..ChangeReport::default()
        })
    }

    fn expect_kind(&self, block: &BlockId, kind: BlockKind) -> Result<(), CanvasError> {
        match self.blocks.get(block) {
            None => Err(CanvasError::UnknownBlock(block.clone())),
            Some(b) if b.kind() == kind => Ok(()),
            Some(b) => Err(wrong_kind(b, kind.as_str())),
        }
    }

    fn ensure_free(&self, block: &BlockId) -> Result<(), CanvasError> {
        match self.nesting_pipeline(block) {
            Some(pipeline) => Err(CanvasError::AlreadyNested {
                block: block.clone(),
                pipeline: pipeline.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn create_pipeline(&mut self, text: &BlockId, model: &BlockId, geometry: Geometry) -> Result<BlockId, CanvasError> {
        self.expect_kind(text, BlockKind::Text)?;
        self.expect_kind(model, BlockKind::Model)?;
        self.ensure_free(text)?;
        self.ensure_free(model)?;
        geometry.validate()?;
        let id = self.alloc_block_id();
        self.blocks.insert(
            id.clone(),
            Block::Pipeline(PipelineBlock {
                id: id.clone(),
                text_slots: vec![text.clone()],
                model_slots: vec![model.clone()],
                output: OutputContainer::default(),
                geometry,
            }),
        );
        Ok(id)
    }

    pub fn expand_pipeline(&mut self, pipeline: &BlockId, block: &BlockId) -> Result<ChangeReport, CanvasError> {
        let target = self.pipeline(pipeline)?;
        let kind = match self.blocks.get(block) {
            None => return Err(CanvasError::UnknownBlock(block.clone())),
            Some(Block::Pipeline(_)) => {
                return Err(CanvasError::WrongBlockKind {
                    block: block.clone(),
                    expected: "text or model",
                    found: "pipeline",
                })
            }
            Some(b) => b.kind(),
        };
        if target.has_slot(block) {
            return Err(CanvasError::DuplicateSlot {
                pipeline: pipeline.clone(),
                block: block.clone(),
            });
        }
        self.ensure_free(block)?;
        if kind == BlockKind::Text {
            let mut edges = dependency_edges(self);
            edges.push((block.clone(), pipeline.clone()));
            if find_cycle(&edges).is_some() {
                return Err(CanvasError::WouldCreateCycle {
                    from: block.clone(),
                    to: pipeline.clone(),
                });
            }
        }
        let target = self.pipeline_mut(pipeline)?;
        match kind {
            BlockKind::Text => target.text_slots.push(block.clone()),
            _ => target.model_slots.push(block.clone()),
        }
        Ok(ChangeReport {
            changed: vec![pipeline.clone()],
            ..ChangeReport::default()
        })
    }

    pub fn connect_output(&mut self, pipeline: &BlockId, sink: Sink) -> Result<ChangeReport, CanvasError> {
        self.pipeline(pipeline)?;
        let sink_text = |id: &BlockId| match self.text_block(id) {
            Err(CanvasError::NotATextBlock(id)) => Err(CanvasError::InvalidSinkTarget(format!("`{id}` is not a text block"))),
            other => other,
        };
        match &sink {
            Sink::Container | Sink::Select => {}
            Sink::Continuation { target } => {
                sink_text(target)?;
            }
            Sink::InputProng { target, prong_index } => {
                let count = sink_text(target)?.prong_count();
                if *prong_index >= count {
                    return Err(CanvasError::InvalidSinkTarget(format!(
                        "`{target}` has {count} prongs, no prong {prong_index}"
                    )));
                }
                if self.attachment(target, *prong_index).is_some() {
                    return Err(CanvasError::InvalidSinkTarget(format!(
                        "prong {prong_index} of `{target}` already has an attachment"
                    )));
                }
                if let Some(feeder) = self.prong_feeder(target, *prong_index) {
                    if feeder != pipeline {
                        return Err(CanvasError::InvalidSinkTarget(format!(
                            "prong {prong_index} of `{target}` is already fed by `{feeder}`"
                        )));
                    }
                }
                let mut edges: Vec<_> = dependency_edges(self)
                    .into_iter()
                    .filter(|(from, to)| !(from == pipeline && self.block(to).is_some_and(|b| b.kind() == BlockKind::Text)))
                    .collect();
                edges.push((pipeline.clone(), target.clone()));
                if find_cycle(&edges).is_some() {
                    return Err(CanvasError::WouldCreateCycle {
                        from: pipeline.clone(),
                        to: target.clone(),
                    });
                }
            }
        }
        self.pipeline_mut(pipeline)?.output.sink = sink;
        Ok(ChangeReport {
            changed: vec![pipeline.clone()],
            ..ChangeReport::default()
        })
    }

    /// Plugs `source` into prong `prong_index` of `host`, replacing any
    /// block already attached there.
    pub fn attach(&mut self, host: &BlockId, prong_index: usize, source: &BlockId) -> Result<ChangeReport, CanvasError> {
        if host == source {
            return Err(CanvasError::SameBlock(host.clone()));
        }
        let count = self.text_block(host)?.prong_count();
        self.text_block(source)?;
        if prong_index >= count {
            return Err(CanvasError::UnknownProng {
                host: host.clone(),
                index: prong_index,
                count,
            });
        }
        if self.prong_feeder(host, prong_index).is_some() {
            return Err(CanvasError::ProngOccupied {
                host: host.clone(),
                index: prong_index,
            });
        }
        // The replaced attachment's edge goes away.
        let replaced = self.attachment(host, prong_index).map(|p| (p.clone(), host.clone()));
        let mut edges: Vec<_> = dependency_edges(self)
            .into_iter()
            .filter(|edge| Some(edge) != replaced.as_ref())
            .collect();
        edges.push((source.clone(), host.clone()));
        if find_cycle(&edges).is_some() {
            return Err(CanvasError::WouldCreateCycle {
                from: source.clone(),
                to: host.clone(),
            });
        }
        let mut report = ChangeReport {
            changed: vec![host.clone()],
            ..ChangeReport::default()
        };
        let attachment = ProngAttachment {
            host: host.clone(),
            prong_index,
            source: source.clone(),
        };
        match self.attachment_position(host, prong_index) {
            Ok(i) => report.detached.push(std::mem::replace(&mut self.attachments[i], attachment)),
            Err(i) => self.attachments.insert(i, attachment),
        }
        Ok(report)
    }

    pub fn detach(&mut self, host: &BlockId, prong_index: usize) -> Result<ChangeReport, CanvasError> {
        let count = self.text_block(host)?.prong_count();
        if prong_index >= count {
            return Err(CanvasError::UnknownProng {
                host: host.clone(),
                index: prong_index,
                count,
            });
        }
        let mut report = ChangeReport {
            changed: vec![host.clone()],
            ..ChangeReport::default()
        };
        if let Ok(i) = self.attachment_position(host, prong_index) {
            report.detached.push(self.attachments.remove(i));
        }
        Ok(report)
    }

    /// Removes a block and every reference to it. Pipelines left without a
    /// text or model slot are deleted as well.
    pub fn delete_block(&mut self, block: &BlockId) -> Result<ChangeReport, CanvasError> {
        let removed = self
            .blocks
            .remove(block)
            .ok_or_else(|| CanvasError::UnknownBlock(block.clone()))?;
        let mut report = ChangeReport {
            deleted: vec![block.clone()],
            ..ChangeReport::default()
        };
        if let Block::Text(_) = removed {
            let (kept, detached): (Vec<_>, Vec<_>) = std::mem::take(&mut self.attachments)
                .into_iter()
                .partition(|a| &a.host != block && &a.source != block);
            self.attachments = kept;
            for attachment in &detached {
                if &attachment.host != block {
                    report.touch(&attachment.host);
                }
            }
            report.detached = detached;
            for pipeline in self.pipelines_mut() {
                if pipeline.output.sink.target() == Some(block) {
                    pipeline.output.sink = Sink::Container;
                    report.sinks_reset.push(pipeline.id.clone());
                }
            }
            if self.selection.as_ref().is_some_and(|s| &s.block == block) {
                self.selection = None;
                report.selection_cleared = true;
            }
            self.histories.remove(block);
        }
        if !matches!(removed, Block::Pipeline(_)) {
            let mut emptied = Vec::new();
            for pipeline in self.pipelines_mut() {
                if pipeline.has_slot(block) {
                    pipeline.text_slots.retain(|id| id != block);
                    pipeline.model_slots.retain(|id| id != block);
                    if pipeline.text_slots.is_empty() || pipeline.model_slots.is_empty() {
                        emptied.push(pipeline.id.clone());
                    } else {
                        report.changed.push(pipeline.id.clone());
                    }
                }
            }
            for id in emptied {
                self.blocks.remove(&id);
                report.deleted.push(id);
            }
        }
        for id in report.sinks_reset.clone() {
            if !report.deleted.contains(&id) {
                report.touch(&id);
            }
        }
        report.sinks_reset.retain(|id| !report.deleted.contains(id));
        Ok(report)
    }

    pub fn set_selection(&mut self, block: &BlockId, start: usize, end: usize) -> Result<ChangeReport, CanvasError> {
        let len = self.text_block(block)?.char_len();
        if start > end || end > len {
            return Err(CanvasError::RangeOutOfBounds {
                block: block.clone(),
                start,
                end,
                len,
            });
        }
        self.selection = Some(Selection {
            block: block.clone(),
            start,
            end,
        });
        Ok(ChangeReport::default())
    }

    pub fn clear_selection(&mut self) -> ChangeReport {
        ChangeReport {
            selection_cleared: self.selection.take().is_some(),
            ..ChangeReport::default()
        }
    }

    pub fn move_block(&mut self, block: &BlockId, x: f64, y: f64) -> Result<ChangeReport, CanvasError> {
        let current = self
            .block(block)
            .ok_or_else(|| CanvasError::UnknownBlock(block.clone()))?
            .geometry();
        self.set_geometry(block, Geometry { x, y, ..current })
    }

    pub fn resize_block(&mut self, block: &BlockId, width: f64, height: f64) -> Result<ChangeReport, CanvasError> {
        let current = self
            .block(block)
            .ok_or_else(|| CanvasError::UnknownBlock(block.clone()))?
            .geometry();
        self.set_geometry(block, Geometry { width, height, ..current })
    }

    fn set_geometry(&mut self, block: &BlockId, geometry: Geometry) -> Result<ChangeReport, CanvasError> {
        geometry.validate()?;
        let target = self
            .blocks
            .get_mut(block)
            .ok_or_else(|| CanvasError::UnknownBlock(block.clone()))?;
        *target.geometry_mut() = geometry;
        Ok(ChangeReport {
            changed: vec![block.clone()],
            ..ChangeReport::default()
        })
    }

    /// Restores the content recorded at `to_seq`. The revert is itself
    /// appended to the history.
    pub fn revert(&mut self, block: &BlockId, to_seq: u64) -> Result<ChangeReport, CanvasError> {
        self.text_block(block)?;
        let content = self
            .histories
            .get(block)
            .and_then(|h| h.entry(to_seq))
            .map(|e| e.content_after.clone())
            .ok_or_else(|| CanvasError::UnknownSeq {
                block: block.clone(),
                seq: to_seq,
            })?;
        Ok(self.replace_content(block, &content, EntryKind::Reverted { to_seq }))
    }

    /// The generation that produced history entry `seq` of `block`, if any.
    pub fn provenance(&self, block: &BlockId, seq: u64) -> Result<Option<&GenerationRecord>, CanvasError> {
        self.text_block(block)?;
        let entry = self
            .histories
            .get(block)
            .and_then(|h| h.entry(seq))
            .ok_or_else(|| CanvasError::UnknownSeq {
                block: block.clone(),
                seq,
            })?;
        Ok(entry.kind.record().and_then(|r| self.records.get(r)))
    }
}
