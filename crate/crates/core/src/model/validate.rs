use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::block::{Block, BlockId, Sink};
use super::document::CanvasDocument;
use super::graph::{dependency_edges, find_cycle};
use super::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}", .problems.join("; "))]
pub struct IntegrityViolations {
    pub problems: Vec<String>,
    /// The dependency cycle, when one of the problems is a cycle.
    pub cycle: Option<Vec<BlockId>>,
}

impl CanvasDocument {
    /// Checks every document invariant and reports all violations found.
    pub fn validate(&self) -> Result<(), IntegrityViolations> {
        let mut problems = Vec::new();
        let mut fail = |message: String| problems.push(message);

        if self.schema_version != SCHEMA_VERSION {
            fail(format!("schema_version {} is not {SCHEMA_VERSION}", self.schema_version));
        }

        let is_text = |id: &BlockId| matches!(self.blocks.get(id), Some(Block::Text(_)));
        let prongs_of = |id: &BlockId| self.text_block(id).map_or(0, |t| t.prong_count());
        let mut nesting: BTreeMap<&BlockId, usize> = BTreeMap::new();
        let mut fed_prongs: BTreeSet<(&BlockId, usize)> = BTreeSet::new();

        for (key, block) in &self.blocks {
            let id = block.id();
            if key != id {
                fail(format!("block stored under `{key}` has id `{id}`"));
            }
            match id.counter() {
                Some(n) if n < self.next_block => {}
                _ => fail(format!("block id `{id}` was not allocated by this document")),
            }
            if let Err(e) = block.geometry().validate() {
                fail(format!("block `{id}`: {e}"));
            }
            match block {
                Block::Text(_) => {}
                Block::Model(model) => {
                    if let Err(e) = model.params.validate() {
                        fail(format!("model `{id}`: {e}"));
                    }
                }
                Block::Pipeline(pipeline) => {
                    if pipeline.text_slots.is_empty() || pipeline.model_slots.is_empty() {
                        fail(format!("pipeline `{id}` has an empty slot list"));
                    }
                    for slot in &pipeline.text_slots {
                        if !is_text(slot) {
                            fail(format!("pipeline `{id}` text slot `{slot}` is not a text block"));
                        }
                    }
                    for slot in &pipeline.model_slots {
                        if !matches!(self.blocks.get(slot), Some(Block::Model(_))) {
                            fail(format!("pipeline `{id}` model slot `{slot}` is not a model block"));
                        }
                    }
                    for slot in pipeline.text_slots.iter().chain(&pipeline.model_slots) {
                        *nesting.entry(slot).or_default() += 1;
                    }
                    let mut seen = BTreeSet::new();
                    for record in &pipeline.output.generations {
                        if !seen.insert(record) {
                            fail(format!("pipeline `{id}` lists generation `{record}` twice"));
                        }
                        match self.records.get(record) {
                            Some(r) if &r.pipeline == id => {}
                            Some(_) => fail(format!("generation `{record}` in `{id}` belongs to another pipeline")),
                            None => fail(format!("pipeline `{id}` lists unknown generation `{record}`")),
                        }
                    }
                    match &pipeline.output.sink {
                        Sink::Container | Sink::Select => {}
                        Sink::Continuation { target } => {
                            if !is_text(target) {
                                fail(format!("pipeline `{id}` continues into missing text block `{target}`"));
                            }
                        }
                        Sink::InputProng { target, prong_index } => {
                            if !is_text(target) {
                                fail(format!("pipeline `{id}` feeds missing text block `{target}`"));
                            } else if *prong_index >= prongs_of(target) {
                                fail(format!("pipeline `{id}` feeds prong {prong_index} of `{target}`, which does not exist"));
                            } else if self.attachment(target, *prong_index).is_some() {
                                fail(format!("prong {prong_index} of `{target}` is both attached and fed by `{id}`"));
                            }
                            if !fed_prongs.insert((target, *prong_index)) {
                                fail(format!("prong {prong_index} of `{target}` is fed by two pipelines"));
                            }
                        }
                    }
                }
            }
        }
        for (block, count) in nesting {
            if count > 1 {
                fail(format!("block `{block}` is a slot {count} times"));
            }
        }

        for pair in self.attachments.windows(2) {
            if (&pair[0].host, pair[0].prong_index) >= (&pair[1].host, pair[1].prong_index) {
                fail(format!(
                    "attachments are not sorted and unique at `{}` prong {}",
                    pair[1].host, pair[1].prong_index
                ));
            }
        }
        for attachment in &self.attachments {
            let (host, source) = (&attachment.host, &attachment.source);
            if !is_text(host) || !is_text(source) {
                fail(format!("attachment `{source}` -> `{host}` references a missing text block"));
            } else if host == source {
                fail(format!("block `{host}` is attached to itself"));
            } else if attachment.prong_index >= prongs_of(host) {
                fail(format!("attachment to missing prong {} of `{host}`", attachment.prong_index));
            }
        }
        let cycle = find_cycle(&dependency_edges(self));
        if let Some(cycle) = &cycle {
            let names: Vec<&str> = cycle.iter().map(BlockId::as_str).collect();
            fail(format!("dependency cycle {}", names.join(" -> ")));
        }

        if let Some(selection) = &self.selection {
            match self.text_block(&selection.block) {
                Ok(text) if selection.start <= selection.end && selection.end <= text.char_len() => {}
                Ok(_) => fail(format!("selection {}..{} is out of bounds", selection.start, selection.end)),
                Err(_) => fail(format!("selection is on missing text block `{}`", selection.block)),
            }
        }

        for text in self.text_blocks() {
            if !self.histories.contains_key(&text.id) {
                fail(format!("text block `{}` has no history", text.id));
            }
        }
        for (block, history) in &self.histories {
            let Ok(text) = self.text_block(block) else {
                fail(format!("history for missing text block `{block}`"));
                continue;
            };
            if let Err(e) = history.check() {
                fail(format!("history of `{block}`: {e}"));
            }
            if history.latest().map(|e| e.content_after.as_str()) != Some(text.content()) {
                fail(format!("latest history entry of `{block}` differs from its content"));
            }
            for record in history.record_refs() {
                if !self.records.contains_key(record) {
                    fail(format!("history of `{block}` references unknown generation `{record}`"));
                }
            }
        }

        for (key, record) in &self.records {
            if key != &record.id {
                fail(format!("generation stored under `{key}` has id `{}`", record.id));
            }
            match record.id.counter() {
                Some(n) if n < self.next_record => {}
                _ => fail(format!("generation id `{}` was not allocated by this document", record.id)),
            }
            if let Err(e) = record.params_snapshot.validate() {
                fail(format!("generation `{key}`: {e}"));
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(IntegrityViolations { problems, cycle })
        }
    }
}
