//! The block template language.
//!
//! Text-block content is literal text interleaved with two commands:
//! `[[input]]` opens an input prong that another text block (or a chained
//! pipeline) fills, and `[[select]]` opens a hole filled by the current canvas
//! selection. Tokens match exactly and case-sensitively; anything else,
//! including near misses such as `[[input]` or `[[Input]]`, is literal.
//!
//! Parsing is lossless: [`render_template`] of [`parse_template`] reproduces
//! the source string.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CanvasError;
use crate::model::{BlockId, CanvasDocument, RecordId, Selection};

pub const INPUT_TOKEN: &str = "[[input]]";
pub const SELECT_TOKEN: &str = "[[select]]";

/// Attachment chains deeper than this indicate a cycle that slipped past the
/// document invariants.
pub const MAX_RESOLUTION_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum TemplateSegment {
    Literal(String),
    /// Ordinal of the `[[input]]` occurrence, left to right from 0.
    InputProng(usize),
    /// Ordinal of the `[[select]]` occurrence, left to right from 0.
    SelectHole(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Input,
    Select,
}

impl CommandKind {
    pub fn token(self) -> &'static str {
        match self {
            Self::Input => INPUT_TOKEN,
            Self::Select => SELECT_TOKEN,
        }
    }
}

/// A command occurrence located by character offsets `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CommandToken {
    pub kind: CommandKind,
    /// Ordinal among tokens of the same kind.
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

fn command_at(rest: &str) -> Option<CommandKind> {
    if rest.starts_with(INPUT_TOKEN) {
        Some(CommandKind::Input)
    } else if rest.starts_with(SELECT_TOKEN) {
        Some(CommandKind::Select)
    } else {
        None
    }
}

/// Byte ranges of every command, in textual order.
fn scan(content: &str) -> Vec<(CommandKind, usize, usize)> {
    let mut found = Vec::new();
    let mut cursor = 0;
    while let Some(offset) = content[cursor..].find("[[") {
        let at = cursor + offset;
        match command_at(&content[at..]) {
            Some(kind) => {
                let end = at + kind.token().len();
                found.push((kind, at, end));
                cursor = end;
            }
            None => cursor = at + 1,
        }
    }
    found
}

pub fn parse_template(content: &str) -> Vec<TemplateSegment> {
    let mut segments = Vec::new();
    let (mut prongs, mut holes) = (0, 0);
    let mut literal_start = 0;
    for (kind, start, end) in scan(content) {
        if start > literal_start {
            segments.push(TemplateSegment::Literal(content[literal_start..start].to_string()));
        }
        segments.push(match kind {
            CommandKind::Input => {
                prongs += 1;
                TemplateSegment::InputProng(prongs - 1)
            }
            CommandKind::Select => {
                holes += 1;
                TemplateSegment::SelectHole(holes - 1)
            }
        });
        literal_start = end;
    }
    if literal_start < content.len() {
        segments.push(TemplateSegment::Literal(content[literal_start..].to_string()));
    }
    segments
}

pub fn render_template(segments: &[TemplateSegment]) -> String {
    segments
        .iter()
        .map(|segment| match segment {
            TemplateSegment::Literal(text) => text.as_str(),
            TemplateSegment::InputProng(_) => INPUT_TOKEN,
            TemplateSegment::SelectHole(_) => SELECT_TOKEN,
        })
        .collect()
}

/// Command tokens with character (not byte) offsets.
pub fn command_tokens(content: &str) -> Vec<CommandToken> {
    let mut tokens = Vec::new();
    let (mut prongs, mut holes) = (0, 0);
    let mut chars_before = 0;
    let mut last_byte = 0;
    for (kind, start, end) in scan(content) {
        chars_before += content[last_byte..start].chars().count();
        let index = match kind {
            CommandKind::Input => {
                prongs += 1;
                prongs - 1
            }
            CommandKind::Select => {
                holes += 1;
                holes - 1
            }
        };
        let len = kind.token().len();
        tokens.push(CommandToken {
            kind,
            index,
            start: chars_before,
            end: chars_before + len,
        });
        chars_before += len;
        last_byte = end;
    }
    tokens
}

pub fn prong_count(content: &str) -> usize {
    scan(content).iter().filter(|(kind, ..)| *kind == CommandKind::Input).count()
}

pub fn select_count(content: &str) -> usize {
    scan(content).iter().filter(|(kind, ..)| *kind == CommandKind::Select).count()
}

/// Output of an upstream pipeline bound to a prong for the duration of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundFeed {
    pub pipeline: BlockId,
    pub record: RecordId,
    pub text: String,
}

/// Transient prong bindings keyed by `(host block, prong index)`.
pub type Bindings = BTreeMap<(BlockId, usize), BoundFeed>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SubstitutionSource {
    /// Resolved content of an attached text block.
    Block { block: BlockId },
    /// Output of a chained pipeline.
    Pipeline { pipeline: BlockId, record: RecordId },
    /// The canvas selection.
    Selection { selection: Selection },
}

/// One filled prong or hole, including those filled inside attached blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub host: BlockId,
    pub segment: TemplateSegment,
    pub source: SubstitutionSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedPrompt {
    pub text: String,
    pub provenance: Vec<Substitution>,
}

/// Resolves `block` against the document's attachments and selection.
pub fn resolve(document: &CanvasDocument, block: &BlockId) -> Result<ResolvedPrompt, CanvasError> {
    resolve_with(document, block, &Bindings::new())
}

/// Like [`resolve`], with chained-pipeline outputs bound to some prongs.
/// A binding takes precedence over an attachment on the same prong.
pub fn resolve_with(
    document: &CanvasDocument,
    block: &BlockId,
    bindings: &Bindings,
) -> Result<ResolvedPrompt, CanvasError> {
    let mut provenance = Vec::new();
    let text = resolve_inner(document, block, bindings, 0, &mut provenance)?;
    Ok(ResolvedPrompt { text, provenance })
}

fn resolve_inner(
    document: &CanvasDocument,
    block: &BlockId,
    bindings: &Bindings,
    depth: usize,
    provenance: &mut Vec<Substitution>,
) -> Result<String, CanvasError> {
    if depth > MAX_RESOLUTION_DEPTH {
        return Err(CanvasError::DepthExceeded(MAX_RESOLUTION_DEPTH));
    }
    let text_block = document.text_block(block)?;
    let mut out = String::with_capacity(text_block.content().len());
    for segment in parse_template(text_block.content()) {
        match &segment {
            TemplateSegment::Literal(text) => out.push_str(text),
            TemplateSegment::InputProng(index) => {
                if let Some(feed) = bindings.get(&(block.clone(), *index)) {
                    out.push_str(&feed.text);
                    provenance.push(Substitution {
                        host: block.clone(),
                        segment,
                        source: SubstitutionSource::Pipeline {
                            pipeline: feed.pipeline.clone(),
                            record: feed.record.clone(),
                        },
                    });
                } else if let Some(source) = document.attachment(block, *index) {
                    let source = source.clone();
                    provenance.push(Substitution {
                        host: block.clone(),
                        segment,
                        source: SubstitutionSource::Block { block: source.clone() },
                    });
                    out.push_str(&resolve_inner(document, &source, bindings, depth + 1, provenance)?);
                } else {
                    return Err(CanvasError::UnresolvedProng {
                        block: block.clone(),
                        index: *index,
                    });
                }
            }
            TemplateSegment::SelectHole(_) => {
                let selection = document.selection().ok_or(CanvasError::NoSelection)?;
                out.push_str(&document.selected_text().ok_or(CanvasError::NoSelection)?);
                provenance.push(Substitution {
                    host: block.clone(),
                    segment,
                    source: SubstitutionSource::Selection {
                        selection: selection.clone(),
                    },
                });
            }
        }
    }
    Ok(out)
}
