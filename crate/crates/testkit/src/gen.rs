//! Random operation scripts. Choices lean towards valid operations on the
//! current document but regularly produce invalid ones, so error paths are
//! exercised too.

use lmcanvas_core::{
    Block, BlockId, BlockKind, CanvasDocument, Engine, Geometry, MockProvider, ModelParams, Operation, Sink,
};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Value};

const PIECES: &[&str] = &[
    "alpha", "beta", "γάμμα", "the", "sea", "[[input]]", "[[input]]", "[[input]]", "[[select]]", "[[inp", "ut]]", "[[", "]]", "[[Input]]",
    "[[select", "\n", " ", "x", "🙂", "[", "]",
];

/// A step of a script: a document operation or a generation run.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Op(Operation),
    Run(Vec<BlockId>),
}

pub fn random_text<R: Rng>(rng: &mut R, max_pieces: usize) -> String {
    let n = rng.gen_range(0..=max_pieces);
    let mut out = String::new();
    for _ in 0..n {
        out.push_str(PIECES.choose(rng).expect("non-empty"));
        if rng.gen_bool(0.5) {
            out.push(' ');
        }
    }
    out
}

pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    ModelParams {
        model_name: ["mock", "small", "large"].choose(rng).expect("non-empty").to_string(),
        temperature: f64::from(rng.gen_range(0..=20u8)) / 10.0,
        top_p: f64::from(rng.gen_range(1..=10u8)) / 10.0,
        max_tokens: rng.gen_range(1..=12),
        stop_sequences: Vec::new(),
        presence_penalty: 0.0,
        frequency_penalty: 0.0,
    }
}

fn random_geometry<R: Rng>(rng: &mut R) -> Option<Geometry> {
    rng.gen_bool(0.5).then(|| {
        Geometry::new(
            f64::from(rng.gen_range(-500..500)),
            f64::from(rng.gen_range(-500..500)),
            f64::from(rng.gen_range(1..400)),
            f64::from(rng.gen_range(1..300)),
        )
        .expect("positive extents")
    })
}

fn ids_of(doc: &CanvasDocument, kind: Option<BlockKind>) -> Vec<BlockId> {
    doc.blocks()
        .filter(|b| kind.is_none_or(|k| b.kind() == k))
        .map(|b| b.id().clone())
        .collect()
}

/// Mostly a block of `kind`; sometimes any block or a missing id.
fn pick<R: Rng>(rng: &mut R, doc: &CanvasDocument, kind: BlockKind) -> BlockId {
    let roll = rng.gen_range(0..100);
    let pool = if roll < 85 { ids_of(doc, Some(kind)) } else { ids_of(doc, None) };
    if roll >= 97 {
        return BlockId::new("b9999");
    }
    pool.choose(rng).cloned().unwrap_or_else(|| BlockId::new("b9999"))
}

/// Like [`pick`], but prefers blocks satisfying `pred` and differing from
/// `avoid`.
fn pick_where<R: Rng>(
    rng: &mut R,
    doc: &CanvasDocument,
    kind: BlockKind,
    avoid: Option<&BlockId>,
    pred: impl Fn(&Block) -> bool,
) -> BlockId {
    if rng.gen_bool(0.8) {
        let pool: Vec<BlockId> = doc
            .blocks()
            .filter(|b| b.kind() == kind && Some(b.id()) != avoid && pred(b))
            .map(|b| b.id().clone())
            .collect();
        if let Some(id) = pool.choose(rng) {
            return id.clone();
        }
    }
    pick(rng, doc, kind)
}

fn free(doc: &CanvasDocument) -> impl Fn(&Block) -> bool + '_ {
    |b| doc.nesting_pipeline(b.id()).is_none()
}

fn has_prongs(b: &Block) -> bool {
    b.as_text().is_some_and(|t| t.prong_count() > 0)
}

fn prongs(doc: &CanvasDocument, id: &BlockId) -> usize {
    doc.block(id).and_then(Block::as_text).map_or(0, |t| t.prong_count())
}

fn chars(doc: &CanvasDocument, id: &BlockId) -> usize {
    doc.block(id)
        .and_then(Block::as_text)
        .map_or(0, |t| t.content().chars().count())
}

fn range<R: Rng>(rng: &mut R, len: usize) -> (usize, usize) {
    let a = rng.gen_range(0..=len + 1);
    let b = rng.gen_range(0..=len + 1);
    (a.min(b), a.max(b))
}

fn random_field<R: Rng>(rng: &mut R) -> (String, Value) {
    let field = ModelParams::FIELDS.choose(rng).expect("non-empty").to_string();
    let value = match (field.as_str(), rng.gen_range(0..10)) {
        (_, 0) => json!("nonsense"),
        ("model_name", _) => json!("other"),
        ("temperature", _) => json!(f64::from(rng.gen_range(0..=25u8)) / 10.0),
        ("top_p", _) => json!(f64::from(rng.gen_range(0..=10u8)) / 10.0),
        ("max_tokens", _) => json!(rng.gen_range(0..20)),
        ("stop_sequences", _) => json!(["\n"]),
        _ => json!(f64::from(rng.gen_range(-25..=25i8)) / 10.0),
    };
    (field, value)
}

pub fn random_op<R: Rng>(rng: &mut R, doc: &CanvasDocument) -> Operation {
    let text = |rng: &mut R| pick(rng, doc, BlockKind::Text);
    let mut roll = rng.gen_range(0..100);
    let no_pipelines = doc.pipelines().next().is_none();
    let no_hosts = !doc.blocks().any(has_prongs);
    if no_pipelines && (62..=75).contains(&roll) && rng.gen_bool(0.8) {
        roll = 21;
    }
    if no_hosts && (49..=61).contains(&roll) && rng.gen_bool(0.8) {
        return Operation::CreateText {
            content: format!("{} [[input]] {}", random_text(rng, 2), random_text(rng, 2)),
            geometry: None,
        };
    }
    match roll {
        0..=14 => Operation::CreateText {
            content: random_text(rng, 6),
            geometry: random_geometry(rng),
        },
        15..=20 => Operation::CreateModel {
            params: random_params(rng),
            geometry: random_geometry(rng),
        },
        21..=28 => Operation::CreatePipeline {
            text: pick_where(rng, doc, BlockKind::Text, None, free(doc)),
            model: pick_where(rng, doc, BlockKind::Model, None, free(doc)),
            geometry: None,
        },
        29..=35 => Operation::EditText {
            block: text(rng),
            content: random_text(rng, 6),
        },
        36..=41 => {
            let target = text(rng);
            Operation::Concatenate {
                source: pick_where(rng, doc, BlockKind::Text, Some(&target), free(doc)),
                target,
            }
        }
        42..=48 => {
            let block = text(rng);
            let (start, end) = range(rng, chars(doc, &block));
            Operation::Split {
                block,
                start,
                end,
                geometry: random_geometry(rng),
            }
        }
        49..=58 => {
            let host = pick_where(rng, doc, BlockKind::Text, None, has_prongs);
            let prong_index = rng.gen_range(0..=prongs(doc, &host));
            Operation::Attach {
                source: pick_where(rng, doc, BlockKind::Text, Some(&host), |_| true),
                host,
                prong_index,
            }
        }
        59..=61 => {
            let host = pick_where(rng, doc, BlockKind::Text, None, has_prongs);
            let prong_index = rng.gen_range(0..=prongs(doc, &host));
            Operation::Detach { host, prong_index }
        }
        62..=67 => {
            let kind = if rng.gen_bool(0.6) { BlockKind::Text } else { BlockKind::Model };
            Operation::Expand {
                pipeline: pick(rng, doc, BlockKind::Pipeline),
                block: pick_where(rng, doc, kind, None, free(doc)),
            }
        }
        68..=75 => {
            let sink = match rng.gen_range(0..4) {
                0 => Sink::Container,
                1 => Sink::Continuation { target: text(rng) },
                2 => {
                    let target = pick_where(rng, doc, BlockKind::Text, None, has_prongs);
                    let prong_index = rng.gen_range(0..=prongs(doc, &target));
                    Sink::InputProng { target, prong_index }
                }
                _ => Sink::Select,
            };
            Operation::ConnectOutput {
                pipeline: pick(rng, doc, BlockKind::Pipeline),
                sink,
            }
        }
        76..=81 => {
            let block = text(rng);
            let (start, end) = range(rng, chars(doc, &block));
            Operation::Select { block, start, end }
        }
        82 => Operation::ClearSelection,
        83..=86 => {
            let kinds = [BlockKind::Text, BlockKind::Model, BlockKind::Pipeline];
            let kind = *kinds.choose(rng).expect("non-empty");
            Operation::Delete {
                block: pick(rng, doc, kind),
            }
        }
        87..=91 => {
            let block = text(rng);
            let len = doc.history(&block).map_or(0, |h| h.len() as u64);
            Operation::Revert {
                block,
                to_seq: rng.gen_range(0..=len),
            }
        }
        92..=94 => {
            let kinds = [BlockKind::Text, BlockKind::Model, BlockKind::Pipeline];
            let kind = *kinds.choose(rng).expect("non-empty");
            let block = pick(rng, doc, kind);
            if rng.gen_bool(0.5) {
                Operation::Move {
                    block,
                    x: f64::from(rng.gen_range(-900..900)),
                    y: f64::from(rng.gen_range(-900..900)),
                }
            } else {
                Operation::Resize {
                    block,
                    width: f64::from(rng.gen_range(-5..500)),
                    height: f64::from(rng.gen_range(-5..500)),
                }
            }
        }
        _ => {
            let (field, value) = random_field(rng);
            Operation::Configure {
                block: pick(rng, doc, BlockKind::Model),
                field,
                value,
            }
        }
    }
}

/// An operation most of the time; a run over one or two pipelines otherwise.
pub fn random_step<R: Rng>(rng: &mut R, doc: &CanvasDocument, run_probability: f64) -> Step {
    let pipelines = ids_of(doc, Some(BlockKind::Pipeline));
    if !pipelines.is_empty() && rng.gen_bool(run_probability) {
        let n = rng.gen_range(1..=pipelines.len().min(2));
        let mut roots: Vec<BlockId> = pipelines.choose_multiple(rng, n).cloned().collect();
        roots.sort();
        return Step::Run(roots);
    }
    Step::Op(random_op(rng, doc))
}

/// Applies `step` in-process. Operation errors are part of normal scripts
/// and are returned rather than panicking.
pub fn apply_step(doc: &mut CanvasDocument, step: &Step) -> Result<(), String> {
    match step {
        Step::Op(op) => doc.apply(op).map(|_| ()).map_err(|e| e.name().to_string()),
        Step::Run(roots) => Engine::new(&MockProvider)
            .run(doc, roots)
            .map(|_| ())
            .map_err(|e| e.name().to_string()),
    }
}

/// Generates a script of `len` steps against a fresh document, returning the
/// script and the document it produces.
pub fn random_script<R: Rng>(rng: &mut R, len: usize, run_probability: f64) -> (Vec<Step>, CanvasDocument) {
    let mut doc = CanvasDocument::new("scratch", "scratch");
    let mut steps = Vec::with_capacity(len);
    for _ in 0..len {
        let step = random_step(rng, &doc, run_probability);
        let _ = apply_step(&mut doc, &step);
        steps.push(step);
    }
    (steps, doc)
}
