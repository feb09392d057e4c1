//! Randomized pipeline chains with a hand-rolled sequential oracle.
//!
//! Stage `i` is a pipeline with 1-3 text slots and 1-3 model slots. The first
//! text of every stage after the first carries a prong fed by the previous
//! stage's sink; some texts also have a literal block attached to a prong.
//! With `cyclic`, the last stage additionally feeds a prong of stage 0.

use std::collections::BTreeSet;

use lmcanvas_core::{BlockId, CanvasDocument, Geometry, Sink};
use rand::Rng;

use crate::gen::random_params;
use crate::oracle::{mock_complete, INPUT};

const WORDS: &[&str] = &["quiet", "river", "stone", "λόγος", "ink", "moth", "lamp"];

#[derive(Debug, Clone)]
pub struct StageSpec {
    pub pipeline: BlockId,
    /// `(block, raw content)` per text slot.
    pub texts: Vec<(BlockId, String)>,
    /// `(temperature, max_tokens)` per model slot.
    pub models: Vec<(f64, u32)>,
    /// `(host, prong index, literal)` attachments of literal blocks.
    pub literals: Vec<(BlockId, usize, String)>,
}

#[derive(Debug, Clone)]
pub struct ChainCase {
    pub doc: CanvasDocument,
    pub stages: Vec<StageSpec>,
    pub cyclic: bool,
}

fn words<R: Rng>(rng: &mut R, max: usize) -> String {
    let n = rng.gen_range(0..=max);
    (0..n)
        .map(|_| WORDS[rng.gen_range(0..WORDS.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

/// Builds a chain of `depth` stages (1..=5 in the acceptance suite).
pub fn random_chain<R: Rng>(rng: &mut R, depth: usize, cyclic: bool) -> ChainCase {
    let mut doc = CanvasDocument::new("chain", "chain");
    let g = Geometry::default();
    let mut stages: Vec<StageSpec> = Vec::new();
    for stage in 0..depth {
        let n_texts = rng.gen_range(1..=3);
        let n_models = rng.gen_range(1..=3);
        let mut texts = Vec::new();
        let mut literals = Vec::new();
        for t in 0..n_texts {
            let fed = t == 0 && (stage > 0 || cyclic);
            let with_literal = rng.gen_bool(0.4);
            let mut content = words(rng, 2);
            if fed {
                content = format!("{content}\nImprove: {INPUT} {}", words(rng, 2));
            }
            if with_literal {
                let pos = if rng.gen_bool(0.5) { "" } else { " " };
                content = format!("{content}{pos}{INPUT}");
            }
            let id = doc.create_text_block(&content, g).expect("valid");
            if with_literal {
                let literal = format!("{} {}", WORDS[rng.gen_range(0..WORDS.len())], words(rng, 2));
                let source = doc.create_text_block(&literal, g).expect("valid");
                let prong = usize::from(fed);
                doc.attach(&id, prong, &source).expect("fresh prong");
                literals.push((id.clone(), prong, literal));
            }
            texts.push((id, content));
        }
        let mut model_ids = Vec::new();
        let mut models = Vec::new();
        for _ in 0..n_models {
            let params = random_params(rng);
            models.push((params.temperature, params.max_tokens));
            model_ids.push(doc.create_model_block(params, g).expect("valid"));
        }
        let pipeline = doc.create_pipeline(&texts[0].0, &model_ids[0], g).expect("valid");
        for (id, _) in &texts[1..] {
            doc.expand_pipeline(&pipeline, id).expect("fresh slot");
        }
        for id in &model_ids[1..] {
            doc.expand_pipeline(&pipeline, id).expect("fresh slot");
        }
        if let Some(prev) = stages.last() {
            doc.connect_output(
                &prev.pipeline,
                Sink::InputProng {
                    target: texts[0].0.clone(),
                    prong_index: 0,
                },
            )
            .expect("acyclic link");
        }
        stages.push(StageSpec {
            pipeline,
            texts,
            models,
            literals,
        });
    }
    if cyclic {
        let last = stages.last().expect("depth >= 1").pipeline.clone();
        let first_text = stages[0].texts[0].0.clone();
        doc.force_sink(
            &last,
            Sink::InputProng {
                target: first_text,
                prong_index: 0,
            },
        )
        .expect("pipeline exists");
    }
    ChainCase { doc, stages, cyclic }
}

/// Substitutes `fills` into successive `[[input]]` tokens of `content`.
fn substitute(content: &str, fills: &[&str]) -> String {
    let mut out = String::new();
    let mut rest = content;
    let mut fills = fills.iter();
    while let Some(i) = rest.find(INPUT) {
        out.push_str(&rest[..i]);
        out.push_str(fills.next().expect("one fill per prong"));
        rest = &rest[i + INPUT.len()..];
    }
    out.push_str(rest);
    out
}

/// Expected `(prompt, output)` per record of every stage, executing the
/// stages one after another by hand.
pub fn expected_outputs(case: &ChainCase) -> Vec<Vec<(String, String)>> {
    let mut previous: Option<String> = None;
    let mut all = Vec::new();
    for (i, stage) in case.stages.iter().enumerate() {
        let mut records = Vec::new();
        for (t, (id, content)) in stage.texts.iter().enumerate() {
            let mut fills: Vec<&str> = Vec::new();
            if t == 0 && i > 0 {
                fills.push(previous.as_deref().expect("upstream produced output"));
            }
            for (host, _, literal) in &stage.literals {
                if host == id {
                    fills.push(literal);
                }
            }
            let prompt = substitute(content, &fills);
            for (temperature, max_tokens) in &stage.models {
                let (output, _) = mock_complete(&prompt, *temperature, *max_tokens);
                records.push((prompt.clone(), output));
            }
        }
        previous = records.last().map(|(_, o)| o.clone());
        all.push(records);
    }
    all
}

/// Pipeline-to-pipeline edges derived from the public document view: `P`
/// precedes `Q` when `P`'s prong sink lands in a block reachable from one of
/// `Q`'s text slots through attachments.
pub fn pipeline_edges(doc: &CanvasDocument) -> Vec<(BlockId, BlockId)> {
    let mut edges = Vec::new();
    for q in doc.pipelines() {
        let mut reach: BTreeSet<BlockId> = BTreeSet::new();
        let mut stack: Vec<BlockId> = q.text_slots().to_vec();
        while let Some(t) = stack.pop() {
            if reach.insert(t.clone()) {
                stack.extend(doc.attachments().iter().filter(|a| a.host == t).map(|a| a.source.clone()));
            }
        }
        for p in doc.pipelines() {
            if let Sink::InputProng { target, .. } = p.output().sink() {
                if reach.contains(target) {
                    edges.push((p.id().clone(), q.id().clone()));
                }
            }
        }
    }
    edges
}
