//! Targeted corruptions of saved documents. Every corruption breaks at least
//! one document invariant, so a correct loader must reject all of them.

use lmcanvas_core::{CanvasDocument, Engine, Geometry, MockProvider, ModelParams, Sink};
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::{json, Map, Value};

use crate::gen::{apply_step, random_step};

/// Serializes an object with `schema_version` (if present) as the first key.
pub fn emit(value: &Value) -> String {
    let Value::Object(map) = value else {
        return value.to_string();
    };
    let mut rest = map.clone();
    let version = rest.remove("schema_version");
    let body = Value::Object(rest).to_string();
    match version {
        Some(v) if body == "{}" => format!("{{\"schema_version\":{v}}}"),
        Some(v) => format!("{{\"schema_version\":{v},{}", &body[1..]),
        None => body,
    }
}

/// A document that contains every structure the corruptions target: an
/// attachment, a chained and a continuation sink, records, a multi-entry
/// history, and a selection. Extra random steps follow.
pub fn rich_document<R: Rng>(rng: &mut R, extra_steps: usize) -> CanvasDocument {
    let g = Geometry::default();
    let mut doc = CanvasDocument::new("rich", "rich");
    let host = doc.create_text_block("Improve [[input]] and [[input]]", g).expect("valid");
    let src = doc.create_text_block("source words", g).expect("valid");
    doc.attach(&host, 0, &src).expect("valid");
    let seed = doc.create_text_block("seed text", g).expect("valid");
    let m1 = doc.create_model_block(ModelParams::default(), g).expect("valid");
    let m2 = doc.create_model_block(ModelParams::default(), g).expect("valid");
    let up = doc.create_pipeline(&seed, &m1, g).expect("valid");
    doc.connect_output(&up, Sink::InputProng { target: host.clone(), prong_index: 1 }).expect("valid");
    let down = doc.create_pipeline(&host, &m2, g).expect("valid");
    let story = doc.create_text_block("Story:", g).expect("valid");
    doc.connect_output(&down, Sink::Continuation { target: story.clone() }).expect("valid");
    Engine::new(&MockProvider).run(&mut doc, &[down]).expect("acyclic");
    doc.edit_text(&src, "source words, edited").expect("valid");
    doc.set_selection(&story, 0, 3).expect("valid");
    for _ in 0..extra_steps {
        let step = random_step(rng, &doc, 0.1);
        let _ = apply_step(&mut doc, &step);
    }
    doc
}

fn obj(value: &mut Value) -> &mut Map<String, Value> {
    value.as_object_mut().expect("object")
}

fn keys_where(value: &Value, section: &str, pred: impl Fn(&Value) -> bool) -> Vec<String> {
    value[section]
        .as_object()
        .map(|m| m.iter().filter(|(_, v)| pred(v)).map(|(k, _)| k.clone()).collect())
        .unwrap_or_default()
}

fn kind_is(kind: &'static str) -> impl Fn(&Value) -> bool {
    move |v| v["kind"] == kind
}

pub const KINDS: usize = 20;

/// Applies corruption number `kind % KINDS` at a random applicable location.
/// Returns the corrupted file text and a label, or `None` when the document
/// lacks the structure that corruption needs.
pub fn corrupt<R: Rng>(rng: &mut R, doc: &CanvasDocument, kind: usize) -> Option<(String, &'static str)> {
    let mut v = serde_json::to_value(doc).expect("serializable");
    let texts = keys_where(&v, "blocks", kind_is("text"));
    let models = keys_where(&v, "blocks", kind_is("model"));
    let pipelines = keys_where(&v, "blocks", kind_is("pipeline"));
    let label = match kind % KINDS {
        0 => {
            v["schema_version"] = json!([0, 2, 99].choose(rng).copied().expect("non-empty"));
            "unsupported schema version"
        }
        1 => {
            obj(&mut v).remove("schema_version");
            "missing schema version"
        }
        2 => {
            let p = pipelines.choose(rng)?;
            v["blocks"][p]["output"]["sink"] = json!({"type": "continuation", "target": "b9999"});
            "sink target missing"
        }
        3 => {
            let attachments = v["attachments"].as_array_mut()?;
            let a = attachments.choose_mut(rng)?;
            a["source"] = json!("b9999");
            "attachment source missing"
        }
        4 => {
            let attachments = v["attachments"].as_array_mut()?;
            let a = attachments.choose(rng)?.clone();
            attachments.push(a);
            "duplicate attachment"
        }
        5 => {
            let t = texts.choose(rng)?;
            v["blocks"][t]["geometry"]["width"] = json!([0.0, -4.0].choose(rng).copied().expect("non-empty"));
            "non-positive extent"
        }
        6 => {
            let m = models.choose(rng)?;
            v["blocks"][m]["params"]["temperature"] = json!(3.5);
            "temperature out of range"
        }
        7 => {
            let p = pipelines.choose(rng)?;
            let m = models.choose(rng)?;
            v["blocks"][p]["text_slots"] = json!([m]);
            "model in a text slot"
        }
        8 => {
            let p = pipelines.choose(rng)?;
            v["blocks"][p]["model_slots"] = json!([]);
            "empty model slots"
        }
        9 => {
            let t = texts.choose(rng)?.clone();
            let block = obj(&mut v["blocks"]).remove(&t)?;
            obj(&mut v["blocks"]).insert("b9998".into(), block);
            "key does not match id"
        }
        10 => {
            let t = texts.choose(rng)?;
            let content = v["blocks"][t]["content"].as_str()?.to_string();
            v["blocks"][t]["content"] = json!(format!("{content} tampered"));
            "content diverges from history"
        }
        11 => {
            v["next_block"] = json!(1);
            texts.first()?;
            "block counter behind ids"
        }
        12 => {
            let selection = v["selection"].as_object_mut()?;
            selection.insert("end".into(), json!(100_000));
            "selection out of bounds"
        }
        13 => {
            let t = texts.choose(rng)?;
            obj(&mut v["histories"]).remove(t)?;
            "history missing"
        }
        14 => {
            obj(&mut v).insert("extra".into(), json!(true));
            "unknown field"
        }
        15 => {
            if pipelines.len() < 2 {
                return None;
            }
            let slot = v["blocks"][&pipelines[0]]["text_slots"][0].clone();
            v["blocks"][&pipelines[1]]["text_slots"].as_array_mut()?.push(slot);
            "block nested twice"
        }
        16 => {
            let p = pipelines.choose(rng)?;
            v["blocks"][p]["output"]["generations"].as_array_mut()?.push(json!("g9999"));
            "generation missing"
        }
        17 => {
            let text = emit(&v);
            let cut = rng.gen_range(1..text.len().max(2));
            return Some((text.chars().take(cut.min(text.chars().count() - 1)).collect(), "truncated file"));
        }
        18 => {
            let attachments = v["attachments"].as_array_mut()?;
            let a = attachments.choose_mut(rng)?;
            a["prong_index"] = json!(500);
            "prong index out of range"
        }
        _ => {
            let t = texts.choose(rng)?.clone();
            let attachments = v["attachments"].as_array_mut()?;
            attachments.push(json!({"host": t, "prong_index": 0, "source": t}));
            "self attachment"
        }
    };
    Some((emit(&v), label))
}
