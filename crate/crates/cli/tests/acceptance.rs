//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering::Relaxed};
use std::sync::Arc;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use lmcanvas_core::store::{self, StoreError};
use lmcanvas_core::{
    parse_template, render_template, BlockId, CanvasDocument, CanvasError, Clock, CompletionProvider, CompletionRequest,
    CompletionResult, Engine, Geometry, MockProvider, ModelParams, Operation, ProviderError, Sink, TemplateSegment,
};
use lmcanvas_service::{serve_in_background, AppState};
use lmcanvas_testkit::chain::{expected_outputs, pipeline_edges, random_chain};
use lmcanvas_testkit::corrupt::{corrupt, rich_document, KINDS};
use lmcanvas_testkit::gen::{apply_step, random_params, random_script, random_step, random_text, Step};
use lmcanvas_testkit::normalize;
use lmcanvas_testkit::oracle::{has_cycle, is_cycle_of, mock_complete, naive_counts, naive_segments, splice, NaiveSegment};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn rng_for(criterion: u64, case: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(criterion.wrapping_mul(1_000_003) ^ case as u64)
}

/// Runs `f` over `0..n` on all cores and returns the first failure, if any.
fn par_cases(n: usize, f: impl Fn(usize) -> Result<(), String> + Sync) -> Result<(), String> {
    let threads = std::thread::available_parallelism().map_or(4, |n| n.get()).min(16);
    let failures: Vec<(usize, String)> = std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    (t..n)
                        .step_by(threads)
                        .filter_map(|i| f(i).err().map(|e| (i, e)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker")).collect()
    });
    match failures.iter().min_by_key(|(i, _)| *i) {
        None => Ok(()),
        Some((i, e)) => Err(format!("{} of {n} cases failed; first is case {i}: {}", failures.len(), clip(e))),
    }
}

fn clip(s: &str) -> String {
    if s.chars().count() > 400 {
        format!("{}...", s.chars().take(400).collect::<String>())
    } else {
        s.to_string()
    }
}

fn random_template<R: Rng>(rng: &mut R) -> String {
    const SOUP: &[char] = &['[', ']', 'i', 'n', 'p', 'u', 't', 's', 'e', 'l', 'c', ' ', '\n', 'é', '🙂', 'I'];
    match rng.gen_range(0..3) {
        0 => random_text(rng, 16),
        1 => (0..rng.gen_range(0..40)).map(|_| *SOUP.choose(rng).expect("non-empty")).collect(),
        _ => {
            let token = if rng.gen_bool(0.5) { "[[input]]" } else { "[[select]]" };
            let mut out = String::new();
            for _ in 0..rng.gen_range(1..6) {
                let cut = rng.gen_range(0..=token.len());
                out.push_str(&token[..cut]);
                out.push_str(&random_text(rng, 2));
            }
            out
        }
    }
}

fn template_round_trip() -> Verdict {
    let start = Instant::now();
    let mut rng = rng_for(1, 0);
    let mut failures = Vec::new();
    for _ in 0..10_000 {
        let s = random_template(&mut rng);
        if render_template(&parse_template(&s)) != s {
            failures.push(s);
        }
    }
    let elapsed = start.elapsed();
    if !failures.is_empty() {
        return Err(format!("{} of 10000 strings changed, e.g. {:?}", failures.len(), failures[0]));
    }
    if elapsed >= Duration::from_secs(5) {
        return Err(format!("took {elapsed:.2?}, limit 5s"));
    }
    Ok(format!("10000 strings, 0 failures, {elapsed:.2?}"))
}

fn scanner_oracle() -> Verdict {
    let mut rng = rng_for(2, 0);
    for i in 0..10_000 {
        let s = random_template(&mut rng);
        let ours: Vec<NaiveSegment> = parse_template(&s)
            .into_iter()
            .map(|seg| match seg {
                TemplateSegment::Literal(l) => NaiveSegment::Literal(l),
                TemplateSegment::InputProng(n) => NaiveSegment::Input(n),
                TemplateSegment::SelectHole(n) => NaiveSegment::Select(n),
            })
            .collect();
        if ours != naive_segments(&s) {
            return Err(format!("string {i} {s:?}: segments differ"));
        }
        let counts = (lmcanvas_core::template::prong_count(&s), lmcanvas_core::template::select_count(&s));
        if counts != naive_counts(&s) {
            return Err(format!("string {i} {s:?}: counts {counts:?} vs {:?}", naive_counts(&s)));
        }
    }
    Ok("10000 strings, 0 mismatches".into())
}

fn cross_product() -> Verdict {
    par_cases(1000, |i| {
        let mut rng = rng_for(3, i);
        let g = Geometry::default();
        let mut doc = CanvasDocument::new("x", "x");
        let n_texts = rng.gen_range(1..=5);
        let n_models = rng.gen_range(1..=5);
        let texts: Vec<(BlockId, String)> = (0..n_texts)
            .map(|_| {
                let content = random_text(&mut rng, 6).replace("[[input]]", "").replace("[[select]]", "");
                (doc.create_text_block(&content, g).unwrap(), content)
            })
            .collect();
        let models: Vec<(BlockId, ModelParams)> = (0..n_models)
            .map(|_| {
                let params = random_params(&mut rng);
                (doc.create_model_block(params.clone(), g).unwrap(), params)
            })
            .collect();
        let p = doc.create_pipeline(&texts[0].0, &models[0].0, g).map_err(|e| e.to_string())?;
        for (id, _) in texts.iter().skip(1) {
            doc.expand_pipeline(&p, id).map_err(|e| e.to_string())?;
        }
        for (id, _) in models.iter().skip(1) {
            doc.expand_pipeline(&p, id).map_err(|e| e.to_string())?;
        }
        let report = Engine::new(&MockProvider).run(&mut doc, &[p]).map_err(|e| e.to_string())?;
        if report.records.len() != n_texts * n_models {
            return Err(format!("{} records for {n_texts}x{n_models}", report.records.len()));
        }
        for (k, record) in report.records.iter().enumerate() {
            let (text, content) = &texts[k / n_models];
            let (model, params) = &models[k % n_models];
            if &record.text_slot != text || &record.model_slot != model {
                return Err(format!("record {k} is ({}, {}), expected ({text}, {model})", record.text_slot, record.model_slot));
            }
            let expected = mock_complete(content, params.temperature, params.max_tokens).0;
            if record.output_text != expected {
                return Err(format!("record {k}: {:?} vs {expected:?}", record.output_text));
            }
        }
        Ok(())
    })?;
    Ok("1000 pipelines, 0 failures".into())
}

fn chaining() -> Verdict {
    let cyclic_cases = AtomicUsize::new(0);
    par_cases(500, |i| {
        let mut rng = rng_for(4, i);
        let depth = rng.gen_range(1..=5);
        let cyclic = rng.gen_bool(0.3);
        let mut case = random_chain(&mut rng, depth, cyclic);
        let edges = pipeline_edges(&case.doc);
        let roots: Vec<BlockId> = case.stages.iter().map(|s| s.pipeline.clone()).collect();
        let oracle_cyclic = has_cycle(&edges);
        if oracle_cyclic != cyclic {
            return Err(format!("oracle says cyclic={oracle_cyclic} for an injected={cyclic} chain"));
        }
        let before = case.doc.clone();
        let outcome = Engine::new(&MockProvider).run(&mut case.doc, &roots);
        if cyclic {
            cyclic_cases.fetch_add(1, Relaxed);
            return match outcome {
                Err(CanvasError::CycleDetected { cycle }) if is_cycle_of(&cycle, &edges) && case.doc == before => Ok(()),
                Err(CanvasError::CycleDetected { cycle }) => Err(format!("reported {cycle:?} is not a cycle of {edges:?}")),
                other => Err(format!("depth {depth}: expected CycleDetected, got {:?}", other.map(|r| r.records.len()))),
            };
        }
        let report = outcome.map_err(|e| e.to_string())?;
        let expected: Vec<(String, String)> = expected_outputs(&case).into_iter().flatten().collect();
        let actual: Vec<(String, String)> = report
            .records
            .iter()
            .map(|r| (r.resolved_prompt.as_ref().map(|p| p.text.clone()).unwrap_or_default(), r.output_text.clone()))
            .collect();
        if actual != expected {
            return Err(format!("depth {depth}: {actual:?} vs {expected:?}"));
        }
        Ok(())
    })?;
    Ok(format!(
        "500 chains ({} cyclic), 0 mismatches",
        cyclic_cases.load(Relaxed)
    ))
}

fn fuzz_sequence(i: usize) -> Result<CanvasDocument, String> {
    let mut rng = rng_for(5, i);
    let len = rng.gen_range(1..=40);
    let mut doc = CanvasDocument::new("fuzz", "fuzz");
    for n in 0..len {
        let step = random_step(&mut rng, &doc, 0.05);
        let before = doc.clone();
        if apply_step(&mut doc, &step).is_err() && doc != before {
            return Err(format!("step {n} failed but changed the document: {step:?}"));
        }
        if let Err(e) = doc.validate() {
            return Err(format!("step {n} {step:?}: {e}"));
        }
    }
    Ok(doc)
}

fn document_fuzz() -> Verdict {
    par_cases(10_000, |i| fuzz_sequence(i).map(|_| ()))?;
    Ok("10000 sequences, validator green after every step".into())
}

fn history_replay() -> Verdict {
    par_cases(10_000, |i| {
        let doc = fuzz_sequence(i)?;
        let texts: Vec<BlockId> = doc.text_blocks().map(|t| t.id().clone()).collect();
        for id in &texts {
            let history = doc.history(id).ok_or(format!("{id} has no history"))?;
            let live = doc.text_block(id).unwrap().content();
            if history.latest().map(|e| e.content_after.as_str()) != Some(live) {
                return Err(format!("{id}: latest snapshot differs from live content"));
            }
            for seq in 0..history.len() as u64 {
                let mut reverted = doc.clone();
                reverted.revert(id, seq).map_err(|e| format!("revert {id} to {seq}: {e}"))?;
                let want = &history.entries()[seq as usize].content_after;
                if reverted.text_block(id).unwrap().content() != want {
                    return Err(format!("revert {id} to {seq} restored the wrong content"));
                }
                reverted.validate().map_err(|e| format!("after revert {id} to {seq}: {e}"))?;
            }
        }
        Ok(())
    })?;
    Ok("10000 sequences replayed, every revert re-validated".into())
}

fn persistence() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    par_cases(1000, |i| {
        let mut rng = rng_for(7, i);
        let size = rng.gen_range(0..60);
        let doc = if i % 4 == 0 {
            rich_document(&mut rng, size / 2)
        } else {
            random_script(&mut rng, size, 0.1).1
        };
        let text = store::to_canonical_string(&doc);
        let path = dir.path().join(format!("d{i}.lmcanvas"));
        store::save(&doc, &path).map_err(|e| e.to_string())?;
        let loaded = store::load(&path).map_err(|e| format!("{e}"))?;
        if loaded != doc {
            return Err("loaded document differs".into());
        }
        if store::to_canonical_string(&loaded) != text || std::fs::read_to_string(&path).unwrap() != text {
            return Err("canonical bytes changed".into());
        }
        Ok(())
    })?;

    let mut rng = rng_for(7, 1_000_000);
    let mut applied = 0;
    let mut attempts = 0;
    while applied < 100 {
        attempts += 1;
        if attempts > 10_000 {
            return Err("could not generate 100 corruptions".into());
        }
        let extra = rng.gen_range(0..20);
        let doc = rich_document(&mut rng, extra);
        let kind = applied % KINDS;
        let Some((text, label)) = corrupt(&mut rng, &doc, kind) else {
            continue;
        };
        applied += 1;
        match store::from_str(&text) {
            Err(StoreError::Integrity { .. } | StoreError::SchemaVersionUnsupported { .. }) => {}
            Err(other) => return Err(format!("{label}: unexpected error {}", other.name())),
            Ok(_) => return Err(format!("{label}: corrupted document loaded")),
        }
    }
    Ok(format!("1000 round trips byte-stable; {applied} corruptions over {KINDS} kinds all rejected"))
}

/// Delegates to the mock after a random pause, so stage jobs finish out of order.
struct Jittery;

impl CompletionProvider for Jittery {
    fn name(&self) -> &str {
        MockProvider.name()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, ProviderError> {
        std::thread::sleep(Duration::from_micros(rand::thread_rng().gen_range(0..400)));
        MockProvider.complete(request)
    }
}

fn mock_determinism() -> Verdict {
    let frozen = Clock::fixed(Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap());
    par_cases(200, |i| {
        let mut rng = rng_for(8, i);
        let depth = rng.gen_range(1..=5);
        let mut doc = if i % 2 == 0 {
            random_chain(&mut rng, depth, false).doc
        } else {
            random_script(&mut rng, 40, 0.0).1
        };
        doc.set_clock(frozen.clone());
        let roots: Vec<BlockId> = doc.pipelines().map(|p| p.id().clone()).collect();
        if roots.is_empty() {
            return Ok(());
        }
        let mut outputs = Vec::new();
        for (n, provider) in [&Jittery as &dyn CompletionProvider, &Jittery, &Jittery, &MockProvider].into_iter().enumerate() {
            let mut copy = doc.clone();
            let in_flight = if n == 3 { 1 } else { 8 };
            let outcome = Engine::new(provider).with_max_in_flight(in_flight).run(&mut copy, &roots);
            let records = match outcome {
                Ok(report) => serde_json::to_string(&report.records).unwrap(),
                Err(e) => e.to_string(),
            };
            outputs.push((records, store::to_canonical_string(&copy)));
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return Err("record sets differ between repetitions".into());
        }
        Ok(())
    })?;
    Ok("200 documents x 3 concurrent repetitions byte-identical, and equal to a serial run".into())
}

fn select_splice() -> Verdict {
    par_cases(1000, |i| {
        let mut rng = rng_for(10, i);
        let g = Geometry::default();
        let mut doc = CanvasDocument::new("s", "s");
        let content = random_text(&mut rng, 10);
        let t = doc.create_text_block(&content, g).unwrap();
        let prefix = ["Rephrase:", "Shorter", "", "make it pop"].choose(&mut rng).unwrap().to_string();
        let instruction = format!("{prefix} [[select]]");
        let p_text = doc.create_text_block(&instruction, g).unwrap();
        let params = random_params(&mut rng);
        let m = doc.create_model_block(params.clone(), g).unwrap();
        let p = doc.create_pipeline(&p_text, &m, g).unwrap();
        doc.connect_output(&p, Sink::Select).map_err(|e| e.to_string())?;
        let len = content.chars().count();
        let start = rng.gen_range(0..=len);
        let end = rng.gen_range(start..=len);
        doc.set_selection(&t, start, end).map_err(|e| e.to_string())?;

        let selected: String = content.chars().skip(start).take(end - start).collect();
        let prompt = format!("{prefix} {selected}");
        let replacement = mock_complete(&prompt, params.temperature, params.max_tokens).0;
        let expected = splice(&content, start, end, &replacement);

        let report = Engine::new(&MockProvider).run(&mut doc, &[p]).map_err(|e| e.to_string())?;
        if !report.routing_failures.is_empty() {
            return Err(format!("routing failed: {:?}", report.routing_failures));
        }
        let actual = doc.text_block(&t).unwrap().content();
        if actual != expected {
            return Err(format!("{content:?} [{start}..{end}] -> {actual:?}, expected {expected:?}"));
        }
        if doc.selection().is_some() {
            return Err("selection not cleared".into());
        }
        doc.validate().map_err(|e| e.to_string())
    })?;
    Ok("1000 splices match the oracle, selection cleared".into())
}

struct Http {
    client: reqwest::blocking::Client,
    base: String,
}

impl Http {
    fn call(&self, method: reqwest::Method, path: &str, body: Value) -> Result<(u16, Value), String> {
        let response = self
            .client
            .request(method, format!("{}{path}", self.base))
            .json(&body)
            .send()
            .map_err(|e| e.to_string())?;
        let status = response.status().as_u16();
        let value = response.json().unwrap_or(Value::Null);
        Ok((status, value))
    }

    /// Sends `step` to its endpoint and returns the error name, if the
    /// request failed.
    fn step(&self, doc: &str, step: &Step) -> Result<Option<String>, String> {
        use reqwest::Method;
        let d = format!("/documents/{doc}");
        let (status, body) = match step {
            Step::Run(roots) => self.call(Method::POST, &format!("{d}/run?wait=true"), json!({"roots": roots}))?,
            Step::Op(op) => {
                let mut args = serde_json::to_value(op).unwrap();
                let object = args.as_object_mut().unwrap();
                object.remove("op");
                let block = object.get("block").and_then(Value::as_str).unwrap_or_default().to_string();
                match op {
                    Operation::CreateText { .. } => {
                        object.insert("kind".into(), json!("text"));
                        self.call(Method::POST, &format!("{d}/blocks"), args)?
                    }
                    Operation::CreateModel { .. } => {
                        object.insert("kind".into(), json!("model"));
                        self.call(Method::POST, &format!("{d}/blocks"), args)?
                    }
                    Operation::CreatePipeline { .. } => {
                        object.insert("kind".into(), json!("pipeline"));
                        self.call(Method::POST, &format!("{d}/blocks"), args)?
                    }
                    Operation::EditText { .. }
                    | Operation::Move { .. }
                    | Operation::Resize { .. }
                    | Operation::Configure { .. } => {
                        object.remove("block");
                        self.call(Method::PATCH, &format!("{d}/blocks/{block}"), args)?
                    }
                    Operation::Revert { to_seq, .. } => {
                        self.call(Method::POST, &format!("{d}/blocks/{block}/history/revert"), json!({"to_seq": to_seq}))?
                    }
                    _ => self.call(Method::POST, &format!("{d}/ops/{}", op.name().replace('_', "-")), args)?,
                }
            }
        };
        Ok(match status {
            200..=299 | 502 => None,
            _ => Some(body["error"].as_str().unwrap_or("?").to_string()),
        })
    }
}

/// The CLI invocation for `step`.
fn cli_args(file: &str, step: &Step) -> Vec<String> {
    let mut args: Vec<String> = Vec::new();
    match step {
        Step::Run(roots) => {
            let roots: Vec<&str> = roots.iter().map(BlockId::as_str).collect();
            args.extend(["run".into(), file.into(), format!("--roots={}", roots.join(","))]);
        }
        Step::Op(Operation::EditText { block, content }) => {
            args.extend(["edit".into(), file.into(), block.to_string(), format!("--content={content}")]);
        }
        Step::Op(Operation::Revert { block, to_seq }) => {
            args.extend(["history".into(), file.into(), block.to_string(), format!("--revert={to_seq}")]);
        }
        Step::Op(op) => {
            args.extend(["op".into(), file.into(), op.name().replace('_', "-")]);
            let value = serde_json::to_value(op).unwrap();
            for (key, v) in value.as_object().unwrap() {
                let flag = key.replace('_', "-");
                match (key.as_str(), v) {
                    ("op", _) => {}
                    ("geometry", Value::Object(g)) => {
                        for (k, n) in g {
                            args.push(format!("--{k}={n}"));
                        }
                    }
                    ("sink" | "params" | "value", v) => args.push(format!("--{flag}={v}")),
                    (_, Value::String(s)) => args.push(format!("--{flag}={s}")),
                    (_, v) => args.push(format!("--{flag}={v}")),
                }
            }
        }
    }
    args
}

fn run_cli(dir: &Path, args: &[String]) -> Result<Option<String>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_lmcanvas"))
        .current_dir(dir)
        .env_remove("LMCANVAS_PROVIDER")
        .arg("--json")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0) | Some(3) => Ok(None),
        Some(2) => {
            let error: Value = serde_json::from_slice(&out.stderr).map_err(|e| format!("stderr not JSON: {e}"))?;
            Ok(Some(error["error"].as_str().unwrap_or("?").to_string()))
        }
        code => Err(format!("{args:?} exited {code:?}: {}", String::from_utf8_lossy(&out.stderr))),
    }
}

fn differential() -> Verdict {
    let library = tempfile::tempdir().map_err(|e| e.to_string())?;
    let state = AppState::new(library.path(), Arc::new(MockProvider));
    let addr = serve_in_background(state).map_err(|e| e.to_string())?;
    let http = Http { client: reqwest::blocking::Client::new(), base: format!("http://{addr}") };
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let steps_total = AtomicUsize::new(0);
    let errors_total = AtomicUsize::new(0);
    let runs_total = AtomicUsize::new(0);
    par_cases(200, |i| {
        let mut rng = rng_for(9, i);
        let len = rng.gen_range(1..=30);
        let (steps, _) = random_script(&mut rng, len, 0.1);
        steps_total.fetch_add(steps.len(), Relaxed);
        let id = format!("script{i}");
        let (status, body) = http.call(reqwest::Method::POST, "/documents", json!({"id": id, "title": "scratch"}))?;
        if status != 201 {
            return Err(format!("create: {status} {body}"));
        }
        let dir = scratch.path().join(&id);
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        run_cli(&dir, &["new".into(), "scratch.lmcanvas".into(), "--title=scratch".into()])?;

        let mut local = CanvasDocument::new("scratch", "scratch");
        for (n, step) in steps.iter().enumerate() {
            let expected = apply_step(&mut local, step).err();
            if expected.is_some() {
                errors_total.fetch_add(1, Relaxed);
            }
            if matches!(step, Step::Run(_)) {
                runs_total.fetch_add(1, Relaxed);
            }
            let over_http = http.step(&id, step)?;
            if over_http != expected {
                return Err(format!("step {n} {step:?}: in-process {expected:?}, HTTP {over_http:?}"));
            }
            let over_cli = run_cli(&dir, &cli_args("scratch.lmcanvas", step))?;
            if over_cli != expected {
                return Err(format!("step {n} {step:?}: in-process {expected:?}, CLI {over_cli:?}"));
            }
        }
        let want = normalize(serde_json::to_value(&local).unwrap());
        let (_, served) = http.call(reqwest::Method::GET, &format!("/documents/{id}"), Value::Null)?;
        if normalize(served) != want {
            return Err("final HTTP document differs from in-process".into());
        }
        let file = store::load(dir.join("scratch.lmcanvas")).map_err(|e| e.to_string())?;
        if normalize(serde_json::to_value(&file).unwrap()) != want {
            return Err("final CLI document differs from in-process".into());
        }
        Ok(())
    })?;
    Ok(format!(
        "200 scripts ({} steps, {} expected errors, {} runs) equal over HTTP and CLI",
        steps_total.load(Relaxed),
        errors_total.load(Relaxed),
        runs_total.load(Relaxed)
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("template round-trip", template_round_trip),
        ("prong/select scanner oracle", scanner_oracle),
        ("cross-product law", cross_product),
        ("chaining correctness", chaining),
        ("document fuzz", document_fuzz),
        ("history replay", history_replay),
        ("persistence", persistence),
        ("mock determinism", mock_determinism),
        ("API/core differential", differential),
        ("select-sink splice", select_splice),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let verdict = check();
        let elapsed = start.elapsed();
        match verdict {
            Ok(detail) => println!("PASS {name}: {detail} [{elapsed:.1?}]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{elapsed:.1?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
