use std::sync::Arc;
use std::time::Duration;

use lmcanvas_core::{BlockId, CanvasDocument, CanvasError, Geometry, MockProvider, ModelParams, RecordId, Sink};
use lmcanvas_service::{serve_in_background, status_for, ApiError, AppState, REVISION_HEADER};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

struct Server {
    base: String,
    state: AppState,
    client: Client,
    _dir: tempfile::TempDir,
}

impl Server {
    fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let state = AppState::new(dir.path(), Arc::new(MockProvider));
        let addr = serve_in_background(state.clone()).unwrap();
        Self {
            base: format!("http://{addr}"),
            state,
            client: Client::new(),
            _dir: dir,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn send(&self, method: reqwest::Method, path: &str, body: Option<Value>) -> (StatusCode, Value, Option<u64>) {
        let mut request = self.client.request(method, self.url(path));
        if let Some(body) = body {
            request = request.json(&body);
        }
        let response = request.send().await.unwrap();
        let status = response.status();
        let revision = response
            .headers()
            .get(REVISION_HEADER)
            .map(|v| v.to_str().unwrap().parse().unwrap());
        let text = response.text().await.unwrap();
        let value = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap() };
        (status, value, revision)
    }

    async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        let (s, v, _) = self.send(reqwest::Method::POST, path, Some(body)).await;
        (s, v)
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let (s, v, _) = self.send(reqwest::Method::GET, path, None).await;
        (s, v)
    }

    async fn new_doc(&self, id: &str) {
        let (status, body) = self.post("/documents", json!({"id": id, "title": "t"})).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
    }

    async fn block(&self, doc: &str, body: Value) -> String {
        let (status, value) = self.post(&format!("/documents/{doc}/blocks"), body).await;
        assert_eq!(status, StatusCode::CREATED, "{value}");
        value["block"]["id"].as_str().unwrap().to_string()
    }
}

#[tokio::test]
async fn document_lifecycle() {
    let s = Server::start();
    let (status, list) = s.get("/documents").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list["documents"], json!([]));
    s.new_doc("d1").await;
    let (status, doc) = s.get("/documents/d1").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["title"], "t");
    let (_, list) = s.get("/documents").await;
    assert_eq!(list["documents"][0]["id"], "d1");
    let (status, body) = s.post("/documents", json!({"id": "d1"})).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    let (status, body) = s.get("/documents/missing").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownDocument");
    let (status, body) = s.post("/documents", json!({})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert!(body["id"].as_str().unwrap().len() >= 16);
}

#[tokio::test]
async fn generate_through_the_api() {
    let s = Server::start();
    s.new_doc("d").await;
    let t = s.block("d", json!({"kind": "text", "content": "a b c"})).await;
    let m = s.block("d", json!({"kind": "model", "params": {"temperature": 0.7}})).await;
    let p = s.block("d", json!({"kind": "pipeline", "text": t, "model": m})).await;
    let (status, body) = s.post("/documents/d/run?wait=true", json!({"roots": [p]})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["records"][0]["output_text"], "MOCK[t=0.7] c b a");
    assert_eq!(body["records"][0]["status"]["state"], "ok");
    let (_, doc) = s.get("/documents/d").await;
    assert_eq!(doc["blocks"][&p]["output"]["generations"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn concatenate_matches_in_process() {
    let s = Server::start();
    s.new_doc("d").await;
    let a = s.block("d", json!({"kind": "text", "content": "AB"})).await;
    let b = s.block("d", json!({"kind": "text", "content": "CD"})).await;
    let (status, body) = s.post("/documents/d/ops/concatenate", json!({"target": a, "source": b})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (_, doc) = s.get("/documents/d").await;
    assert_eq!(doc["blocks"][&a]["content"], "AB\nCD");
    assert!(doc["blocks"].get(&b).is_none());

    let mut oracle = CanvasDocument::new("d", "t");
    let oa = oracle.create_text_block("AB", Geometry::default()).unwrap();
    let ob = oracle.create_text_block("CD", Geometry::default()).unwrap();
    oracle.concatenate(&oa, &ob).unwrap();
    let strip = |v: Value| lmcanvas_testkit::normalize(v);
    assert_eq!(strip(doc), strip(json!(oracle)));
}

#[tokio::test]
async fn stale_revision_conflicts() {
    let s = Server::start();
    s.new_doc("d").await;
    let t = s.block("d", json!({"kind": "text", "content": "x"})).await;
    let (_, _, revision) = s.send(reqwest::Method::GET, "/documents/d", None).await;
    assert_eq!(revision, Some(1));
    let patch = |rev: &str| {
        s.client
            .patch(s.url(&format!("/documents/d/blocks/{t}")))
            .header(REVISION_HEADER, rev)
            .json(&json!({"content": "y"}))
    };
    let ok = patch("1").send().await.unwrap();
    assert_eq!(ok.status(), StatusCode::OK);
    let stale = patch("1").send().await.unwrap();
    assert_eq!(stale.status(), StatusCode::CONFLICT);
    let body: Value = stale.json().await.unwrap();
    assert_eq!(body["error"], "StaleRevision");
    assert_eq!(body["revision"], 2);
    let bad = patch("soon").send().await.unwrap();
    assert_eq!(bad.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn patch_updates_fields() {
    let s = Server::start();
    s.new_doc("d").await;
    let t = s.block("d", json!({"kind": "text", "content": "x"})).await;
    let m = s.block("d", json!({"kind": "model"})).await;
    let (status, _, _) = s
        .send(reqwest::Method::PATCH, &format!("/documents/d/blocks/{t}"), Some(json!({"x": 5.0, "width": 50.0})))
        .await;
    assert_eq!(status, StatusCode::OK);
    let (status, body, _) = s
        .send(
            reqwest::Method::PATCH,
            &format!("/documents/d/blocks/{m}"),
            Some(json!({"params": {"temperature": 1.5, "max_tokens": 8}})),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (status, body, _) = s
        .send(reqwest::Method::PATCH, &format!("/documents/d/blocks/{m}"), Some(json!({"field": "top_p", "value": 0.0})))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "InvalidParams");
    let (status, _, _) = s.send(reqwest::Method::PATCH, &format!("/documents/d/blocks/{m}"), Some(json!({}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, doc) = s.get("/documents/d").await;
    assert_eq!(doc["blocks"][&t]["geometry"]["x"], 5.0);
    assert_eq!(doc["blocks"][&t]["geometry"]["width"], 50.0);
    assert_eq!(doc["blocks"][&m]["params"]["temperature"], 1.5);
    assert_eq!(doc["blocks"][&m]["params"]["max_tokens"], 8);
}

#[tokio::test]
async fn errors_map_to_status_and_name() {
    let s = Server::start();
    s.new_doc("d").await;
    let host = s.block("d", json!({"kind": "text", "content": "[[input]]"})).await;
    let src = s.block("d", json!({"kind": "text", "content": "s [[input]]"})).await;
    let (status, _) = s.post("/documents/d/ops/attach", json!({"host": host, "prong_index": 0, "source": src})).await;
    assert_eq!(status, StatusCode::OK);
    let (status, body) = s.post("/documents/d/ops/attach", json!({"host": src, "prong_index": 0, "source": host})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "WouldCreateCycle");
    assert!(body["message"].as_str().unwrap().contains("cycle"));
    let (status, body) = s.post("/documents/d/ops/delete", json!({"block": "b99"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownBlock");
    let (status, body) = s.post("/documents/d/ops/teleport", json!({})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownOperation");
    let (status, body) = s.post("/documents/d/ops/split", json!({"block": host})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "InvalidRequest");
    let response = s
        .client
        .post(s.url("/documents/d/blocks"))
        .header("content-type", "application/json")
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert_eq!(response.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn cyclic_plan_is_rejected() {
    let s = Server::start();
    let mut doc = CanvasDocument::new("cyc", "cyc");
    let g = Geometry::default();
    let ta = doc.create_text_block("A [[input]]", g).unwrap();
    let tb = doc.create_text_block("B [[input]]", g).unwrap();
    let m1 = doc.create_model_block(ModelParams::default(), g).unwrap();
    let m2 = doc.create_model_block(ModelParams::default(), g).unwrap();
    let a = doc.create_pipeline(&ta, &m1, g).unwrap();
    let b = doc.create_pipeline(&tb, &m2, g).unwrap();
    doc.connect_output(&a, Sink::InputProng { target: tb, prong_index: 0 }).unwrap();
    doc.force_sink(&b, Sink::InputProng { target: ta, prong_index: 0 }).unwrap();
    s.state.install_unchecked(doc).await;
    let (status, body) = s.post("/documents/cyc/run?wait=true", json!({"roots": [b]})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "CycleDetected");
    let mut cycle: Vec<String> = serde_json::from_value(body["cycle"].clone()).unwrap();
    cycle.sort();
    assert_eq!(cycle, vec![a.to_string(), b.to_string()]);
}

#[tokio::test]
async fn provider_error_is_bad_gateway() {
    let s = Server::start();
    s.new_doc("d").await;
    let t = s.block("d", json!({"kind": "text", "content": "[[FAIL]]"})).await;
    let m = s.block("d", json!({"kind": "model"})).await;
    let p = s.block("d", json!({"kind": "pipeline", "text": t, "model": m})).await;
    let (status, body) = s.post("/documents/d/run?wait=true", json!({"roots": [p]})).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body["error"], "ProviderError");
    assert_eq!(body["records"][0]["status"]["state"], "provider_error");
}

async fn read_events(response: &mut reqwest::Response, want: usize) -> Vec<Value> {
    let mut buffer = String::new();
    let mut events = Vec::new();
    while events.len() < want {
        let chunk = tokio::time::timeout(Duration::from_secs(10), response.chunk())
            .await
            .expect("event arrives")
            .unwrap()
            .expect("stream open");
        buffer.push_str(std::str::from_utf8(&chunk).unwrap());
        while let Some(end) = buffer.find("\n\n") {
            let frame: String = buffer.drain(..end + 2).collect();
            for line in frame.lines() {
                if let Some(data) = line.strip_prefix("data: ") {
                    events.push(serde_json::from_str(data).unwrap());
                }
            }
        }
    }
    events
}

#[tokio::test]
async fn every_mutation_emits_one_ordered_event() {
    let s = Server::start();
    s.new_doc("d").await;
    let mut stream = s.client.get(s.url("/documents/d/events")).send().await.unwrap();
    assert_eq!(stream.status(), StatusCode::OK);
    let t = s.block("d", json!({"kind": "text", "content": "hello world"})).await;
    let (status, _) = s.post("/documents/d/ops/select", json!({"block": t, "start": 0, "end": 5})).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = s.post("/documents/d/ops/delete", json!({"block": "b99"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = s.post("/documents/d/ops/clear-selection", json!({})).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = s.post("/documents/d/ops/delete", json!({"block": t})).await;
    assert_eq!(status, StatusCode::OK);
    let events = read_events(&mut stream, 4).await;
    let kinds: Vec<&str> = events.iter().map(|e| e["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, vec!["block_changed", "selection_changed", "selection_changed", "block_deleted"]);
    let seqs: Vec<u64> = events.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, vec![1, 2, 3, 4]);
    assert_eq!(events[1]["payload"]["selection"]["end"], 5);
}

#[tokio::test]
async fn async_run_streams_generation_events() {
    let s = Server::start();
    s.new_doc("d").await;
    let t = s.block("d", json!({"kind": "text", "content": "x y"})).await;
    let m = s.block("d", json!({"kind": "model"})).await;
    let p = s.block("d", json!({"kind": "pipeline", "text": t, "model": m})).await;
    let mut stream = s.client.get(s.url("/documents/d/events")).send().await.unwrap();
    let (status, body) = s.post("/documents/d/run", json!({"roots": [p]})).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let run_id = body["run_id"].as_str().unwrap().to_string();
    let events = read_events(&mut stream, 2).await;
    assert_eq!(events[0]["kind"], "generation_started");
    assert_eq!(events[1]["kind"], "generation_finished");
    assert_eq!(events[1]["payload"]["run_id"], run_id.as_str());
    assert_eq!(events[1]["payload"]["records"][0]["output_text"], "MOCK[t=0.7] y x");
    let (_, doc) = s.get("/documents/d").await;
    assert_eq!(doc["records"].as_object().unwrap().len(), 1);
}

#[tokio::test]
async fn put_replaces_and_validates() {
    let s = Server::start();
    s.new_doc("d").await;
    let mut stream = s.client.get(s.url("/documents/d/events")).send().await.unwrap();
    let mut doc = CanvasDocument::new("d", "replaced");
    doc.create_text_block("fresh", Geometry::default()).unwrap();
    let text = lmcanvas_core::store::to_canonical_string(&doc);
    let put = |body: String| s.client.put(s.url("/documents/d")).body(body).send();
    assert_eq!(put(text.clone()).await.unwrap().status(), StatusCode::OK);
    let events = read_events(&mut stream, 1).await;
    assert_eq!(events[0]["kind"], "document_saved");
    let (_, fetched) = s.get("/documents/d").await;
    assert_eq!(fetched["title"], "replaced");

    let broken = text.replace("\"next_block\": 2", "\"next_block\": 1");
    let response = put(broken).await.unwrap();
    assert_eq!(response.status(), StatusCode::BAD_REQUEST);
    assert_eq!(response.json::<Value>().await.unwrap()["error"], "IntegrityError");
    let other = lmcanvas_core::store::to_canonical_string(&CanvasDocument::new("e", "e"));
    let response = put(other).await.unwrap();
    assert_eq!(response.json::<Value>().await.unwrap()["error"], "IdMismatch");
}

#[tokio::test]
async fn history_and_revert() {
    let s = Server::start();
    s.new_doc("d").await;
    let t = s.block("d", json!({"kind": "text", "content": "v0"})).await;
    for v in ["v1", "v2"] {
        let (status, _, _) = s
            .send(reqwest::Method::PATCH, &format!("/documents/d/blocks/{t}"), Some(json!({"content": v})))
            .await;
        assert_eq!(status, StatusCode::OK);
    }
    let (status, body) = s.post(&format!("/documents/d/blocks/{t}/history/revert"), json!({"to_seq": 0})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (_, history) = s.get(&format!("/documents/d/blocks/{t}/history")).await;
    let entries = history["history"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    assert_eq!(entries[3]["kind"], json!({"type": "reverted", "to_seq": 0}));
    assert_eq!(entries[3]["content_after"], "v0");
    let (status, body) = s.post(&format!("/documents/d/blocks/{t}/history/revert"), json!({"to_seq": 99})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "UnknownSeq");
}

#[tokio::test]
async fn documents_persist_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let first = serve_in_background(AppState::new(dir.path(), Arc::new(MockProvider))).unwrap();
    let client = Client::new();
    client
        .post(format!("http://{first}/documents"))
        .json(&json!({"id": "keep", "title": "kept"}))
        .send()
        .await
        .unwrap();
    client
        .post(format!("http://{first}/documents/keep/blocks"))
        .json(&json!({"kind": "text", "content": "persisted"}))
        .send()
        .await
        .unwrap();
    let second = serve_in_background(AppState::new(dir.path(), Arc::new(MockProvider))).unwrap();
    let doc: Value = client
        .get(format!("http://{second}/documents/keep"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(doc["blocks"]["b1"]["content"], "persisted");
}

#[test]
fn error_taxonomy_is_total() {
    let b = || BlockId::new("b1");
    let all = vec![
        CanvasError::UnknownBlock(b()),
        CanvasError::UnknownRecord(RecordId::new("g1")),
        CanvasError::NotATextBlock(b()),
        CanvasError::WrongBlockKind { block: b(), expected: "text", found: "model" },
        CanvasError::SameBlock(b()),
        CanvasError::SourceNested { block: b(), pipeline: b() },
        CanvasError::AlreadyNested { block: b(), pipeline: b() },
        CanvasError::DuplicateSlot { pipeline: b(), block: b() },
        CanvasError::WouldCreateCycle { from: b(), to: b() },
        CanvasError::RangeOutOfBounds { block: b(), start: 0, end: 1, len: 0 },
        CanvasError::SplitsCommandToken { block: b(), start: 0, end: 1 },
        CanvasError::InvalidParams { field: "top_p".into(), reason: "x".into() },
        CanvasError::InvalidGeometry("x".into()),
        CanvasError::InvalidSinkTarget("x".into()),
        CanvasError::UnknownProng { host: b(), index: 0, count: 0 },
        CanvasError::ProngOccupied { host: b(), index: 0 },
        CanvasError::UnknownSeq { block: b(), seq: 1 },
        CanvasError::UnresolvedProng { block: b(), index: 0 },
        CanvasError::NoSelection,
        CanvasError::DepthExceeded(64),
        CanvasError::CycleDetected { cycle: vec![b()] },
    ];
    let mut names = std::collections::BTreeSet::new();
    for error in all {
        let api = ApiError::from(error.clone());
        assert_eq!(api.status, status_for(&error));
        assert!(api.status == StatusCode::BAD_REQUEST || api.status == StatusCode::NOT_FOUND);
        assert_eq!(api.error, error.name());
        assert!(names.insert(api.error));
    }
    assert_eq!(names.len(), 21);
}
