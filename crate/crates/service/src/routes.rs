use std::collections::BTreeMap;
use std::convert::Infallible;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use lmcanvas_core::{
    plan, store, BlockId, CanvasDocument, ChangeReport, Clock, Engine, Geometry, ModelParams, Operation,
};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio_stream::wrappers::BroadcastStream;
use tokio_stream::StreamExt;

use crate::error::ApiError;
use crate::events::EventKind;
use crate::state::{valid_document_id, AppState, DocState};

/// Request header carrying the revision a mutation was based on; responses
/// carry the document's current revision in the same header.
pub const REVISION_HEADER: &str = "x-lmcanvas-revision";

/// The operations reachable under `/documents/{id}/ops/{name}`.
pub const OP_NAMES: [&str; 9] = [
    "concatenate",
    "split",
    "attach",
    "detach",
    "expand",
    "connect-output",
    "select",
    "clear-selection",
    "delete",
];

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/documents", get(list_documents).post(create_document))
        .route("/documents/{id}", get(get_document).put(put_document))
        .route("/documents/{id}/blocks", post(create_block))
        .route("/documents/{id}/blocks/{bid}", axum::routing::patch(patch_block))
        .route("/documents/{id}/blocks/{bid}/history", get(get_history))
        .route("/documents/{id}/blocks/{bid}/history/revert", post(revert))
        .route("/documents/{id}/ops/{name}", post(apply_op))
        .route("/documents/{id}/run", post(run))
        .route("/documents/{id}/events", get(events))
        .with_state(state)
}

type ApiResult = Result<Response, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let text: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(text).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn expected_revision(headers: &HeaderMap) -> Result<Option<u64>, ApiError> {
    headers
        .get(REVISION_HEADER)
        .map(|v| {
            v.to_str()
                .ok()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| ApiError::bad_request(format!("{REVISION_HEADER} must be an integer")))
        })
        .transpose()
}

fn respond(status: StatusCode, revision: u64, body: Value) -> Response {
    let mut response = (status, Json(body)).into_response();
    response
        .headers_mut()
        .insert(REVISION_HEADER, HeaderValue::from(revision));
    response
}

fn joined<T>(result: Result<Result<T, ApiError>, tokio::task::JoinError>) -> Result<T, ApiError> {
    result.map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

/// What a mutation closure hands back: response data, the event kind, and
/// the event payload.
type Mutation<T> = (T, EventKind, Value);

/// Runs `f` against the document under its lock. On success the document is
/// saved and exactly one event is emitted; on failure it is restored.
async fn mutate<T, F>(state: &AppState, id: &str, headers: &HeaderMap, f: F) -> Result<(T, u64), ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut CanvasDocument) -> Result<Mutation<T>, ApiError> + Send + 'static,
{
    let expected = expected_revision(headers)?;
    let handle = state.document(id).await?;
    let mut guard = handle.lock().await;
    guard.check_revision(expected)?;
    joined(
        tokio::task::spawn_blocking(move || {
            let before = guard.doc.clone();
            let outcome = f(&mut guard.doc).and_then(|out| guard.save().map(|()| out));
            match outcome {
                Ok((value, kind, payload)) => Ok((value, guard.emit(kind, payload))),
                Err(e) => {
                    guard.doc = before;
                    Err(e)
                }
            }
        })
        .await,
    )
}

fn op_event_kind(op: &Operation) -> EventKind {
    match op {
        Operation::Select { .. } | Operation::ClearSelection => EventKind::SelectionChanged,
        Operation::Delete { .. } => EventKind::BlockDeleted,
        _ => EventKind::BlockChanged,
    }
}

fn apply_one(doc: &mut CanvasDocument, op: Operation) -> Result<Mutation<ChangeReport>, ApiError> {
    let changes = doc.apply(&op)?;
    let kind = op_event_kind(&op);
    let mut payload = json!({"op": op.name(), "changes": changes});
    if kind == EventKind::SelectionChanged {
        payload["selection"] = json!(doc.selection());
    }
    Ok((changes, kind, payload))
}

async fn list_documents(State(state): State<AppState>) -> ApiResult {
    let library = state.library().to_path_buf();
    let listing = joined(
        tokio::task::spawn_blocking(move || store::list_documents(library).map_err(ApiError::from)).await,
    )?;
    let documents: Vec<Value> = listing
        .documents
        .iter()
        .map(|d| json!({"id": d.id, "title": d.title, "modified_at": d.modified_at}))
        .collect();
    let warnings: Vec<Value> = listing
        .warnings
        .iter()
        .map(|w| json!({"path": w.path, "message": w.message}))
        .collect();
    Ok(Json(json!({"documents": documents, "warnings": warnings})).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewDocument {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    title: String,
}

async fn create_document(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let request: NewDocument = parse_body(&body)?;
    let id = request.id.unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    if !valid_document_id(&id) {
        return Err(ApiError::bad_request(format!("invalid document id `{id}`")));
    }
    let doc = CanvasDocument::new(id, request.title);
    let body = json!(doc);
    state.create(doc).await?;
    Ok(respond(StatusCode::CREATED, 0, body))
}

async fn get_document(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let handle = state.document(&id).await?;
    let guard = handle.lock().await;
    Ok(respond(StatusCode::OK, guard.revision, json!(guard.doc)))
}

async fn put_document(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    let mut doc = store::from_str(text)?;
    if doc.id() != id {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "IdMismatch",
            format!("body is document `{}`, path is `{id}`", doc.id()),
        ));
    }
    doc.set_clock(Clock::system());
    let ((), revision) = mutate(&state, &id, &headers, move |current| {
        *current = doc;
        Ok(((), EventKind::DocumentSaved, json!({})))
    })
    .await?;
    Ok(respond(StatusCode::OK, revision, json!({"revision": revision})))
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum NewBlock {
    Text {
        #[serde(default)]
        content: String,
        #[serde(default)]
        geometry: Option<Geometry>,
    },
    Model {
        #[serde(default)]
        params: ModelParams,
        #[serde(default)]
        geometry: Option<Geometry>,
    },
    Pipeline {
        text: BlockId,
        model: BlockId,
        #[serde(default)]
        geometry: Option<Geometry>,
    },
}

impl From<NewBlock> for Operation {
    fn from(block: NewBlock) -> Self {
        match block {
            NewBlock::Text { content, geometry } => Operation::CreateText { content, geometry },
            NewBlock::Model { params, geometry } => Operation::CreateModel { params, geometry },
            NewBlock::Pipeline { text, model, geometry } => Operation::CreatePipeline { text, model, geometry },
        }
    }
}

async fn create_block(State(state): State<AppState>, Path(id): Path<String>, headers: HeaderMap, body: Bytes) -> ApiResult {
    let op: Operation = parse_body::<NewBlock>(&body)?.into();
    let ((changes, block), revision) = mutate(&state, &id, &headers, move |doc| {
        let (changes, kind, payload) = apply_one(doc, op)?;
        let block = changes.created.first().and_then(|b| doc.block(b)).map(|b| json!(b));
        Ok(((changes, block), kind, payload))
    })
    .await?;
    Ok(respond(
        StatusCode::CREATED,
        revision,
        json!({"block": block, "changes": changes, "revision": revision}),
    ))
}

/// Fields of a block update. Present groups apply in this order: content,
/// position, size, single parameter, parameter map.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct BlockPatch {
    content: Option<String>,
    x: Option<f64>,
    y: Option<f64>,
    width: Option<f64>,
    height: Option<f64>,
    field: Option<String>,
    value: Option<Value>,
    params: Option<BTreeMap<String, Value>>,
}

impl BlockPatch {
    fn operations(self, doc: &CanvasDocument, block: &BlockId) -> Result<Vec<Operation>, ApiError> {
        let current = doc
            .block(block)
            .map(|b| b.geometry())
            .ok_or_else(|| lmcanvas_core::CanvasError::UnknownBlock(block.clone()))?;
        let mut ops = Vec::new();
        if let Some(content) = self.content {
            ops.push(Operation::EditText {
                block: block.clone(),
                content,
            });
        }
        if self.x.is_some() || self.y.is_some() {
            ops.push(Operation::Move {
                block: block.clone(),
                x: self.x.unwrap_or(current.x),
                y: self.y.unwrap_or(current.y),
            });
        }
        if self.width.is_some() || self.height.is_some() {
            ops.push(Operation::Resize {
                block: block.clone(),
                width: self.width.unwrap_or(current.width),
                height: self.height.unwrap_or(current.height),
            });
        }
        match (self.field, self.value) {
            (Some(field), Some(value)) => ops.push(Operation::Configure {
                block: block.clone(),
                field,
                value,
            }),
            (None, None) => {}
            _ => return Err(ApiError::bad_request("`field` and `value` go together")),
        }
        for (field, value) in self.params.unwrap_or_default() {
            ops.push(Operation::Configure {
                block: block.clone(),
                field,
                value,
            });
        }
        if ops.is_empty() {
            return Err(ApiError::bad_request("empty update"));
        }
        Ok(ops)
    }
}

async fn patch_block(
    State(state): State<AppState>,
    Path((id, bid)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let patch: BlockPatch = parse_body(&body)?;
    let block = BlockId::new(bid);
    let (changes, revision) = mutate(&state, &id, &headers, move |doc| {
        let ops = patch.operations(doc, &block)?;
        let names: Vec<&str> = ops.iter().map(Operation::name).collect();
        let mut changes = ChangeReport::default();
        for op in &ops {
            changes.merge(doc.apply(op)?);
        }
        let payload = json!({"op": names.join("+"), "changes": changes});
        Ok((changes, EventKind::BlockChanged, payload))
    })
    .await?;
    Ok(respond(StatusCode::OK, revision, json!({"changes": changes, "revision": revision})))
}

async fn apply_op(
    State(state): State<AppState>,
    Path((id, name)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    if !OP_NAMES.contains(&name.as_str()) {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "UnknownOperation",
            format!("no operation `{name}` (expected one of {})", OP_NAMES.join(", ")),
        ));
    }
    let mut args: Value = parse_body(&body)?;
    let Some(object) = args.as_object_mut() else {
        return Err(ApiError::bad_request("operation arguments must be an object"));
    };
    object.insert("op".into(), json!(name.replace('-', "_")));
    let op: Operation =
        serde_json::from_value(args).map_err(|e| ApiError::bad_request(format!("invalid `{name}` arguments: {e}")))?;
    let (changes, revision) = mutate(&state, &id, &headers, move |doc| apply_one(doc, op)).await?;
    Ok(respond(StatusCode::OK, revision, json!({"changes": changes, "revision": revision})))
}

async fn get_history(State(state): State<AppState>, Path((id, bid)): Path<(String, String)>) -> ApiResult {
    let handle = state.document(&id).await?;
    let guard = handle.lock().await;
    let block = BlockId::new(bid);
    guard.doc.text_block(&block)?;
    let history = guard.doc.history(&block).cloned().unwrap_or_default();
    let mut provenance = BTreeMap::new();
    for entry in history.entries() {
        if let Some(record) = guard.doc.provenance(&block, entry.seq)? {
            provenance.insert(entry.seq.to_string(), record.clone());
        }
    }
    Ok(respond(
        StatusCode::OK,
        guard.revision,
        json!({"block": block, "history": history, "provenance": provenance}),
    ))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RevertRequest {
    to_seq: u64,
}

async fn revert(
    State(state): State<AppState>,
    Path((id, bid)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let request: RevertRequest = parse_body(&body)?;
    let op = Operation::Revert {
        block: BlockId::new(bid),
        to_seq: request.to_seq,
    };
    let (changes, revision) = mutate(&state, &id, &headers, move |doc| apply_one(doc, op)).await?;
    Ok(respond(StatusCode::OK, revision, json!({"changes": changes, "revision": revision})))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    roots: Vec<BlockId>,
}

#[derive(Deserialize, Default)]
struct RunQuery {
    #[serde(default)]
    wait: bool,
}

/// Executes the run on the locked document, saves, and emits
/// `generation_finished`. Returns the response body and revision.
fn finish_run(guard: &mut DocState, state: &AppState, run_id: &str, roots: &[BlockId]) -> Result<(Value, u64, bool), ApiError> {
    let provider = state.provider();
    let engine = Engine::new(provider.as_ref()).with_max_in_flight(state.max_in_flight());
    let outcome = engine.run(&mut guard.doc, roots);
    let (mut body, failed) = match outcome {
        Ok(report) => {
            let failed = report.has_provider_error();
            let body = json!({
                "run_id": run_id,
                "records": report.records,
                "routing_failures": report.routing_failures,
                "changes": report.changes,
            });
            (body, failed)
        }
        Err(e) => {
            let api = ApiError::from(e);
            (json!({"run_id": run_id, "error": api.error, "message": api.message}), false)
        }
    };
    guard.save()?;
    let revision = guard.emit(EventKind::GenerationFinished, body.clone());
    body["revision"] = json!(revision);
    Ok((body, revision, failed))
}

async fn run(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<RunQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let request: RunRequest = parse_body(&body)?;
    let expected = expected_revision(&headers)?;
    let handle = state.document(&id).await?;
    let mut guard = handle.lock().await;
    guard.check_revision(expected)?;
    plan(&guard.doc, &request.roots)?;
    let run_id = uuid::Uuid::new_v4().simple().to_string();
    let started = guard.emit(EventKind::GenerationStarted, json!({"run_id": run_id, "roots": request.roots}));
    let roots = request.roots;
    let worker_state = state.clone();
    let worker_run = run_id.clone();
    let work = move || finish_run(&mut guard, &worker_state, &worker_run, &roots);
    if !query.wait {
        tokio::spawn(async move {
            match tokio::task::spawn_blocking(work).await {
                Ok(Ok(_)) => {}
                Ok(Err(e)) => tracing::error!(error = %e.message, "run failed"),
                Err(e) => tracing::error!(error = %e, "run worker panicked"),
            }
        });
        return Ok(respond(
            StatusCode::ACCEPTED,
            started,
            json!({"run_id": run_id, "revision": started}),
        ));
    }
    let (mut body, revision, failed) = joined(tokio::task::spawn_blocking(work).await)?;
    if failed {
        let message = body["records"]
            .as_array()
            .and_then(|records| records.iter().find_map(|r| r["status"]["message"].as_str().map(str::to_string)))
            .unwrap_or_else(|| "provider error".into());
        body["error"] = json!("ProviderError");
        body["message"] = json!(message);
        return Ok(respond(StatusCode::BAD_GATEWAY, revision, body));
    }
    if body.get("error").is_some() {
        return Ok(respond(StatusCode::BAD_REQUEST, revision, body));
    }
    Ok(respond(StatusCode::OK, revision, body))
}

async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let handle = state.document(&id).await?;
    let receiver = handle.subscribe();
    let stream = BroadcastStream::new(receiver).filter_map(|item| {
        let event = item.ok()?;
        let data = serde_json::to_string(&event).ok()?;
        Some(Ok(Event::default().event(event.kind.as_str()).id(event.seq.to_string()).data(data)))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
