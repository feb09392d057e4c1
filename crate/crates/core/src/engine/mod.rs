//! Pipeline execution.
//!
//! [`plan`] orders the pipelines a run needs into stages: a pipeline whose
//! output feeds a prong reachable from another pipeline's text slots runs in
//! an earlier stage. [`Engine::run`] executes the stages, binding each chained
//! pipeline's latest successful output to the prong it feeds for the rest of
//! the run. Within a stage, provider calls run concurrently; results are
//! committed in (pipeline id, text slot, model slot) order so the document
//! does not depend on scheduling.

mod route;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use route::{route, RouteAction, RouteOutcome};

use crate::error::CanvasError;
use crate::model::{find_cycle, BlockId, CanvasDocument, ChangeReport, ModelParams, RecordId, Sink};
use crate::provider::{CompletionProvider, CompletionRequest, CompletionResult, FinishReason, ProviderError};
use crate::template::{resolve_with, Bindings, BoundFeed, ResolvedPrompt};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case", deny_unknown_fields)]
pub enum GenerationStatus {
    Ok,
    ProviderError { message: String },
    /// The text slot could not be resolved (unattached prong, no selection).
    ResolveError { error: String, message: String },
}

impl GenerationStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, Self::Ok)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::ProviderError { .. } => "provider_error",
            Self::ResolveError { .. } => "resolve_error",
        }
    }

    pub fn message(&self) -> Option<&str> {
        match self {
            Self::Ok => None,
            Self::ProviderError { message } | Self::ResolveError { message, .. } => Some(message),
        }
    }
}

/// Provenance of one generation. The parameter snapshot is a copy taken at
/// execution time and is not affected by later reconfiguration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationRecord {
    pub id: RecordId,
    pub pipeline: BlockId,
    pub text_slot: BlockId,
    pub model_slot: BlockId,
    /// Absent only when the text slot failed to resolve.
    pub resolved_prompt: Option<ResolvedPrompt>,
    pub params_snapshot: ModelParams,
    pub output_text: String,
    pub finish_reason: Option<FinishReason>,
    pub output_block: Option<BlockId>,
    pub created_at: DateTime<Utc>,
    pub status: GenerationStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionPlan {
    /// Each stage only depends on earlier stages.
    pub stages: Vec<BTreeSet<BlockId>>,
    /// `(upstream, downstream)` pairs induced by input-prong sinks.
    pub edges: BTreeSet<(BlockId, BlockId)>,
}

impl ExecutionPlan {
    pub fn pipelines(&self) -> impl Iterator<Item = &BlockId> {
        self.stages.iter().flatten()
    }

    pub fn stage_of(&self, pipeline: &BlockId) -> Option<usize> {
        self.stages.iter().position(|s| s.contains(pipeline))
    }
}

/// Orders every pipeline the roots depend on into stages.
pub fn plan(document: &CanvasDocument, roots: &[BlockId]) -> Result<ExecutionPlan, CanvasError> {
    for root in roots {
        document.pipeline(root)?;
    }
    let mut feeders: BTreeMap<&BlockId, Vec<&BlockId>> = BTreeMap::new();
    for pipeline in document.pipelines() {
        if let Sink::InputProng { target, .. } = pipeline.output().sink() {
            feeders.entry(target).or_default().push(pipeline.id());
        }
    }
    let mut sources_by_host: BTreeMap<&BlockId, Vec<&BlockId>> = BTreeMap::new();
    for attachment in document.attachments() {
        sources_by_host.entry(&attachment.host).or_default().push(&attachment.source);
    }
    let upstream_of = |pipeline: &BlockId| -> Result<BTreeSet<BlockId>, CanvasError> {
        let mut upstream = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&BlockId> = document.pipeline(pipeline)?.text_slots().iter().collect();
        while let Some(text) = stack.pop() {
            if !seen.insert(text) {
                continue;
            }
            upstream.extend(feeders.get(text).into_iter().flatten().map(|p| (*p).clone()));
            stack.extend(sources_by_host.get(text).into_iter().flatten());
        }
        Ok(upstream)
    };

    let mut nodes: BTreeSet<BlockId> = BTreeSet::new();
    let mut edges: BTreeSet<(BlockId, BlockId)> = BTreeSet::new();
    let mut queue: Vec<BlockId> = roots.to_vec();
    while let Some(pipeline) = queue.pop() {
        if !nodes.insert(pipeline.clone()) {
            continue;
        }
        for up in upstream_of(&pipeline)? {
            edges.insert((up.clone(), pipeline.clone()));
            queue.push(up);
        }
    }

    let mut indegree: BTreeMap<&BlockId, usize> = nodes.iter().map(|n| (n, 0)).collect();
    let mut downstream: BTreeMap<&BlockId, Vec<&BlockId>> = BTreeMap::new();
    for (up, down) in &edges {
        *indegree.entry(down).or_default() += 1;
        downstream.entry(up).or_default().push(down);
    }
    let mut stages = Vec::new();
    let mut current: BTreeSet<BlockId> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(n, _)| (*n).clone())
        .collect();
    let mut placed = 0;
    while !current.is_empty() {
        placed += current.len();
        let mut next = BTreeSet::new();
        for node in &current {
            for down in downstream.get(node).into_iter().flatten() {
                let d = indegree.get_mut(*down).expect("every edge endpoint is a node");
                *d -= 1;
                if *d == 0 {
                    next.insert((*down).clone());
                }
            }
        }
        stages.push(std::mem::replace(&mut current, next));
    }
    if placed < nodes.len() {
        let edge_list: Vec<_> = edges.iter().cloned().collect();
        let cycle = find_cycle(&edge_list).unwrap_or_default();
        return Err(CanvasError::CycleDetected { cycle });
    }
    Ok(ExecutionPlan { stages, edges })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingFailure {
    pub record: RecordId,
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub records: Vec<GenerationRecord>,
    /// Successful generations whose sink could not take them; they stay in
    /// the output container.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub routing_failures: Vec<RoutingFailure>,
    #[serde(default)]
    pub changes: ChangeReport,
}

impl RunReport {
    pub fn has_provider_error(&self) -> bool {
        self.records
            .iter()
            .any(|r| matches!(r.status, GenerationStatus::ProviderError { .. }))
    }
}

struct Job {
    pipeline: BlockId,
    text: BlockId,
    model: BlockId,
    prompt: Result<ResolvedPrompt, CanvasError>,
    params: ModelParams,
}

pub struct Engine<'a> {
    provider: &'a dyn CompletionProvider,
    max_in_flight: usize,
}

impl<'a> Engine<'a> {
    pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

    pub fn new(provider: &'a dyn CompletionProvider) -> Self {
        Self {
            provider,
            max_in_flight: Self::DEFAULT_MAX_IN_FLIGHT,
        }
    }

    /// Caps concurrent provider calls; values below 1 are treated as 1.
    pub fn with_max_in_flight(mut self, max_in_flight: usize) -> Self {
        self.max_in_flight = max_in_flight.max(1);
        self
    }

    /// Generates once for every (text slot, model slot) pairing of one
    /// pipeline, text-major, and routes the outputs to its sink.
    pub fn generate(&self, document: &mut CanvasDocument, pipeline: &BlockId) -> Result<RunReport, CanvasError> {
        document.pipeline(pipeline)?;
        let mut report = RunReport::default();
        self.execute_stage(document, std::slice::from_ref(pipeline), &mut Bindings::new(), &mut report)?;
        Ok(report)
    }

    /// Runs the roots and everything upstream of them. The report lists the
    /// roots' records in stage order.
    pub fn run(&self, document: &mut CanvasDocument, roots: &[BlockId]) -> Result<RunReport, CanvasError> {
        let plan = plan(document, roots)?;
        let mut bindings = Bindings::new();
        let mut report = RunReport::default();
        for stage in &plan.stages {
            let stage: Vec<BlockId> = stage.iter().cloned().collect();
            self.execute_stage(document, &stage, &mut bindings, &mut report)?;
        }
        report.records.retain(|r| roots.contains(&r.pipeline));
        Ok(report)
    }

    fn execute_stage(
        &self,
        document: &mut CanvasDocument,
        stage: &[BlockId],
        bindings: &mut Bindings,
        report: &mut RunReport,
    ) -> Result<(), CanvasError> {
        let mut jobs = Vec::new();
        for pipeline_id in stage {
            let pipeline = document.pipeline(pipeline_id)?;
            for text in pipeline.text_slots() {
                let prompt = resolve_with(document, text, bindings);
                for model in pipeline.model_slots() {
                    jobs.push(Job {
                        pipeline: pipeline_id.clone(),
                        text: text.clone(),
                        model: model.clone(),
                        prompt: prompt.clone(),
                        params: document.model_block(model)?.params().clone(),
                    });
                }
            }
        }
        let mut outcomes = self.complete_all(&jobs).into_iter();

        let mut committed: BTreeMap<BlockId, Vec<RecordId>> = BTreeMap::new();
        for job in jobs {
            let outcome = match &job.prompt {
                Ok(_) => outcomes.next().flatten(),
                Err(_) => None,
            };
            let (status, output_text, finish_reason) = match (&job.prompt, outcome) {
                (Err(e), _) => (
                    GenerationStatus::ResolveError {
                        error: e.name().to_string(),
                        message: e.to_string(),
                    },
                    String::new(),
                    None,
                ),
                (Ok(_), Some(Ok(result))) => (GenerationStatus::Ok, result.text, Some(result.finish_reason)),
                (Ok(_), Some(Err(e))) => (
                    GenerationStatus::ProviderError { message: e.to_string() },
                    String::new(),
                    Some(FinishReason::Error),
                ),
                (Ok(_), None) => (
                    GenerationStatus::ProviderError {
                        message: "provider call did not complete".into(),
                    },
                    String::new(),
                    Some(FinishReason::Error),
                ),
            };
            let record = GenerationRecord {
                id: document.alloc_record_id(),
                pipeline: job.pipeline.clone(),
                text_slot: job.text,
                model_slot: job.model,
                resolved_prompt: job.prompt.ok(),
                params_snapshot: job.params,
                output_text,
                finish_reason,
                output_block: None,
                created_at: document.now(),
                status,
            };
            let id = record.id.clone();
            document.records.insert(id.clone(), record);
            document.pipeline_mut(&job.pipeline)?.output.generations.push(id.clone());
            report.changes.touch(&job.pipeline);
            committed.entry(job.pipeline).or_default().push(id);
        }

        for pipeline_id in stage {
            let records = committed.remove(pipeline_id).unwrap_or_default();
            let sink = document.pipeline(pipeline_id)?.output().sink().clone();
            let ok: Vec<RecordId> = records
                .iter()
                .filter(|id| document.record(id).is_some_and(|r| r.status.is_ok()))
                .cloned()
                .collect();
            let to_route: &[RecordId] = match sink {
                Sink::Select => &ok[..ok.len().min(1)],
                _ => &ok,
            };
            let mut latest_feed: Option<(BlockId, usize, BoundFeed)> = None;
            for record in to_route {
                match route(document, record) {
                    Ok(outcome) => {
                        if let RouteAction::Bound { target, prong_index, feed } = outcome.action {
                            latest_feed = Some((target, prong_index, feed));
                        }
                        report.changes.merge(outcome.changes);
                    }
                    Err(e) => report.routing_failures.push(RoutingFailure {
                        record: record.clone(),
                        error: e.name().to_string(),
                        message: e.to_string(),
                    }),
                }
            }
            if let Some((target, prong_index, feed)) = latest_feed {
                bindings.insert((target, prong_index), feed);
            }
            report
                .records
                .extend(records.iter().filter_map(|id| document.record(id).cloned()));
        }
        Ok(())
    }

    /// Runs the provider for every resolvable job, at most `max_in_flight`
    /// at a time. Results are in job order.
    fn complete_all(&self, jobs: &[Job]) -> Vec<Option<Result<CompletionResult, ProviderError>>> {
        let requests: Vec<CompletionRequest> = jobs
            .iter()
            .filter_map(|job| {
                job.prompt.as_ref().ok().map(|prompt| CompletionRequest {
                    prompt: prompt.text.clone(),
                    params: job.params.clone(),
                })
            })
            .collect();
        let results: Vec<Mutex<Option<Result<CompletionResult, ProviderError>>>> =
            requests.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.max_in_flight.min(requests.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(request) = requests.get(i) else { break };
                    let result = self.provider.complete(request);
                    *results[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(result);
                });
            }
        });
        results
            .into_iter()
            .map(|slot| slot.into_inner().unwrap_or_else(|e| e.into_inner()))
            .collect()
    }
}
