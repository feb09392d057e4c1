//! Core of LMCanvas: a canvas document made of text, model, and pipeline
//! blocks, the `[[input]]` / `[[select]]` template language used inside text
//! blocks, and the engine that turns pipeline arrangements into generations.
//!
//! The document is the only mutable state. Every structural interaction
//! (concatenate, split, attach, expand, connect) is a method on
//! [`CanvasDocument`] or an [`Operation`] applied to it, and a document-wide
//! validator ([`CanvasDocument::validate`]) checks referential integrity,
//! nesting exclusivity, and dependency acyclicity.
//!
//! ```
//! use lmcanvas_core::{CanvasDocument, Engine, Geometry, MockProvider, ModelParams};
//!
//! let mut doc = CanvasDocument::new("doc-1", "Poems");
//! let text = doc.create_text_block("a b c", Geometry::default()).unwrap();
//! let model = doc.create_model_block(ModelParams::default(), Geometry::default()).unwrap();
//! let pipeline = doc.create_pipeline(&text, &model, Geometry::default()).unwrap();
//!
//! let provider = MockProvider;
//! let report = Engine::new(&provider).generate(&mut doc, &pipeline).unwrap();
//! assert_eq!(report.records[0].output_text, "MOCK[t=0.7] c b a");
//! ```

pub mod engine;
pub mod error;
pub mod history;
pub mod model;
pub mod ops;
pub mod provider;
pub mod store;
pub mod template;

pub use engine::{plan, route, Engine, ExecutionPlan, GenerationRecord, GenerationStatus, RouteOutcome, RunReport};
pub use error::CanvasError;
pub use history::{EntryKind, History, HistoryEntry};
pub use model::{
    Block, BlockId, BlockKind, CanvasDocument, ChangeReport, Clock, Geometry, IntegrityViolations, ModelBlock,
    ModelParams, OutputContainer, PipelineBlock, ProngAttachment, RecordId, Selection, Sink, TextBlock,
    CONCATENATE_SEPARATOR, CONTINUATION_SEPARATOR, SCHEMA_VERSION,
};
pub use ops::Operation;
pub use provider::{
    CompletionProvider, CompletionRequest, CompletionResult, FinishReason, HttpProvider, MockProvider,
    ProviderConfig, ProviderError, ProviderKind,
};
pub use template::{parse_template, render_template, ResolvedPrompt, TemplateSegment};
