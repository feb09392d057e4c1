//! `lmcanvas`: headless driver for `.lmcanvas` documents.
//!
//! Exit codes: 0 success, 1 usage error, 2 document or integrity error,
//! 3 provider error.

mod args;
mod failure;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use lmcanvas_core::{store, BlockId, CanvasDocument, CanvasError, Engine, GenerationStatus, Operation, ProviderConfig};
use lmcanvas_service::{valid_document_id, ServiceConfig};
use serde::Serialize;
use serde_json::{json, Value};

use args::{Cli, Command, OpArgs};
use failure::Failure;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let json_errors = cli.json;
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            failure.report(json_errors);
            ExitCode::from(failure.exit_code())
        }
    }
}

fn execute(command: Command) -> Result<u8, Failure> {
    match command {
        Command::New { file, title, id } => new(&file, title, id),
        Command::Show { file, block } => show(&file, block),
        Command::Edit { file, block, content } => {
            let op = Operation::EditText { block: BlockId::new(block), content };
            apply(&file, &op)
        }
        Command::Op { file, name, args } => {
            let op = (*args).into_operation(&name)?;
            apply(&file, &op)
        }
        Command::Run { file, roots, provider, max_in_flight } => run(&file, &roots, provider, max_in_flight),
        Command::History { file, block, revert } => history(&file, block, revert),
        Command::Serve { host, port, library, provider, max_in_flight } => {
            let mut provider_config = ProviderConfig::from_env()?;
            if let Some(kind) = provider {
                provider_config = provider_config.with_kind(kind);
            }
            let config = ServiceConfig { host, port, library, provider: provider_config, max_in_flight };
            serve(config)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn print(value: &Value) {
    emit(&format!("{}\n", serde_json::to_string_pretty(value).expect("json values serialize")));
}

/// One line of `run` output.
#[derive(Serialize)]
struct RecordLine<'a> {
    pipeline: &'a BlockId,
    text_slot: &'a BlockId,
    model_slot: &'a BlockId,
    status: &'static str,
    output_text: &'a str,
}

fn new(file: &Path, title: Option<String>, id: Option<String>) -> Result<u8, Failure> {
    if file.exists() {
        return Err(Failure::document("DocumentExists", format!("{} already exists", file.display())));
    }
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    let id = match id {
        Some(id) if valid_document_id(&id) => id,
        Some(id) => return Err(Failure::usage(format!("invalid document id `{id}`"))),
        None if valid_document_id(&stem) => stem.clone(),
        None => uuid::Uuid::new_v4().simple().to_string(),
    };
    let doc = CanvasDocument::new(id, title.unwrap_or(stem));
    store::save(&doc, file)?;
    print(&json!({"id": doc.id(), "path": file}));
    Ok(0)
}

fn show(file: &Path, block: Option<String>) -> Result<u8, Failure> {
    let doc = store::load(file)?;
    match block {
        None => emit(&store::to_canonical_string(&doc)),
        Some(id) => {
            let id = BlockId::new(id);
            let block = doc.block(&id).ok_or(CanvasError::UnknownBlock(id.clone()))?;
            print(&json!(block));
        }
    }
    Ok(0)
}

fn apply(file: &Path, op: &Operation) -> Result<u8, Failure> {
    let mut doc = store::load(file)?;
    let changes = doc.apply(op)?;
    store::save(&doc, file)?;
    print(&json!({"op": op.name(), "changes": changes}));
    Ok(0)
}

fn run(
    file: &Path,
    roots: &[String],
    provider: Option<lmcanvas_core::ProviderKind>,
    max_in_flight: usize,
) -> Result<u8, Failure> {
    let mut config = ProviderConfig::from_env()?;
    if let Some(kind) = provider {
        config = config.with_kind(kind);
    }
    let provider = config.build()?;
    let mut doc = store::load(file)?;
    let roots: Vec<BlockId> = roots.iter().map(BlockId::new).collect();
    let engine = Engine::new(provider.as_ref()).with_max_in_flight(max_in_flight);
    let report = engine.run(&mut doc, &roots)?;
    store::save(&doc, file)?;
    for record in &report.records {
        let line = RecordLine {
            pipeline: &record.pipeline,
            text_slot: &record.text_slot,
            model_slot: &record.model_slot,
            status: record.status.label(),
            output_text: &record.output_text,
        };
        emit(&format!("{}\n", serde_json::to_string(&line).expect("json values serialize")));
    }
    for failure in &report.routing_failures {
        eprintln!("warning: {}", serde_json::to_string(failure).expect("json values serialize"));
    }
    let provider_failures: Vec<&str> = report
        .records
        .iter()
        .filter_map(|r| match &r.status {
            GenerationStatus::ProviderError { message } => Some(message.as_str()),
            _ => None,
        })
        .collect();
    match provider_failures.first() {
        None => Ok(0),
        Some(first) => Err(Failure::provider(format!(
            "{} generation(s) failed: {first}",
            provider_failures.len()
        ))),
    }
}

fn history(file: &Path, block: String, revert: Option<u64>) -> Result<u8, Failure> {
    let mut doc = store::load(file)?;
    let block = BlockId::new(block);
    if let Some(to_seq) = revert {
        doc.apply(&Operation::Revert { block: block.clone(), to_seq })?;
        store::save(&doc, file)?;
    }
    let history = doc.history(&block).ok_or_else(|| CanvasError::UnknownBlock(block.clone()))?;
    print(&json!({"block": block, "history": history}));
    Ok(0)
}

fn serve(config: ServiceConfig) -> Result<u8, Failure> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::document("IoError", e.to_string()))?;
    runtime.block_on(lmcanvas_service::serve(config))?;
    Ok(0)
}

impl OpArgs {
    fn into_operation(self, name: &str) -> Result<Operation, Failure> {
        let mut object = self.fields(name)?;
        object.insert("op".into(), Value::String(name.replace('-', "_")));
        serde_json::from_value(Value::Object(object))
            .map_err(|e| Failure::usage(format!("bad arguments for `{name}`: {e}")))
    }
}
