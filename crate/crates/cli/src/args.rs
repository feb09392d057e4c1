use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lmcanvas_core::{Engine, Geometry, ProviderKind};
use lmcanvas_service::DEFAULT_PORT;
use serde_json::{json, Map, Value};

use crate::failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "lmcanvas", version, about = "Headless driver for LMCanvas documents")]
pub struct Cli {
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create an empty document.
    New {
        file: PathBuf,
        #[arg(long)]
        title: Option<String>,
        /// Document id; defaults to the file stem.
        #[arg(long)]
        id: Option<String>,
    },
    /// Print a document, or one block.
    Show {
        file: PathBuf,
        #[arg(long)]
        block: Option<String>,
    },
    /// Replace the content of a text block.
    Edit {
        file: PathBuf,
        block: String,
        #[arg(long)]
        content: String,
    },
    /// Apply one operation, named as in the HTTP API (`concatenate`, `connect-output`, ...).
    Op {
        file: PathBuf,
        name: String,
        #[command(flatten)]
        args: Box<OpArgs>,
    },
    /// Run pipelines and print one JSON record per line.
    Run {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        roots: Vec<String>,
        #[arg(long)]
        provider: Option<ProviderKind>,
        #[arg(long, default_value_t = Engine::DEFAULT_MAX_IN_FLIGHT)]
        max_in_flight: usize,
    },
    /// Print a block's history, optionally reverting first.
    History {
        file: PathBuf,
        block: String,
        #[arg(long)]
        revert: Option<u64>,
    },
    /// Serve a library directory over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, env = "LMCANVAS_LIBRARY", default_value = ".")]
        library: PathBuf,
        #[arg(long)]
        provider: Option<ProviderKind>,
        #[arg(long, default_value_t = Engine::DEFAULT_MAX_IN_FLIGHT)]
        max_in_flight: usize,
    },
}

/// Operation fields. Only those the named operation takes may be given.
#[derive(Debug, Default, Args)]
pub struct OpArgs {
    #[arg(long)]
    pub content: Option<String>,
    #[arg(long)]
    pub block: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub host: Option<String>,
    #[arg(long)]
    pub prong_index: Option<usize>,
    #[arg(long)]
    pub start: Option<usize>,
    #[arg(long)]
    pub end: Option<usize>,
    #[arg(long)]
    pub pipeline: Option<String>,
    #[arg(long)]
    pub text: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub width: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub height: Option<f64>,
    /// Parameter name for `configure`.
    #[arg(long)]
    pub field: Option<String>,
    /// Parameter value for `configure`, as JSON (bare words are strings).
    #[arg(long, allow_negative_numbers = true)]
    pub value: Option<String>,
    /// Model parameters for `create-model`, as a JSON object.
    #[arg(long)]
    pub params: Option<String>,
    /// `container`, `select`, `continuation:<block>`, `input-prong:<block>:<index>`, or a JSON sink.
    #[arg(long)]
    pub sink: Option<String>,
    #[arg(long)]
    pub to_seq: Option<u64>,
}

impl OpArgs {
    /// The operation's JSON fields, without the `op` tag.
    pub fn fields(self, name: &str) -> Result<Map<String, Value>, Failure> {
        let mut out = Map::new();
        let mut put = |key: &str, value: Option<Value>| {
            if let Some(value) = value {
                out.insert(key.to_string(), value);
            }
        };
        put("content", self.content.map(Value::String));
        put("block", self.block.map(Value::String));
        put("target", self.target.map(Value::String));
        put("source", self.source.map(Value::String));
        put("host", self.host.map(Value::String));
        put("prong_index", self.prong_index.map(|v| json!(v)));
        put("start", self.start.map(|v| json!(v)));
        put("end", self.end.map(|v| json!(v)));
        put("pipeline", self.pipeline.map(Value::String));
        put("text", self.text.map(Value::String));
        put("model", self.model.map(Value::String));
        put("field", self.field.map(Value::String));
        put("to_seq", self.to_seq.map(|v| json!(v)));
        put("value", self.value.map(|v| serde_json::from_str(&v).unwrap_or(Value::String(v))));
        let params = match self.params {
            Some(p) => Some(serde_json::from_str(&p).map_err(|e| Failure::usage(format!("--params: {e}")))?),
            None => None,
        };
        put("params", params);
        let sink = match self.sink {
            Some(s) => Some(parse_sink(&s)?),
            None => None,
        };
        put("sink", sink);

        let coords = [("x", self.x), ("y", self.y), ("width", self.width), ("height", self.height)];
        if matches!(name, "move" | "resize") {
            for (key, value) in coords {
                put(key, value.map(|v| json!(v)));
            }
        } else if coords.iter().any(|(_, v)| v.is_some()) {
            let d = Geometry::default();
            let geometry = Geometry {
                x: self.x.unwrap_or(d.x),
                y: self.y.unwrap_or(d.y),
                width: self.width.unwrap_or(d.width),
                height: self.height.unwrap_or(d.height),
            };
            put("geometry", Some(json!(geometry)));
        }
        Ok(out)
    }
}

pub fn parse_sink(text: &str) -> Result<Value, Failure> {
    let bad = || Failure::usage(format!("unrecognised sink `{text}`"));
    if text.trim_start().starts_with('{') {
        return serde_json::from_str(text).map_err(|e| Failure::usage(format!("--sink: {e}")));
    }
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        ["container"] => Ok(json!({"type": "container"})),
        ["select"] => Ok(json!({"type": "select"})),
        ["continuation", target] => Ok(json!({"type": "continuation", "target": target})),
        ["input-prong", target, index] => {
            let index: usize = index.parse().map_err(|_| bad())?;
            Ok(json!({"type": "input_prong", "target": target, "prong_index": index}))
        }
        _ => Err(bad()),
    }
}
