//! Function-calling tool registry with argument validation and a wall-clock
//! budget per call.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::sync::{Arc, RwLock};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use super::Clock;
use crate::emit::{emit, TargetProfile};
use crate::kb::{Embedder, KnowledgeBase};
use crate::model::{
    fill_defaults, normalize_units, validate, DefaultsTable, PartialProblem, SlopeProblem, Target,
};
use crate::solver::{render_svg, search_critical, ResultFile};

pub const DEFAULT_TOOL_BUDGET: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ToolError {
    #[error("unknown tool `{name}`")]
    UnknownTool { name: String },
    #[error("invalid argument {field}: {reason}")]
    ArgumentValidation { field: String, reason: String },
    #[error("tool `{tool}` exceeded its {budget_ms} ms budget")]
    ToolTimeout { tool: String, budget_ms: u64 },
    #[error("tool `{tool}` failed: {message}")]
    Failed { tool: String, message: String },
}

impl ToolError {
    pub fn code(&self) -> &'static str {
        match self {
            ToolError::UnknownTool { .. } => "UNKNOWN_TOOL",
            ToolError::ArgumentValidation { .. } => "ARGUMENT_VALIDATION",
            ToolError::ToolTimeout { .. } => "TOOL_TIMEOUT",
            ToolError::Failed { .. } => "TOOL_FAILED",
        }
    }

    fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ToolError::ArgumentValidation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    Number,
    Integer,
    String,
    Boolean,
    Object,
    Array,
}

impl ParamType {
    fn admits(self, v: &Value) -> bool {
        match self {
            ParamType::Number => v.is_number(),
            ParamType::Integer => v.is_i64() || v.is_u64(),
            ParamType::String => v.is_string(),
            ParamType::Boolean => v.is_boolean(),
            ParamType::Object => v.is_object(),
            ParamType::Array => v.is_array(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ParamType,
    pub required: bool,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

impl ParamSpec {
    pub fn required(name: &str, ty: ParamType, description: &str) -> Self {
        Self {
            name: name.into(),
            ty,
            required: true,
            description: description.into(),
            unit: None,
        }
    }

    pub fn optional(name: &str, ty: ParamType, description: &str) -> Self {
        Self {
            required: false,
            ..Self::required(name, ty, description)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolSpec {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParamSpec>,
    pub result_schema: Value,
}

impl ToolSpec {
    fn check(&self, args: &Map<String, Value>) -> Result<(), ToolError> {
        for key in args.keys() {
            if !self.parameters.iter().any(|p| &p.name == key) {
                return Err(ToolError::invalid(key.as_str(), "unknown argument"));
            }
        }
        for p in &self.parameters {
            match args.get(&p.name) {
                None | Some(Value::Null) if p.required => {
                    return Err(ToolError::invalid(&p.name, "required argument is missing"))
                }
                Some(v) if !v.is_null() && !p.ty.admits(v) => {
                    return Err(ToolError::invalid(
                        &p.name,
                        format!("expected {:?}", p.ty).to_lowercase(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub tool: String,
    pub arguments: Map<String, Value>,
}

impl ToolCall {
    pub fn new(tool: &str, arguments: Value) -> Self {
        Self {
            tool: tool.to_string(),
            arguments: match arguments {
                Value::Object(m) => m,
                _ => Map::new(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub tool: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ToolError>,
    pub duration_ms: u64,
}

pub type Handler = Arc<dyn Fn(Map<String, Value>) -> Result<Value, ToolError> + Send + Sync>;

/// Name-keyed tool table. Registration happens at startup; dispatch takes
/// `&self` and is safe to call concurrently.
#[derive(Clone)]
pub struct ToolRegistry {
    tools: BTreeMap<String, (ToolSpec, Handler)>,
    budget: Duration,
}

impl std::fmt::Debug for ToolRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToolRegistry")
            .field("tools", &self.tools.keys().collect::<Vec<_>>())
            .field("budget", &self.budget)
            .finish()
    }
}

impl Default for ToolRegistry {
    fn default() -> Self {
        Self::new(DEFAULT_TOOL_BUDGET)
    }
}

impl ToolRegistry {
    pub fn new(budget: Duration) -> Self {
        Self {
            tools: BTreeMap::new(),
            budget,
        }
    }

    /// Adds a tool. Names are unique; a second registration is rejected.
    pub fn register(&mut self, spec: ToolSpec, handler: Handler) -> Result<(), String> {
        if self.tools.contains_key(&spec.name) {
            return Err(format!("tool `{}` is already registered", spec.name));
        }
        self.tools.insert(spec.name.clone(), (spec, handler));
        Ok(())
    }

    pub fn specs(&self) -> Vec<&ToolSpec> {
        self.tools.values().map(|(s, _)| s).collect()
    }

    pub fn budget(&self) -> Duration {
        self.budget
    }

    /// Validates the arguments and runs the handler on a worker thread. A
    /// handler still running when the budget expires is abandoned and the
    /// call reports `ToolTimeout`.
    pub fn dispatch(&self, call: &ToolCall, clock: &dyn Clock) -> ToolResult {
        let start = clock.now_ms();
        let outcome = self.run(call);
        let duration_ms = clock.now_ms().saturating_sub(start);
        match outcome {
            Ok(payload) => ToolResult {
                tool: call.tool.clone(),
                ok: true,
                payload: Some(payload),
                error: None,
                duration_ms,
            },
            Err(e) => ToolResult {
                tool: call.tool.clone(),
                ok: false,
                payload: None,
                error: Some(e),
                duration_ms,
            },
        }
    }

    fn run(&self, call: &ToolCall) -> Result<Value, ToolError> {
        let (spec, handler) = self
            .tools
            .get(&call.tool)
            .ok_or_else(|| ToolError::UnknownTool {
                name: call.tool.clone(),
            })?;
        spec.check(&call.arguments)?;
        let (tx, rx) = mpsc::channel();
        let handler = Arc::clone(handler);
        let args = call.arguments.clone();
        thread::spawn(move || {
            let _ = tx.send(handler(args));
        });
        match rx.recv_timeout(self.budget) {
            Ok(r) => r,
            Err(mpsc::RecvTimeoutError::Timeout) => Err(ToolError::ToolTimeout {
                tool: call.tool.clone(),
                budget_ms: self.budget.as_millis() as u64,
            }),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(ToolError::Failed {
                tool: call.tool.clone(),
                message: "handler panicked".into(),
            }),
        }
    }
}

/// Turns a problem-file argument into a complete, valid problem. The first
/// violation is reported with its field path.
fn problem_arg(
    args: &Map<String, Value>,
    defaults: &DefaultsTable,
) -> Result<SlopeProblem, ToolError> {
    let raw = args.get("problem").cloned().unwrap_or(Value::Null);
    let partial: PartialProblem =
        serde_json::from_value(raw).map_err(|e| ToolError::invalid("problem", e.to_string()))?;
    let partial =
        normalize_units(&partial).map_err(|e| ToolError::invalid("problem", e.to_string()))?;
    let problem = fill_defaults(&partial, defaults)
        .map_err(|e| ToolError::invalid("problem", e.to_string()))?;
    let report = validate(&problem);
    if let Some(v) = report.violations.first() {
        return Err(ToolError::invalid(&v.field_path, &v.message));
    }
    Ok(problem)
}

fn failed(tool: &str) -> impl Fn(String) -> ToolError + '_ {
    move |message| ToolError::Failed {
        tool: tool.to_string(),
        message,
    }
}

/// The four built-in tools: `emit_script`, `run_solver`, `kb_search` and
/// `make_plot`.
pub fn builtin_registry(
    kb: Arc<RwLock<KnowledgeBase>>,
    embedder: Arc<dyn Embedder>,
    defaults: DefaultsTable,
    budget: Duration,
) -> ToolRegistry {
    let mut reg = ToolRegistry::new(budget);
    let problem_param =
        || ParamSpec::required("problem", ParamType::Object, "problem file document");

    let d = defaults.clone();
    reg.register(
        ToolSpec {
            name: "emit_script".into(),
            description: "Render a problem as a script for a target software profile".into(),
            parameters: vec![
                problem_param(),
                ParamSpec::required("target", ParamType::String, "ADONIS_PROFILE or HYRCAN_PROFILE"),
            ],
            result_schema: json!({"target": "string", "text": "string", "problem_hash": "string", "emitter_version": "string"}),
        },
        Arc::new(move |args| {
            let target = args["target"].as_str().and_then(Target::parse).unwrap_or(Target::None);
            let profile = TargetProfile::for_target(target)
                .map_err(|e| ToolError::invalid("target", e.to_string()))?;
            let problem = problem_arg(&args, &d)?;
            let script = emit(&problem, &profile).map_err(|e| failed("emit_script")(e.to_string()))?;
            serde_json::to_value(script).map_err(|e| failed("emit_script")(e.to_string()))
        }),
    )
    .expect("unique");

    let d = defaults.clone();
    reg.register(
        ToolSpec {
            name: "run_solver".into(),
            description: "Search for the critical slip circle and its factor of safety".into(),
            parameters: vec![problem_param()],
            result_schema: json!({"fos": "number", "critical_circle": "object", "slices": "array", "meta": "object"}),
        },
        Arc::new(move |args| {
            let problem = problem_arg(&args, &d)?;
            let result = search_critical(&problem).map_err(|e| failed("run_solver")(e.to_string()))?;
            serde_json::to_value(ResultFile::new(&problem, &result)).map_err(|e| failed("run_solver")(e.to_string()))
        }),
    )
    .expect("unique");

    reg.register(
        ToolSpec {
            name: "kb_search".into(),
            description: "Retrieve knowledge-base passages relevant to a query".into(),
            parameters: vec![
                ParamSpec::required("query", ParamType::String, "search text"),
                ParamSpec::optional("k", ParamType::Integer, "number of hits, default 4"),
            ],
            result_schema: json!({"hits": "array of RetrievalHit"}),
        },
        Arc::new(move |args| {
            let query = args["query"].as_str().unwrap_or_default();
            let k = args.get("k").and_then(Value::as_u64).unwrap_or(4) as usize;
            let store = kb
                .read()
                .map_err(|_| failed("kb_search")("knowledge base lock poisoned".into()))?;
            let hits = store
                .search(query, k, embedder.as_ref())
                .map_err(|e| failed("kb_search")(e.to_string()))?;
            Ok(json!({ "hits": hits }))
        }),
    )
    .expect("unique");

    reg.register(
        ToolSpec {
            name: "make_plot".into(),
            description: "Draw the cross-section and critical circle of a solver result as SVG"
                .into(),
            parameters: vec![ParamSpec::required(
                "result",
                ParamType::Object,
                "solver result document",
            )],
            result_schema: json!({"svg": "string"}),
        },
        Arc::new(move |args| {
            let result: ResultFile = serde_json::from_value(args["result"].clone())
                .map_err(|e| ToolError::invalid("result", e.to_string()))?;
            Ok(json!({ "svg": render_svg(&result) }))
        }),
    )
    .expect("unique");

    reg
}
