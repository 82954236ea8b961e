use std::fmt::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};
use std::time::Duration;

use regex::Regex;
use serde_json::{json, Value};

use super::plan::{plan_turn, present_violations, run_intent, TurnPlan};
use super::store::{ArtifactStore, SessionLog};
use super::tools::{builtin_registry, ToolCall, ToolRegistry, ToolResult, DEFAULT_TOOL_BUDGET};
use super::{
    AgentError, AgentKind, Artifact, ArtifactKind, Attachment, ChatSession, Clock, Message, Role,
    SessionEvent,
};
use crate::emit::EmittedScript;
use crate::extract::{
    extract_llm_with_images, extract_rule_based, extract_with_annotation, merge_turns,
    AnnotationFile, Conflict, ExtractError, ExtractionResult, ImageAnnotation, ImageInput,
    LlmBackend,
};
use crate::kb::{Embedder, KnowledgeBase, RetrievalHit};
use crate::model::{
    fill_defaults, fnv1a64, normalize_units, round_sig, DefaultsTable, FieldProvenance,
    PartialProblem, ProvenanceSource, SlopeProblem, Target,
};
use crate::solver::ResultFile;

/// File handed in with a user message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Upload {
    pub filename: String,
    pub media_type: String,
    pub bytes: Vec<u8>,
}

/// Runs chat turns. Holds everything that is shared between sessions; the
/// sessions themselves are passed in by the caller, which serializes turns
/// per session.
pub struct Orchestrator {
    registry: ToolRegistry,
    kb: Arc<RwLock<KnowledgeBase>>,
    backend: Arc<dyn LlmBackend>,
    defaults: DefaultsTable,
    clock: Arc<dyn Clock>,
    artifacts: Arc<ArtifactStore>,
    log: Option<SessionLog>,
}

impl Orchestrator {
    /// In-memory orchestrator with the built-in tools and the shipped
    /// defaults table.
    pub fn new(
        kb: Arc<RwLock<KnowledgeBase>>,
        embedder: Arc<dyn Embedder>,
        backend: Arc<dyn LlmBackend>,
        clock: Arc<dyn Clock>,
    ) -> Self {
        let defaults = DefaultsTable::shipped();
        Self {
            registry: builtin_registry(kb.clone(), embedder, defaults.clone(), DEFAULT_TOOL_BUDGET),
            kb,
            backend,
            defaults,
            clock,
            artifacts: Arc::new(ArtifactStore::in_memory()),
            log: None,
        }
    }

    /// Persists session logs under `sessions/` and artifacts under
    /// `artifacts/` of `data_dir`.
    pub fn with_data_dir(mut self, data_dir: &Path) -> Result<Self, AgentError> {
        self.artifacts = Arc::new(ArtifactStore::open(data_dir)?);
        self.log = Some(SessionLog::open(data_dir)?);
        Ok(self)
    }

    pub fn with_registry(mut self, registry: ToolRegistry) -> Self {
        self.registry = registry;
        self
    }

    pub fn with_tool_budget(mut self, embedder: Arc<dyn Embedder>, budget: Duration) -> Self {
        self.registry = builtin_registry(self.kb.clone(), embedder, self.defaults.clone(), budget);
        self
    }

    pub fn registry(&self) -> &ToolRegistry {
        &self.registry
    }

    pub fn artifacts(&self) -> &ArtifactStore {
        &self.artifacts
    }

    pub fn kb(&self) -> &Arc<RwLock<KnowledgeBase>> {
        &self.kb
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn create_session(
        &self,
        session_id: &str,
        agent: AgentKind,
        target: Target,
    ) -> Result<ChatSession, AgentError> {
        if let Some(log) = &self.log {
            if log.exists(session_id) {
                return Err(AgentError::SessionExists(session_id.to_string()));
            }
        }
        let session = ChatSession::new(session_id, agent, target, self.clock.now_ms())?;
        self.persist(&session, 0)?;
        Ok(session)
    }

    /// Rebuilds a session from its log and makes its artifacts downloadable.
    pub fn load_session(&self, session_id: &str) -> Result<ChatSession, AgentError> {
        if !super::valid_session_id(session_id) {
            return Err(AgentError::InvalidSessionId(session_id.to_string()));
        }
        let log = self
            .log
            .as_ref()
            .ok_or_else(|| AgentError::UnknownSession(session_id.to_string()))?;
        let events = log.load(session_id)?;
        let session = ChatSession::replay(&events).map_err(|message| AgentError::CorruptLog {
            path: format!("sessions/{session_id}.log"),
            message,
        })?;
        for a in &session.artifacts {
            self.artifacts.register(a);
        }
        Ok(session)
    }

    /// Ids of every persisted session.
    pub fn session_ids(&self) -> Result<Vec<String>, AgentError> {
        match &self.log {
            Some(log) => log.list(),
            None => Ok(Vec::new()),
        }
    }

    fn persist(&self, session: &ChatSession, from: usize) -> Result<(), AgentError> {
        if let Some(log) = &self.log {
            log.append(&session.session_id, &session.events()[from..])?;
        }
        Ok(())
    }

    fn dispatch(&self, session: &mut ChatSession, call: ToolCall) -> ToolResult {
        let result = self.registry.dispatch(&call, self.clock.as_ref());
        let text = match &result.error {
            None => format!("{} ok", call.tool),
            Some(e) => format!("{} failed: {e}", call.tool),
        };
        let mut msg = Message::new(Role::Tool, text, self.clock.now_ms());
        msg.tool_call = Some(call);
        msg.tool_result = Some(result.clone());
        session.record(SessionEvent::Message { message: msg });
        result
    }

    fn add_artifact(
        &self,
        session: &mut ChatSession,
        kind: ArtifactKind,
        bytes: &[u8],
    ) -> Result<Artifact, AgentError> {
        let label = match kind {
            ArtifactKind::Script => "script",
            ArtifactKind::Result => "result",
            ArtifactKind::Plot => "plot",
        };
        let artifact_id = format!(
            "{}-{:03}-{label}",
            session.session_id,
            session.artifacts.len() + 1
        );
        let file = format!("{artifact_id}.{}", kind.extension());
        self.artifacts.put_blob(&file, bytes)?;
        let artifact = Artifact {
            artifact_id,
            kind,
            path: format!("artifacts/{file}"),
            media_type: kind.media_type().to_string(),
            content_hash: format!("{:016x}", fnv1a64(bytes)),
            size: bytes.len(),
        };
        self.artifacts.register(&artifact);
        session.record(SessionEvent::Artifact {
            artifact: artifact.clone(),
        });
        Ok(artifact)
    }

    /// One chat turn: retrieval, extraction, merge, plan, tools, reply.
    /// Returns the assistant message, which is also the last transcript
    /// entry.
    pub fn handle_turn(
        &self,
        session: &mut ChatSession,
        text: &str,
        uploads: Vec<Upload>,
    ) -> Result<Message, AgentError> {
        let first_event = session.events().len();
        let mut notices: Vec<String> = Vec::new();

        let mut user = Message::new(Role::User, text, self.clock.now_ms());
        let mut extraction_text = text.to_string();
        let mut annotation: Option<ImageAnnotation> = None;
        let mut images = Vec::new();
        for (i, up) in uploads.into_iter().enumerate() {
            let key = format!(
                "{}-m{:04}-{i}.upload",
                session.session_id,
                session.transcript.len()
            );
            self.artifacts.put_blob(&key, &up.bytes)?;
            match classify(&up) {
                UploadKind::Annotation => match std::str::from_utf8(&up.bytes)
                    .map_err(|e| ExtractError::InvalidAnnotation(e.to_string()))
                    .and_then(AnnotationFile::parse)
                {
                    Ok(file) if annotation.is_none() => annotation = Some(file.annotations),
                    Ok(_) => notices.push(format!(
                        "Only the first annotation file is used; {} was ignored.",
                        up.filename
                    )),
                    Err(e) => notices.push(format!(
                        "{} could not be read as an annotation file: {e}",
                        up.filename
                    )),
                },
                UploadKind::Image => images.push(ImageInput {
                    media_type: up.media_type.clone(),
                    bytes: up.bytes.clone(),
                }),
                UploadKind::Text => {
                    extraction_text.push('\n');
                    extraction_text.push_str(&String::from_utf8_lossy(&up.bytes));
                }
                UploadKind::Other => notices.push(format!(
                    "{} has an unsupported type and was stored only.",
                    up.filename
                )),
            }
            user.attachments.push(Attachment {
                filename: up.filename,
                media_type: up.media_type,
                bytes_ref: key,
                size: up.bytes.len(),
            });
        }
        session.record(SessionEvent::Message { message: user });

        // 1. retrieval
        let kb = self.dispatch(
            session,
            ToolCall::new("kb_search", json!({"query": text, "k": 4})),
        );
        let hits: Vec<RetrievalHit> = kb
            .payload
            .and_then(|p| serde_json::from_value(p["hits"].clone()).ok())
            .unwrap_or_default();
        let hits: Vec<RetrievalHit> = hits.into_iter().filter(|h| h.score > 0.0).collect();

        // 2. extraction
        let extraction = self.extract(
            session,
            &extraction_text,
            annotation.as_ref(),
            &images,
            &mut notices,
        );

        // 3. merge, after settling last turn's conflicts
        let mut accumulated = session.accumulated.clone();
        if !session.pending_conflicts.is_empty() {
            match confirmation(text) {
                Some(true) => {
                    for c in &session.pending_conflicts {
                        if accumulated.set(&c.field_path, c.new_value.clone()).is_ok() {
                            accumulated.set_provenance(FieldProvenance::new(
                                &c.field_path,
                                ProvenanceSource::User,
                            ));
                        }
                    }
                    notices.push("Updated to the new values.".into());
                }
                _ => notices.push("Kept the earlier values.".into()),
            }
        }
        let trial = merge_turns(&accumulated, &extraction);
        let invalid: Vec<_> = present_violations(&trial.merged, &self.defaults)
            .into_iter()
            .filter(|v| extraction.partial.has(&v.field_path) && !accumulated.has(&v.field_path))
            .collect();
        let merged = if invalid.is_empty() {
            trial
        } else {
            let rejected: Vec<&str> = invalid.iter().map(|v| v.field_path.as_str()).collect();
            merge_turns(&accumulated, &without(&extraction, &rejected))
        };

        // 4. plan
        let wants_run = run_intent(text) || extraction.run_intent;
        let plan = plan_turn(
            session.target,
            &merged.merged,
            &merged.conflicts,
            &invalid,
            wants_run,
        );
        let pending = match &plan {
            TurnPlan::ResolveConflict { conflicts } => conflicts.clone(),
            _ => Vec::new(),
        };
        session.record(SessionEvent::State {
            accumulated: merged.merged.clone(),
            pending_conflicts: pending,
        });

        // 5. execute
        let mut produced = Vec::new();
        let mut body = String::new();
        match &plan {
            TurnPlan::ResolveConflict { conflicts } => {
                body.push_str(&describe_conflicts(conflicts))
            }
            TurnPlan::AskClarification { missing, invalid } => {
                if !session.transcript.iter().any(|m| m.role == Role::Assistant)
                    && merged.merged.is_empty()
                {
                    let _ = write!(body, "{}\n\n", introduction(session.target));
                }
                body.push_str(&describe_missing(missing, invalid));
            }
            TurnPlan::AnswerFromKb => {
                body.push_str(
                    "The problem description is complete. Choose a target software (ADONIS or HYRCAN profile) and I will write the script for it.",
                );
                if let Some(h) = hits.first() {
                    let _ = write!(
                        body,
                        "\n\nFrom \"{}\": {}",
                        h.citation.title,
                        excerpt(&h.text, 300)
                    );
                }
            }
            TurnPlan::EmitScript { target, run_solver } => {
                self.execute(
                    session,
                    &merged.merged,
                    *target,
                    *run_solver,
                    &mut body,
                    &mut produced,
                )?;
            }
        }

        // 6. reply
        let mut text_out = body.trim_end().to_string();
        for n in &notices {
            let _ = write!(text_out, "\n\nNote: {n}");
        }
        if !hits.is_empty() {
            let sources: Vec<String> = hits
                .iter()
                .map(|h| format!("{} [{}]", h.citation.title, h.chunk_id))
                .collect();
            let _ = write!(text_out, "\n\nSources: {}", sources.join("; "));
        }
        let mut reply = Message::new(Role::Assistant, text_out, self.clock.now_ms());
        reply.citations = hits;
        reply.plan = Some(plan);
        reply.artifacts = produced;
        session.record(SessionEvent::Message {
            message: reply.clone(),
        });
        self.persist(session, first_event)?;
        Ok(reply)
    }

    fn extract(
        &self,
        session: &mut ChatSession,
        text: &str,
        annotation: Option<&ImageAnnotation>,
        images: &[ImageInput],
        notices: &mut Vec<String>,
    ) -> ExtractionResult {
        let start = self.clock.now_ms();
        let (result, backend) = match extract_llm_with_images(
            text,
            annotation,
            images,
            self.backend.as_ref(),
        ) {
            Ok(r) => (r, self.backend.id().to_string()),
            Err(e) => {
                notices.push(match &e {
                    ExtractError::BackendUnavailable(_) => format!(
                        "the language model backend is unavailable ({e}); parameters were read with the built-in rules instead."
                    ),
                    _ => format!("{e}; parameters were read with the built-in rules instead."),
                });
                let fallback = match annotation {
                    Some(a) => extract_with_annotation(text, a)
                        .unwrap_or_else(|_| extract_rule_based(text)),
                    None => extract_rule_based(text),
                };
                (fallback, "rules".to_string())
            }
        };
        let call = ToolCall::new("extract_parameters", json!({ "backend": backend }));
        let mut msg = Message::new(
            Role::Tool,
            format!("extract_parameters ok ({backend})"),
            self.clock.now_ms(),
        );
        msg.tool_result = Some(ToolResult {
            tool: call.tool.clone(),
            ok: true,
            payload: serde_json::to_value(&result).ok(),
            error: None,
            duration_ms: self.clock.now_ms().saturating_sub(start),
        });
        msg.tool_call = Some(call);
        session.record(SessionEvent::Message { message: msg });
        result
    }

    fn complete(&self, merged: &PartialProblem, target: Target) -> Result<SlopeProblem, String> {
        let normalized = normalize_units(merged).map_err(|e| e.to_string())?;
        let mut problem = fill_defaults(&normalized, &self.defaults).map_err(|e| e.to_string())?;
        problem.analysis.target = target;
        problem
            .provenance
            .retain(|p| p.field_path != "analysis.target");
        problem.provenance.push(FieldProvenance::new(
            "analysis.target",
            ProvenanceSource::User,
        ));
        problem
            .provenance
            .sort_by(|a, b| a.field_path.cmp(&b.field_path));
        Ok(problem)
    }

    fn execute(
        &self,
        session: &mut ChatSession,
        merged: &PartialProblem,
        target: Target,
        run_solver: bool,
        body: &mut String,
        produced: &mut Vec<String>,
    ) -> Result<(), AgentError> {
        let problem = match self.complete(merged, target) {
            Ok(p) => p,
            Err(e) => {
                let _ = write!(body, "I could not complete the problem description: {e}");
                return Ok(());
            }
        };
        let doc = serde_json::to_value(PartialProblem::from(&problem)).expect("problem serializes");

        let emitted = self.dispatch(
            session,
            ToolCall::new(
                "emit_script",
                json!({"problem": doc, "target": target.as_str()}),
            ),
        );
        match emitted.payload.map(serde_json::from_value::<EmittedScript>) {
            Some(Ok(script)) => {
                let a = self.add_artifact(session, ArtifactKind::Script, script.text.as_bytes())?;
                let _ = writeln!(
                    body,
                    "Here is the {} script ({}):\n\n```\n{}```",
                    profile_label(target),
                    a.artifact_id,
                    script.text
                );
                produced.push(a.artifact_id);
            }
            _ => {
                let _ = writeln!(
                    body,
                    "The script could not be written: {}",
                    error_text(&emitted.error)
                );
            }
        }

        let assumed: Vec<String> = problem
            .provenance
            .iter()
            .filter(|p| p.source == ProvenanceSource::Defaulted)
            .map(|p| p.field_path.clone())
            .collect();
        if !assumed.is_empty() {
            let _ = writeln!(
                body,
                "\nAssumed from the defaults table: {}.",
                assumed.join(", ")
            );
        }

        if !run_solver {
            let _ = writeln!(
                body,
                "\nAsk me to run the analysis to get the factor of safety."
            );
            return Ok(());
        }
        let solved = self.dispatch(
            session,
            ToolCall::new("run_solver", json!({ "problem": doc })),
        );
        let result = match solved
            .payload
            .clone()
            .map(serde_json::from_value::<ResultFile>)
        {
            Some(Ok(r)) => r,
            _ => {
                let _ = writeln!(
                    body,
                    "\nThe solver could not finish: {}",
                    error_text(&solved.error)
                );
                return Ok(());
            }
        };
        let a = self.add_artifact(session, ArtifactKind::Result, result.to_text().as_bytes())?;
        let c = result.critical_circle;
        let _ = writeln!(
            body,
            "\nFactor of safety: {} ({}), critical circle centre ({}, {}) m, radius {} m, {} slices, {} trial circles ({}).",
            round_sig(result.fos, 4),
            result.meta.method.label(),
            round_sig(c.center.x, 5),
            round_sig(c.center.y, 5),
            round_sig(c.radius, 5),
            result.slices.len(),
            result.meta.grid_evaluations,
            a.artifact_id
        );
        produced.push(a.artifact_id);
        let plotted = self.dispatch(
            session,
            ToolCall::new("make_plot", json!({ "result": solved.payload })),
        );
        match plotted.payload.as_ref().and_then(|p| p["svg"].as_str()) {
            Some(svg) => {
                let a = self.add_artifact(session, ArtifactKind::Plot, svg.as_bytes())?;
                let _ = writeln!(body, "Cross-section plot: {}.", a.artifact_id);
                produced.push(a.artifact_id);
            }
            None => {
                let _ = writeln!(
                    body,
                    "The plot could not be drawn: {}",
                    error_text(&plotted.error)
                );
            }
        }
        Ok(())
    }
}

enum UploadKind {
    Annotation,
    Image,
    Text,
    Other,
}

fn classify(up: &Upload) -> UploadKind {
    let media = up
        .media_type
        .split(';')
        .next()
        .unwrap_or_default()
        .trim()
        .to_ascii_lowercase();
    match media.as_str() {
        "application/json" => UploadKind::Annotation,
        "image/png" | "image/jpeg" => UploadKind::Image,
        "text/plain" => UploadKind::Text,
        _ if up.filename.ends_with(".json") => UploadKind::Annotation,
        _ => UploadKind::Other,
    }
}

/// `Some(true)` to accept new values, `Some(false)` to keep the old ones.
fn confirmation(text: &str) -> Option<bool> {
    static YES: OnceLock<Regex> = OnceLock::new();
    static NO: OnceLock<Regex> = OnceLock::new();
    let yes = YES.get_or_init(|| {
        Regex::new(r"(?i)^\s*(yes|yep|yeah|confirm|ok|okay|sure)\b|\b(use the new|replace it|update it|go with the new)\b").unwrap()
    });
    let no = NO.get_or_init(|| Regex::new(r"(?i)^\s*(no|nope)\b|\bkeep\b").unwrap());
    if no.is_match(text) {
        Some(false)
    } else if yes.is_match(text) {
        Some(true)
    } else {
        None
    }
}

fn without(update: &ExtractionResult, rejected: &[&str]) -> ExtractionResult {
    let mut out = ExtractionResult {
        conflicts: update.conflicts.clone(),
        run_intent: update.run_intent,
        ..Default::default()
    };
    for (path, value) in update.partial.entries() {
        if rejected.contains(&path.as_str()) {
            continue;
        }
        if out.partial.set(&path, value).is_ok() {
            if let Some(p) = update.partial.provenance_of(&path) {
                out.partial.set_provenance(p.clone());
            }
        }
    }
    out.missing_required = out.partial.missing_required();
    out
}

fn profile_label(target: Target) -> &'static str {
    match target {
        Target::AdonisProfile => "ADONIS-profile",
        Target::HyrcanProfile => "HYRCAN-profile",
        Target::None => "generic",
    }
}

fn introduction(target: Target) -> String {
    let software = match target {
        Target::None => "an ADONIS- or HYRCAN-profile".to_string(),
        t => format!("a {}", profile_label(t)),
    };
    format!(
        "I am the slope stability assistant. Describe your slope and soil and I will write {software} script for it. \
I can also run a limit-equilibrium check (Bishop simplified or Fellenius) and report the factor of safety."
    )
}

/// Human label and unit for a field path.
fn field_label(path: &str) -> (String, &'static str) {
    if let Some(rest) = path.strip_prefix("layers[") {
        if let Some((idx, leaf)) = rest.split_once("].") {
            let n = idx.parse::<usize>().map(|i| i + 1).unwrap_or(1);
            let (name, unit) = match leaf {
                "cohesion" => ("cohesion", "kPa"),
                "friction_angle" => ("friction angle", "°"),
                "unit_weight" => ("unit weight", "kN/m³"),
                "saturated_unit_weight" => ("saturated unit weight", "kN/m³"),
                other => return (format!("{} of layer {n}", other.replace('_', " ")), ""),
            };
            return (format!("{name} of layer {n}"), unit);
        }
    }
    match path {
        "geometry.height" => ("slope height".into(), "m"),
        "geometry.slope_angle" => ("slope angle".into(), "°"),
        "geometry.crest_extent" => ("crest extent".into(), "m"),
        "geometry.toe_extent" => ("toe extent".into(), "m"),
        "water_table" => ("water table".into(), "m"),
        "analysis.slice_count" => ("number of slices".into(), ""),
        "analysis.method" => ("method".into(), ""),
        other => (other.to_string(), ""),
    }
}

fn show(value: &Value, unit: &str) -> String {
    match value {
        Value::Number(n) => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN), 6);
            match unit {
                "" => format!("{x}"),
                "°" => format!("{x}°"),
                u => format!("{x} {u}"),
            }
        }
        Value::String(s) => s.clone(),
        Value::Object(m) => m
            .iter()
            .map(|(k, v)| format!("{} {}", k.replace('_', " "), show(v, unit)))
            .collect::<Vec<_>>()
            .join(", "),
        other => other.to_string(),
    }
}

fn describe_conflicts(conflicts: &[Conflict]) -> String {
    let mut out = String::from("Some values disagree with what you told me before:\n");
    for c in conflicts {
        let (label, unit) = field_label(&c.field_path);
        let _ = writeln!(
            out,
            "- {label} ({}) is {}; this message says {}.",
            c.field_path,
            show(&c.existing_value, unit),
            show(&c.new_value, unit)
        );
    }
    out.push_str("Reply \"yes\" to use the new values or \"no\" to keep the current ones. Nothing was changed yet.");
    out
}

fn describe_missing(missing: &[String], invalid: &[crate::model::Violation]) -> String {
    let mut out = String::new();
    if !invalid.is_empty() {
        out.push_str("These values were not accepted:\n");
        for v in invalid {
            let (label, _) = field_label(&v.field_path);
            let _ = writeln!(out, "- {label} ({}): {}", v.field_path, v.message);
        }
    }
    if !missing.is_empty() {
        out.push_str("To set up the model I still need:\n");
        for path in missing {
            let (label, unit) = field_label(path);
            let unit = if unit.is_empty() {
                String::new()
            } else {
                format!(" [{unit}]")
            };
            let _ = writeln!(out, "- {label}{unit} ({path})");
        }
        out.push_str("Anything else left out is taken from the defaults table, and I will list what was assumed.");
    } else {
        out.push_str("Please send corrected values.");
    }
    out
}

fn excerpt(text: &str, max_chars: usize) -> String {
    let flat = text.split_whitespace().collect::<Vec<_>>().join(" ");
    if flat.chars().count() <= max_chars {
        return flat;
    }
    let cut: String = flat.chars().take(max_chars).collect();
    match cut.rfind(' ') {
        Some(i) => format!("{}…", &cut[..i]),
        None => format!("{cut}…"),
    }
}

fn error_text(e: &Option<super::ToolError>) -> String {
    e.as_ref()
        .map(|e| e.to_string())
        .unwrap_or_else(|| "unexpected tool output".into())
}
