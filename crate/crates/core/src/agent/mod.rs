//! Chat sessions and the per-turn pipeline.
//!
//! A turn runs in a fixed order: knowledge-base search, parameter
//! extraction, non-destructive merge, the [`plan_turn`] decision table,
//! tool execution through the [`ToolRegistry`], and reply composition.
//! Every step lands in the append-only transcript, and every state change
//! is an event in the session log, so a session can be rebuilt by replay.

mod orchestrator;
mod plan;
mod store;
mod tools;

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::Conflict;
use crate::kb::{KbError, RetrievalHit};
use crate::model::{PartialProblem, Target};

pub use orchestrator::{Orchestrator, Upload};
pub use plan::{plan_turn, present_violations, run_intent, TurnPlan};
pub use store::{ArtifactStore, SessionLog};
pub use tools::{
    builtin_registry, Handler, ParamSpec, ParamType, ToolCall, ToolError, ToolRegistry, ToolResult,
    ToolSpec, DEFAULT_TOOL_BUDGET,
};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid session id `{0}`")]
    InvalidSessionId(String),
    #[error("session `{0}` already exists")]
    SessionExists(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("corrupt session log {path}: {message}")]
    CorruptLog { path: String, message: String },
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentKind {
    SlopeStability,
}

impl AgentKind {
    pub const ALL: [AgentKind; 1] = [AgentKind::SlopeStability];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::SlopeStability => "SLOPE_STABILITY",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgentKind::SlopeStability => "Slope Stability",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s
            .trim()
            .to_ascii_uppercase()
            .replace([' ', '-'], "_")
            .as_str()
        {
            "SLOPE_STABILITY" => Some(AgentKind::SlopeStability),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Role {
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub filename: String,
    pub media_type: String,
    /// Key of the stored bytes in the [`ArtifactStore`].
    pub bytes_ref: String,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ArtifactKind {
    Script,
    Result,
    Plot,
}

impl ArtifactKind {
    pub fn media_type(self) -> &'static str {
        match self {
            ArtifactKind::Script => "text/plain; charset=utf-8",
            ArtifactKind::Result => "application/json",
            ArtifactKind::Plot => "image/svg+xml",
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ArtifactKind::Script => "txt",
            ArtifactKind::Result => "json",
            ArtifactKind::Plot => "svg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub artifact_id: String,
    pub kind: ArtifactKind,
    /// Relative to the data directory.
    pub path: String,
    pub media_type: String,
    /// FNV-1a 64 of the bytes, hex.
    pub content_hash: String,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attachments: Vec<Attachment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<RetrievalHit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call: Option<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_result: Option<ToolResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<TurnPlan>,
    /// Ids of artifacts produced in this message.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
    pub timestamp_ms: u64,
}

impl Message {
    pub fn new(role: Role, text: impl Into<String>, timestamp_ms: u64) -> Self {
        Self {
            role,
            text: text.into(),
            attachments: Vec::new(),
            citations: Vec::new(),
            tool_call: None,
            tool_result: None,
            plan: None,
            artifacts: Vec::new(),
            timestamp_ms,
        }
    }
}

/// One record of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        agent: AgentKind,
        target: Target,
        timestamp_ms: u64,
    },
    Message {
        message: Message,
    },
    Artifact {
        artifact: Artifact,
    },
    State {
        accumulated: PartialProblem,
        pending_conflicts: Vec<Conflict>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSession {
    pub session_id: String,
    pub agent: AgentKind,
    pub target: Target,
    pub accumulated: PartialProblem,
    /// Conflicts reported last turn, waiting for the user's decision.
    pub pending_conflicts: Vec<Conflict>,
    pub transcript: Vec<Message>,
    pub artifacts: Vec<Artifact>,
    #[serde(skip)]
    log: Vec<SessionEvent>,
}

impl ChatSession {
    pub fn new(
        session_id: &str,
        agent: AgentKind,
        target: Target,
        timestamp_ms: u64,
    ) -> Result<Self, AgentError> {
        if !valid_session_id(session_id) {
            return Err(AgentError::InvalidSessionId(session_id.to_string()));
        }
        let mut s = Self {
            session_id: session_id.to_string(),
            agent,
            target,
            accumulated: PartialProblem::default(),
            pending_conflicts: Vec::new(),
            transcript: Vec::new(),
            artifacts: Vec::new(),
            log: Vec::new(),
        };
        s.record(SessionEvent::Created {
            session_id: session_id.to_string(),
            agent,
            target,
            timestamp_ms,
        });
        Ok(s)
    }

    /// Rebuilds a session from its log. The first event must be `created`.
    pub fn replay(events: &[SessionEvent]) -> Result<Self, String> {
        let Some(SessionEvent::Created {
            session_id,
            agent,
            target,
            timestamp_ms,
        }) = events.first()
        else {
            return Err("log does not start with a created event".into());
        };
        let mut s =
            Self::new(session_id, *agent, *target, *timestamp_ms).map_err(|e| e.to_string())?;
        for e in &events[1..] {
            if matches!(e, SessionEvent::Created { .. }) {
                return Err("second created event".into());
            }
            s.record(e.clone());
        }
        Ok(s)
    }

    /// Applies an event and appends it to the log.
    pub(crate) fn record(&mut self, event: SessionEvent) {
        match &event {
            SessionEvent::Created { .. } => {}
            SessionEvent::Message { message } => self.transcript.push(message.clone()),
            SessionEvent::Artifact { artifact } => self.artifacts.push(artifact.clone()),
            SessionEvent::State {
                accumulated,
                pending_conflicts,
            } => {
                self.accumulated = accumulated.clone();
                self.pending_conflicts = pending_conflicts.clone();
            }
        }
        self.log.push(event);
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.log
    }

    pub fn artifact(&self, artifact_id: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.artifact_id == artifact_id)
    }
}

/// Session ids become file names, so they are restricted to
/// `[A-Za-z0-9_-]{1,64}`.
pub fn valid_session_id(id: &str) -> bool {
    (1..=64).contains(&id.len())
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

pub trait Clock: Send + Sync {
    fn now_ms(&self) -> u64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    }
}

/// Deterministic clock: every reading advances by `step` milliseconds.
#[derive(Debug)]
pub struct StepClock {
    next: AtomicU64,
    step: u64,
}

impl StepClock {
    pub fn new(start_ms: u64, step: u64) -> Self {
        Self {
            next: AtomicU64::new(start_ms),
            step,
        }
    }
}

impl Clock for StepClock {
    fn now_ms(&self) -> u64 {
        self.next.fetch_add(self.step, Ordering::SeqCst)
    }
}

/// FNV-1a 64 over the serialized transcript followed by each artifact's id
/// and content hash. Equal digests mean byte-identical conversations.
pub fn session_digest(session: &ChatSession) -> String {
    let mut bytes = serde_json::to_vec(&session.transcript).expect("transcript serializes");
    for a in &session.artifacts {
        bytes.extend_from_slice(a.artifact_id.as_bytes());
        bytes.push(b'=');
        bytes.extend_from_slice(a.content_hash.as_bytes());
        bytes.push(b'\n');
    }
    format!("{:016x}", crate::model::fnv1a64(&bytes))
}
