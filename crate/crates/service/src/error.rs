//! Uniform `{code, field_path?, message}` errors for the API and the CLI.

use serde::Serialize;
use slopesim_core::agent::{AgentError, ToolError};
use slopesim_core::emit::{EmitError, ParseError};
use slopesim_core::extract::ExtractError;
use slopesim_core::kb::KbError;
use slopesim_core::model::{ModelError, ValidationReport};
use slopesim_core::solver::SolverError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorPayload {
    pub code: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_path: Option<String>,
    pub message: String,
}

impl ErrorPayload {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            field_path: None,
            message: message.into(),
        }
    }

    pub fn at(mut self, field_path: impl Into<String>) -> Self {
        self.field_path = Some(field_path.into());
        self
    }

    /// `error[CODE] field: message`, the CLI's single stderr line.
    pub fn line(&self) -> String {
        let message = self.message.replace('\n', " ");
        match &self.field_path {
            Some(p) => format!("error[{}] {p}: {message}", self.code),
            None => format!("error[{}] {message}", self.code),
        }
    }
}

impl std::fmt::Display for ErrorPayload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.line())
    }
}

impl std::error::Error for ErrorPayload {}

/// The first violation carries the field path; any others follow in the
/// message.
fn invalid(report: &ValidationReport) -> ErrorPayload {
    let Some((first, rest)) = report.violations.split_first() else {
        return ErrorPayload::new("INVALID_PROBLEM", "invalid problem");
    };
    let mut message = first.message.clone();
    for v in rest {
        message.push_str(&format!("; {}: {}", v.field_path, v.message));
    }
    ErrorPayload::new("INVALID_PROBLEM", message).at(&first.field_path)
}

/// Maps any error from the pipeline to its payload, looking through the
/// `anyhow` chain for a known type.
pub fn classify(err: &anyhow::Error) -> ErrorPayload {
    for cause in err.chain() {
        if let Some(p) = cause.downcast_ref::<ErrorPayload>() {
            return p.clone();
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            return match e {
                ModelError::InvalidProblem(report) => invalid(report),
                ModelError::UnknownUnit { field_path, .. } => {
                    ErrorPayload::new("UNKNOWN_UNIT", e.to_string()).at(field_path)
                }
                ModelError::UnknownField(path) => {
                    ErrorPayload::new("UNKNOWN_FIELD", e.to_string()).at(path)
                }
                ModelError::MissingGeometry => {
                    ErrorPayload::new("MISSING_GEOMETRY", e.to_string()).at("geometry")
                }
                ModelError::Malformed(_) => ErrorPayload::new("MALFORMED_PROBLEM", e.to_string()),
                ModelError::Io(_) => ErrorPayload::new("IO_ERROR", e.to_string()),
            };
        }
        if let Some(e) = cause.downcast_ref::<ParseError>() {
            return ErrorPayload::new("PARSE_ERROR", e.to_string());
        }
        if let Some(e) = cause.downcast_ref::<EmitError>() {
            return match e {
                EmitError::UnknownProfile(_) => {
                    ErrorPayload::new("UNKNOWN_PROFILE", e.to_string()).at("target")
                }
                EmitError::UnsupportedFeature { field_path, .. } => {
                    ErrorPayload::new("UNSUPPORTED_FEATURE", e.to_string()).at(field_path)
                }
                EmitError::InvalidProblem(report) => invalid(report),
            };
        }
        if let Some(e) = cause.downcast_ref::<SolverError>() {
            let code = match e {
                SolverError::DegenerateCircle => "DEGENERATE_CIRCLE",
                SolverError::NoDrivingForce => "NO_DRIVING_FORCE",
                SolverError::NonConvergence { .. } => "NON_CONVERGENCE",
                SolverError::NoAdmissibleCircle => "NO_ADMISSIBLE_CIRCLE",
                SolverError::InvalidProblem(_) => "INVALID_PROBLEM",
            };
            return ErrorPayload::new(code, e.to_string());
        }
        if let Some(e) = cause.downcast_ref::<KbError>() {
            let code = match e {
                KbError::DuplicateDocument(_) => "DUPLICATE_DOCUMENT",
                KbError::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
                _ => "KB_ERROR",
            };
            return ErrorPayload::new(code, e.to_string());
        }
        if let Some(e) = cause.downcast_ref::<ExtractError>() {
            let code = match e {
                ExtractError::BackendUnavailable(_) => "BACKEND_UNAVAILABLE",
                ExtractError::MalformedBackendReply(_) => "MALFORMED_BACKEND_REPLY",
                ExtractError::InvalidAnnotation(_) => "INVALID_ANNOTATION",
            };
            return ErrorPayload::new(code, e.to_string());
        }
        if let Some(e) = cause.downcast_ref::<ToolError>() {
            let p = ErrorPayload::new(e.code(), e.to_string());
            return match e {
                ToolError::ArgumentValidation { field, .. } => p.at(field),
                _ => p,
            };
        }
        if let Some(e) = cause.downcast_ref::<AgentError>() {
            let code = match e {
                AgentError::UnknownSession(_) => "UNKNOWN_SESSION",
                AgentError::InvalidSessionId(_) => "INVALID_SESSION_ID",
                AgentError::SessionExists(_) => "SESSION_EXISTS",
                _ => "SESSION_ERROR",
            };
            return ErrorPayload::new(code, e.to_string());
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ErrorPayload::new("IO_ERROR", format!("{err:#}"));
        }
    }
    ErrorPayload::new("ERROR", format!("{err:#}"))
}
