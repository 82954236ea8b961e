//! Turning chat turns into partial problems.
//!
//! [`extract_rule_based`] applies a fixed pattern grammar and needs no
//! network. [`extract_llm`] asks an [`LlmBackend`] for a structured tool call
//! against the problem field schema. Both return an [`ExtractionResult`] in
//! canonical units, which [`merge_turns`] folds into the accumulated
//! problem without overwriting anything already set.

mod annotation;
mod llm;
mod rules;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::{FieldProvenance, PartialProblem, ProvenanceSource};

pub use annotation::{
    extract_with_annotation, AnnotationFile, ImageAnnotation, LabeledDimension, MaterialCallout,
};
pub use llm::{
    extract_llm, extract_llm_with_images, field_schema, parse_reply, ImageInput, LlmBackend,
    LlmBackendConfig, LlmReply, LlmRequest, RuleBackend, ScriptedBackend, SYSTEM_INSTRUCTION,
    TOOL_NAME,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("language model backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed backend reply: {0}")]
    MalformedBackendReply(String),
    #[error("invalid image annotation: {0}")]
    InvalidAnnotation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub field_path: String,
    pub existing_value: Value,
    pub new_value: Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub partial: PartialProblem,
    pub missing_required: Vec<String>,
    pub conflicts: Vec<Conflict>,
    /// Set when a backend reports that the user asked to run the analysis.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub run_intent: bool,
}

impl ExtractionResult {
    /// Builds a result from `(field_path, value)` mentions in order: the
    /// first value per field is kept, later different ones are conflicts.
    /// Mentions that do not fit the schema are dropped.
    pub(crate) fn from_mentions(
        mentions: impl IntoIterator<Item = (String, Value)>,
        source: ProvenanceSource,
    ) -> Self {
        let mut out = ExtractionResult::default();
        for (path, value) in mentions {
            out.offer(&path, value, source);
        }
        out.refresh_missing();
        out
    }

    /// Adds one mention, recording a conflict when the field already holds a
    /// different value.
    pub(crate) fn offer(&mut self, path: &str, value: Value, source: ProvenanceSource) {
        match self.partial.get(path) {
            Some(existing) if existing == value => {}
            Some(existing) => self.conflicts.push(Conflict {
                field_path: path.to_string(),
                existing_value: existing,
                new_value: value,
            }),
            None => {
                if self.partial.set(path, value).is_ok() {
                    self.partial
                        .set_provenance(FieldProvenance::new(path, source));
                }
            }
        }
    }

    pub(crate) fn refresh_missing(&mut self) {
        self.missing_required = self.partial.missing_required();
    }
}

/// Deterministic extraction with the documented pattern grammar. Every
/// recognized value is attributed to the user.
pub fn extract_rule_based(text: &str) -> ExtractionResult {
    ExtractionResult::from_mentions(
        rules::scan(text).into_iter().map(|f| (f.field, f.value)),
        ProvenanceSource::User,
    )
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MergeOutcome {
    pub merged: PartialProblem,
    pub conflicts: Vec<Conflict>,
}

/// Adds every field of `update` that `accumulated` lacks. A field already
/// set to a different value is reported as a conflict and left unchanged;
/// the update's own conflicts are passed through.
pub fn merge_turns(accumulated: &PartialProblem, update: &ExtractionResult) -> MergeOutcome {
    let mut merged = accumulated.clone();
    let mut conflicts = update.conflicts.clone();
    for (path, value) in update.partial.entries() {
        match merged.get(&path) {
            Some(existing) if existing == value => {}
            Some(existing) => conflicts.push(Conflict {
                field_path: path,
                existing_value: existing,
                new_value: value,
            }),
            None => {
                if merged.set(&path, value).is_ok() {
                    if let Some(p) = update.partial.provenance_of(&path) {
                        merged.set_provenance(p.clone());
                    }
                }
            }
        }
    }
    MergeOutcome { merged, conflicts }
}
