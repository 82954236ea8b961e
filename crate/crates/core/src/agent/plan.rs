use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::extract::Conflict;
use crate::model::{
    fill_defaults, normalize_units, validate, DefaultsTable, PartialProblem, Target, Violation,
};

/// The single action chosen for a turn. `EmitScript` with `run_solver`
/// is the combined EMIT_SCRIPT + RUN_SOLVER row of the decision table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TurnPlan {
    ResolveConflict {
        conflicts: Vec<Conflict>,
    },
    AskClarification {
        missing: Vec<String>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        invalid: Vec<Violation>,
    },
    AnswerFromKb,
    EmitScript {
        target: Target,
        run_solver: bool,
    },
}

impl TurnPlan {
    pub fn actions(&self) -> Vec<&'static str> {
        match self {
            TurnPlan::ResolveConflict { .. } => vec!["RESOLVE_CONFLICT"],
            TurnPlan::AskClarification { .. } => vec!["ASK_CLARIFICATION"],
            TurnPlan::AnswerFromKb => vec!["ANSWER_FROM_KB"],
            TurnPlan::EmitScript {
                run_solver: false, ..
            } => vec!["EMIT_SCRIPT"],
            TurnPlan::EmitScript {
                run_solver: true, ..
            } => vec!["EMIT_SCRIPT", "RUN_SOLVER"],
        }
    }
}

/// Run intent: the words "run", "solve", "analyze"/"analyse" (and their
/// inflections) or the phrase "factor of safety", case-insensitive.
pub fn run_intent(text: &str) -> bool {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\b(run|running|solve|solving|analy[sz]e|analy[sz]ing|analysis)\b|factor of safety").unwrap()
    })
    .is_match(text)
}

/// Decision table, first matching row wins:
///
/// 1. conflicts → RESOLVE_CONFLICT
/// 2. missing or invalid fields → ASK_CLARIFICATION (geometry first)
/// 3. complete, no target → ANSWER_FROM_KB
/// 4. complete with a target → EMIT_SCRIPT, plus RUN_SOLVER on run intent
pub fn plan_turn(
    target: Target,
    merged: &PartialProblem,
    conflicts: &[Conflict],
    invalid: &[Violation],
    run_intent: bool,
) -> TurnPlan {
    if !conflicts.is_empty() {
        return TurnPlan::ResolveConflict {
            conflicts: conflicts.to_vec(),
        };
    }
    let missing = merged.missing_required();
    if !missing.is_empty() || !invalid.is_empty() {
        return TurnPlan::AskClarification {
            missing,
            invalid: invalid.to_vec(),
        };
    }
    match target {
        Target::None => TurnPlan::AnswerFromKb,
        t => TurnPlan::EmitScript {
            target: t,
            run_solver: run_intent,
        },
    }
}

/// Violations of `partial` restricted to fields it actually sets. Missing
/// required values are stood in by harmless placeholders so that the rest
/// of the model can be checked.
pub fn present_violations(partial: &PartialProblem, defaults: &DefaultsTable) -> Vec<Violation> {
    let Ok(mut probe) = normalize_units(partial) else {
        return Vec::new();
    };
    let placeholders = [
        ("geometry.height", json!(10.0)),
        ("geometry.slope_angle", json!(30.0)),
    ];
    if probe.geometry.as_ref().is_none_or(|g| g.surface.is_none()) {
        for (path, v) in placeholders {
            if !probe.has(path) {
                let _ = probe.set(path, v);
            }
        }
    }
    for path in probe.missing_required() {
        let v = if path.ends_with("cohesion") {
            10.0
        } else {
            30.0
        };
        let _ = probe.set(&path, json!(v));
    }
    let Ok(problem) = fill_defaults(&probe, defaults) else {
        return Vec::new();
    };
    let present: Vec<String> = partial.entries().into_iter().map(|(p, _)| p).collect();
    validate(&problem)
        .violations
        .into_iter()
        .filter(|v| {
            present
                .iter()
                .any(|p| v.field_path == *p || v.field_path.starts_with(&format!("{p}[")))
        })
        .collect()
}
