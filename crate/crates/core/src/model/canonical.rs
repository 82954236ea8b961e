//! Canonical text form of problems and the content hash built on it.
//!
//! The canonical form is JSON with object keys sorted and every
//! floating-point number rounded to 12 significant digits. The problem hash
//! is the 64-bit FNV-1a digest of the compact canonical form of the
//! *hash view*: geometry expanded to its surface polyline, with provenance
//! and the target selection removed.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Number, Value};

use super::{validate, ModelError, PartialProblem, SlopeProblem};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME)
    })
}

/// Rounds to `digits` significant decimal digits. Negative zero becomes zero.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    let r: f64 = s.parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Sorts object keys and rounds floats, recursively.
pub fn canonicalize_value(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, canonicalize_value(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize_value).collect()),
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().expect("f64"), 12);
            Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        other => other,
    }
}

/// Compact canonical serialization of any serializable value.
pub fn canonical_string<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    serde_json::to_string(&canonicalize_value(v)).expect("JSON value serializes")
}

/// Indented canonical serialization, used for files.
pub fn to_canonical_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("value serializes to JSON");
    let mut s = serde_json::to_string_pretty(&canonicalize_value(v)).expect("serializes");
    s.push('\n');
    s
}

/// The subset of a problem that determines its identity.
pub fn hash_view(problem: &SlopeProblem) -> Value {
    let mut v = serde_json::to_value(problem).expect("problem serializes");
    let obj = v.as_object_mut().expect("problem is an object");
    obj.remove("provenance");
    obj.insert(
        "geometry".into(),
        serde_json::json!({ "surface": problem.surface() }),
    );
    if let Some(Value::Object(analysis)) = obj.get_mut("analysis") {
        analysis.remove("target");
    }
    canonicalize_value(v)
}

/// Lowercase hex FNV-1a digest of the canonical hash view.
pub fn canonical_hash(problem: &SlopeProblem) -> Result<String, ModelError> {
    let report = validate(problem);
    if !report.is_empty() {
        return Err(ModelError::InvalidProblem(report));
    }
    let text = serde_json::to_string(&hash_view(problem)).expect("serializes");
    Ok(format!("{:016x}", fnv1a64(text.as_bytes())))
}

pub fn read_problem_file(path: &Path) -> Result<PartialProblem, ModelError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| ModelError::Malformed(e.to_string()))
}

pub fn write_problem_file(path: &Path, problem: &SlopeProblem) -> Result<(), ModelError> {
    std::fs::write(path, to_canonical_pretty(problem))?;
    Ok(())
}
