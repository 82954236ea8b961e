//! Backend-driven extraction: a fixed instruction, the problem field schema
//! as a single tool, and a strict parser for the tool-call reply.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{annotation::ImageAnnotation, rules, ExtractError, ExtractionResult};
use crate::model::{normalize_units, PartialProblem, ProvenanceSource};

pub const TOOL_NAME: &str = "record_slope_parameters";

pub const SYSTEM_INSTRUCTION: &str = "You extract slope stability inputs from the user's message. \
Call the record_slope_parameters tool exactly once. Report only values the user actually states, \
each with its field_path and the unit it was given in. Never guess or fill in defaults. \
Set run_intent to true only when the user asks to run the analysis or compute a factor of safety.";

/// Where and how to reach a remote model. Only the *name* of the environment
/// variable holding the credential is stored here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmBackendConfig {
    pub endpoint: String,
    pub model: String,
    pub credential_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub system: String,
    pub user: String,
    pub tool_name: String,
    pub tool_schema: Value,
    /// Raw images for multimodal backends. Not serialized.
    #[serde(skip)]
    pub images: Vec<ImageInput>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageInput {
    pub media_type: String,
    pub bytes: Vec<u8>,
}

impl LlmRequest {
    pub fn for_text(text: &str) -> Self {
        Self {
            system: SYSTEM_INSTRUCTION.to_string(),
            user: text.to_string(),
            tool_name: TOOL_NAME.to_string(),
            tool_schema: field_schema(),
            images: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LlmReply {
    ToolCall { name: String, arguments: Value },
    Text { text: String },
}

pub trait LlmBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &LlmRequest) -> Result<LlmReply, ExtractError>;
}

const NUMERIC_FIELDS: &[(&str, &str)] = &[
    ("geometry.height", "length"),
    ("geometry.slope_angle", "angle"),
    ("geometry.crest_extent", "length"),
    ("geometry.toe_extent", "length"),
    ("layers[i].unit_weight", "unit_weight"),
    ("layers[i].saturated_unit_weight", "unit_weight"),
    ("layers[i].cohesion", "stress"),
    ("layers[i].friction_angle", "angle"),
];

/// JSON schema of the tool arguments.
pub fn field_schema() -> Value {
    let numeric: BTreeMap<&str, &str> = NUMERIC_FIELDS.iter().copied().collect();
    json!({
        "type": "object",
        "additionalProperties": false,
        "required": ["fields"],
        "properties": {
            "run_intent": {"type": "boolean"},
            "fields": {
                "type": "array",
                "items": {
                    "type": "object",
                    "additionalProperties": false,
                    "required": ["field_path", "value"],
                    "properties": {
                        "field_path": {"type": "string"},
                        "value": {},
                        "unit": {"type": "string"}
                    }
                }
            }
        },
        "x-fields": {
            "numeric": numeric,
            "text": ["layers[i].name", "layers[i].material_class", "analysis.method"],
            "integer": ["analysis.slice_count"],
            "water_table": "{\"elevation\": number} or {\"depth_below_crest\": number}, length unit",
            "units": {
                "length": ["m", "ft"],
                "angle": ["deg", "rad"],
                "unit_weight": ["kN/m3", "pcf"],
                "stress": ["kPa", "psf"]
            },
            "layer_index": "i counts layers from the top, starting at 0"
        }
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToolArgs {
    fields: Vec<ToolField>,
    #[serde(default)]
    run_intent: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToolField {
    field_path: String,
    value: Value,
    #[serde(default)]
    unit: Option<String>,
}

fn path_shape() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"^(geometry\.(height|slope_angle|crest_extent|toe_extent)|layers\[\d{1,2}\]\.(name|material_class|unit_weight|saturated_unit_weight|cohesion|friction_angle)|water_table|analysis\.(method|slice_count))$",
        )
        .unwrap()
    })
}

/// One tool-call field as a canonical-unit value, going through the same
/// unit normalization as problem files.
fn canonical_value(field: &ToolField) -> Result<Value, ExtractError> {
    let bad =
        |why: String| ExtractError::MalformedBackendReply(format!("{}: {why}", field.field_path));
    if !path_shape().is_match(&field.field_path) {
        return Err(bad("not a field of the schema".into()));
    }
    let tagged = match (&field.unit, &field.value) {
        (None, v) => v.clone(),
        (Some(u), Value::Number(n)) => json!({"value": n, "unit": u}),
        (Some(u), Value::Object(map)) if field.field_path == "water_table" && map.len() == 1 => {
            let (k, v) = map.iter().next().unwrap();
            json!({ k: {"value": v, "unit": u} })
        }
        (Some(_), _) => return Err(bad("unit given for a non-numeric value".into())),
    };
    let mut scratch = PartialProblem::default();
    scratch
        .set(&field.field_path, tagged)
        .map_err(|e| bad(e.to_string()))?;
    let scratch = normalize_units(&scratch).map_err(|e| bad(e.to_string()))?;
    scratch
        .get(&field.field_path)
        .ok_or_else(|| bad("value did not survive normalization".into()))
}

/// Parses a backend reply against the tool schema. Anything else is a
/// [`ExtractError::MalformedBackendReply`]; nothing is coerced.
pub fn parse_reply(reply: &LlmReply) -> Result<(Vec<(String, Value)>, bool), ExtractError> {
    let (name, arguments) = match reply {
        LlmReply::ToolCall { name, arguments } => (name, arguments),
        LlmReply::Text { .. } => {
            return Err(ExtractError::MalformedBackendReply(
                "expected a tool call, got free text".into(),
            ))
        }
    };
    if name != TOOL_NAME {
        return Err(ExtractError::MalformedBackendReply(format!(
            "unknown tool `{name}`"
        )));
    }
    let args: ToolArgs = serde_json::from_value(arguments.clone())
        .map_err(|e| ExtractError::MalformedBackendReply(e.to_string()))?;
    let mentions = args
        .fields
        .iter()
        .map(|f| Ok((f.field_path.clone(), canonical_value(f)?)))
        .collect::<Result<Vec<_>, ExtractError>>()?;
    Ok((mentions, args.run_intent))
}

/// Extracts through `backend`. Annotation fields are taken first and keep
/// the image provenance; backend fields are attributed to the model.
pub fn extract_llm(
    text: &str,
    annotation: Option<&ImageAnnotation>,
    backend: &dyn LlmBackend,
) -> Result<ExtractionResult, ExtractError> {
    extract_llm_with_images(text, annotation, &[], backend)
}

/// [`extract_llm`] with raw images passed through to the backend. The
/// backend is skipped when there is neither text nor an image.
pub fn extract_llm_with_images(
    text: &str,
    annotation: Option<&ImageAnnotation>,
    images: &[ImageInput],
    backend: &dyn LlmBackend,
) -> Result<ExtractionResult, ExtractError> {
    let mut out = match annotation {
        Some(a) => a.extract()?,
        None => ExtractionResult::default(),
    };
    if !text.trim().is_empty() || !images.is_empty() {
        let mut request = LlmRequest::for_text(text);
        request.images = images.to_vec();
        let reply = backend.complete(&request)?;
        let (mentions, run_intent) = parse_reply(&reply)?;
        for (path, value) in mentions {
            out.offer(&path, value, ProvenanceSource::LlmExtracted);
        }
        out.run_intent = run_intent;
    }
    out.refresh_missing();
    Ok(out)
}

/// Offline backend answering every request with the rule grammar's
/// findings, phrased as a tool call. Needs no network and no credential.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleBackend;

impl LlmBackend for RuleBackend {
    fn id(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &LlmRequest) -> Result<LlmReply, ExtractError> {
        let fields: Vec<Value> = rules::scan(&request.user)
            .into_iter()
            .map(|f| json!({"field_path": f.field, "value": f.value}))
            .collect();
        Ok(LlmReply::ToolCall {
            name: TOOL_NAME.to_string(),
            arguments: json!({ "fields": fields }),
        })
    }
}

/// Replays canned replies keyed by the exact user text.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    replies: BTreeMap<String, Result<LlmReply, ExtractError>>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reply(mut self, prompt: &str, reply: LlmReply) -> Self {
        self.replies.insert(prompt.to_string(), Ok(reply));
        self
    }

    pub fn fail(mut self, prompt: &str, error: ExtractError) -> Self {
        self.replies.insert(prompt.to_string(), Err(error));
        self
    }
}

impl LlmBackend for ScriptedBackend {
    fn id(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &LlmRequest) -> Result<LlmReply, ExtractError> {
        self.replies.get(&request.user).cloned().unwrap_or_else(|| {
            Err(ExtractError::BackendUnavailable(format!(
                "no scripted reply for {:?}",
                request.user
            )))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(fields: Value) -> LlmReply {
        LlmReply::ToolCall {
            name: TOOL_NAME.into(),
            arguments: json!({ "fields": fields }),
        }
    }

    #[test]
    fn scripted_reply_gives_exactly_those_fields() {
        let prompt = "ten metre slope at forty-five degrees";
        let backend = ScriptedBackend::new().reply(
            prompt,
            call(json!([
                {"field_path": "geometry.height", "value": 10, "unit": "m"},
                {"field_path": "geometry.slope_angle", "value": 45}
            ])),
        );
        let r = extract_llm(prompt, None, &backend).unwrap();
        assert_eq!(
            r.partial.entries(),
            vec![
                ("geometry.height".to_string(), json!(10.0)),
                ("geometry.slope_angle".to_string(), json!(45.0)),
            ]
        );
        assert_eq!(
            r.partial.provenance_of("geometry.height").unwrap().source,
            ProvenanceSource::LlmExtracted
        );
    }

    #[test]
    fn free_text_is_malformed() {
        let backend = ScriptedBackend::new().reply(
            "hi",
            LlmReply::Text {
                text: "Height is 10".into(),
            },
        );
        assert!(matches!(
            extract_llm("hi", None, &backend),
            Err(ExtractError::MalformedBackendReply(_))
        ));
    }

    #[test]
    fn schema_violations_are_not_coerced() {
        for bad in [
            json!([{"field_path": "geometry.height", "value": "10"}]),
            json!([{"field_path": "geometry.heigth", "value": 10}]),
            json!([{"field_path": "geometry.height", "value": 10, "unit": "furlong"}]),
            json!([{"field_path": "analysis.method", "value": "spencer"}]),
            json!([{"field_path": "geometry.height", "value": 10, "confidence": 0.9}]),
        ] {
            let err = parse_reply(&call(bad.clone())).unwrap_err();
            assert!(
                matches!(err, ExtractError::MalformedBackendReply(_)),
                "{bad}"
            );
        }
        let wrong_tool = LlmReply::ToolCall {
            name: "other".into(),
            arguments: json!({"fields": []}),
        };
        assert!(parse_reply(&wrong_tool).is_err());
    }

    #[test]
    fn units_are_normalized() {
        let (m, _) = parse_reply(&call(json!([
            {"field_path": "geometry.height", "value": 32.8084, "unit": "ft"},
            {"field_path": "water_table", "value": {"depth_below_crest": 10}, "unit": "ft"}
        ])))
        .unwrap();
        assert!((m[0].1.as_f64().unwrap() - 10.0).abs() < 1e-4);
        assert!((m[1].1["depth_below_crest"].as_f64().unwrap() - 3.048).abs() < 1e-12);
    }

    #[test]
    fn rule_backend_agrees_with_rule_extraction() {
        let text = "a 10 m high slope at 45 degrees, cohesion 25 kPa, friction angle 20";
        let llm = extract_llm(text, None, &RuleBackend).unwrap();
        let rules = super::super::extract_rule_based(text);
        assert_eq!(llm.partial.entries(), rules.partial.entries());
        assert_eq!(llm.missing_required, rules.missing_required);
    }

    #[test]
    fn annotation_only_skips_the_backend() {
        let ann = ImageAnnotation {
            labeled_dimensions: vec![super::super::LabeledDimension {
                label: "height".into(),
                value: 32.8084,
                unit: Some("ft".into()),
            }],
            ..Default::default()
        };
        let r = extract_llm("", Some(&ann), &ScriptedBackend::new()).unwrap();
        let h = r.partial.get("geometry.height").unwrap().as_f64().unwrap();
        assert!((h - 10.0).abs() < 1e-4);
        assert_eq!(
            r.partial.provenance_of("geometry.height").unwrap().source,
            ProvenanceSource::ImageAnnotation
        );
    }

    #[test]
    fn config_carries_only_the_variable_name() {
        let cfg: LlmBackendConfig = serde_json::from_value(json!({
            "endpoint": "https://llm.example.invalid/v1/chat/completions",
            "model": "some-model",
            "credential_env": "SLOPESIM_LLM_KEY"
        }))
        .unwrap();
        assert_eq!(cfg.timeout_secs, 60);
        assert_eq!(cfg.max_retries, 2);
    }
}
