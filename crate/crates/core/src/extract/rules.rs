//! Pattern grammar for the deterministic extractor.
//!
//! Rules run in a fixed order over the lower-cased text. Every match blanks
//! its span so that later, more generic rules (a bare "45 degrees", a bare
//! "25 kPa") only see numbers no specific rule has claimed. Matches are then
//! replayed in text order: the first value per field wins and later,
//! different values become conflicts.

use std::sync::OnceLock;

use regex::{Captures, Regex};
use serde_json::{json, Value};

use crate::model::units::{to_canonical, Dimension};

const NUM: &str = r"(\d+(?:\.\d+)?)";
const SIGNED: &str = r"(-?\d+(?:\.\d+)?)";
const LEN: &str = r"(m|meters?|metres?|ft|feet|foot)\b";
const DEG: &str = r"(°|degrees?\b|deg\b|rad(?:ians?)?\b)";
const STRESS: &str = r"(kpa|kn/m2|kn/m²|kn/m\^2|psf|lb/ft2|lb/ft²)";
const UW: &str = r"(kn/m3|kn/m³|kn/m\^3|pcf|lb/ft3|lb/ft³)";
const SEP: &str =
    r"(?:\s*(?:of|is|=|:|equal to|equals|about|approximately|around|roughly|~|with|set to))*\s*";
const WATER: &str =
    r"(?:water table|groundwater(?: table| level)?|phreatic (?:surface|line)|water level)";

#[derive(Debug, Clone, Copy)]
enum Kind {
    /// Number in group 1, optional unit in group 2.
    Quantity(Dimension),
    /// Undrained strength: cohesion from the quantity, zero friction.
    Undrained,
    /// Horizontal run in group 1, vertical rise in group 2.
    RatioHv,
    /// Vertical rise in group 1, horizontal run in group 2.
    RatioVh,
    WaterDepth,
    WaterLevel,
    Integer,
    Fixed(&'static str),
}

struct Rule {
    field: &'static str,
    kind: Kind,
    re: Regex,
}

fn rule(field: &'static str, kind: Kind, pattern: String) -> Rule {
    Rule {
        field,
        kind,
        re: Regex::new(&pattern).expect("rule pattern compiles"),
    }
}

fn rules() -> &'static [Rule] {
    static RULES: OnceLock<Vec<Rule>> = OnceLock::new();
    RULES.get_or_init(|| {
        use Dimension::*;
        let q = Kind::Quantity;
        vec![
            rule(
                "layers[0].saturated_unit_weight",
                q(UnitWeight),
                format!(r"(?:saturated unit weight|saturated weight|γ_?sat|gamma_?sat){SEP}{NUM}\s*{UW}?"),
            ),
            rule(
                "layers[0].saturated_unit_weight",
                q(UnitWeight),
                format!(r"{NUM}\s*{UW}\s*(?:saturated|when saturated)"),
            ),
            rule(
                "layers[0].unit_weight",
                q(UnitWeight),
                format!(r"(?:unit weight|unit_weight|γ|gamma){SEP}{NUM}\s*{UW}?"),
            ),
            rule("layers[0].unit_weight", q(UnitWeight), format!(r"{NUM}\s*{UW}")),
            rule(
                "layers[0].cohesion",
                Kind::Undrained,
                format!(r"(?:undrained shear strength|undrained strength|\bs_?u\b|\bc_?u\b){SEP}{NUM}\s*{STRESS}?"),
            ),
            rule(
                "layers[0].friction_angle",
                q(Angle),
                format!(r"(?:internal friction angle|friction angle|angle of (?:internal )?friction|friction|φ'?|\bphi'?){SEP}{NUM}\s*{DEG}?"),
            ),
            rule(
                "layers[0].friction_angle",
                q(Angle),
                format!(r"{NUM}\s*{DEG}?\s*(?:internal friction|friction angle|friction|of friction)"),
            ),
            rule(
                "layers[0].cohesion",
                q(Stress),
                format!(r"(?:cohesion|\bc'?){SEP}{NUM}\s*{STRESS}?"),
            ),
            rule(
                "layers[0].cohesion",
                q(Stress),
                format!(r"{NUM}\s*{STRESS}\s*(?:of\s+)?(?:cohesion)?"),
            ),
            rule(
                "water_table",
                Kind::Fixed("toe"),
                format!(r"{WATER}[^.,;\d]*?\bat (?:the )?toe\b"),
            ),
            rule(
                "water_table",
                Kind::WaterDepth,
                format!(r"{WATER}[^.,;\d]*?{NUM}\s*{LEN}?\s*(?:below|beneath|under)\s+(?:the\s+)?(?:crest|top|ground surface|surface|ground)"),
            ),
            rule(
                "water_table",
                Kind::WaterLevel,
                format!(r"{WATER}[^.,;\d-]*?{SIGNED}\s*{LEN}?"),
            ),
            rule(
                "geometry.height",
                q(Length),
                format!(r"{NUM}\s*-?\s*{LEN}?\s*-?\s*(?:high|tall)\b"),
            ),
            rule(
                "geometry.height",
                q(Length),
                format!(r"(?:height|high|\bh\b){SEP}{NUM}\s*{LEN}?"),
            ),
            rule(
                "geometry.height",
                q(Length),
                format!(r"{NUM}\s*{LEN}\s+(?:[a-z]+\s+)?(?:slope|embankment|cut|bank|excavation|dam)\b"),
            ),
            rule(
                "geometry.slope_angle",
                Kind::RatioHv,
                format!(r"{NUM}\s*(?:h|horizontal)\s*(?:to|:)\s*{NUM}\s*(?:v|vertical)\b"),
            ),
            rule(
                "geometry.slope_angle",
                Kind::RatioVh,
                format!(r"{NUM}\s*(?:v|vertical)\s*(?:to|:)\s*{NUM}\s*(?:h|horizontal)\b"),
            ),
            rule(
                "geometry.slope_angle",
                Kind::RatioHv,
                format!(r"{NUM}\s*:\s*{NUM}\s*\(?\s*h\s*:\s*v\s*\)?"),
            ),
            rule(
                "geometry.slope_angle",
                Kind::RatioVh,
                format!(r"{NUM}\s*:\s*{NUM}\s*\(?\s*v\s*:\s*h\s*\)?"),
            ),
            rule(
                "geometry.slope_angle",
                q(Angle),
                format!(r"(?:slope angle|angle of (?:the )?slope|slope inclination|inclination|inclined at|sloping at|slope of|angle|beta|β){SEP}{NUM}\s*{DEG}?"),
            ),
            rule(
                "geometry.slope_angle",
                q(Angle),
                format!(r"(?:at|of)\s+{NUM}\s*-?\s*{DEG}"),
            ),
            rule("geometry.slope_angle", q(Angle), format!(r"{NUM}\s*-?\s*{DEG}")),
            rule("analysis.slice_count", Kind::Integer, r"(\d+)\s*slices\b".into()),
            rule(
                "analysis.slice_count",
                Kind::Integer,
                format!(r"slices?(?: count)?{SEP}(\d+)\b"),
            ),
            rule("analysis.method", Kind::Fixed("BISHOP_SIMPLIFIED"), r"\bbishop(?:'s)?\b".into()),
            rule(
                "analysis.method",
                Kind::Fixed("FELLENIUS"),
                r"\bfellenius\b|\bordinary method(?: of slices)?\b|\bswedish (?:circle|method)\b|\boms\b".into(),
            ),
            rule("layers[0].material_class", Kind::Fixed("soft_clay"), r"\bsoft clay\b".into()),
            rule("layers[0].material_class", Kind::Fixed("dense_sand"), r"\bdense sand\b".into()),
        ]
    })
}

/// One field value found in the text, in canonical units.
#[derive(Debug, Clone, PartialEq)]
pub(super) struct Found {
    pub position: usize,
    pub field: String,
    pub value: Value,
}

fn number(c: &Captures, i: usize) -> f64 {
    c[i].parse().expect("pattern only admits decimal numbers")
}

fn quantity(c: &Captures, dim: Dimension, field: &str) -> Option<f64> {
    let v = number(c, 1);
    match c.get(2) {
        Some(unit) => to_canonical(v, unit.as_str(), dim, field).ok(),
        None => Some(v),
    }
}

fn ratio_angle(h: f64, v: f64) -> Option<f64> {
    (h > 0.0 && v > 0.0).then(|| v.atan2(h).to_degrees())
}

fn values(rule: &Rule, c: &Captures) -> Vec<(String, Value)> {
    let one = |v: Option<f64>| {
        v.map(|x| vec![(rule.field.to_string(), json!(x))])
            .unwrap_or_default()
    };
    match rule.kind {
        Kind::Quantity(dim) => one(quantity(c, dim, rule.field)),
        Kind::Undrained => match quantity(c, Dimension::Stress, rule.field) {
            Some(cu) => vec![
                (rule.field.to_string(), json!(cu)),
                ("layers[0].friction_angle".to_string(), json!(0.0)),
            ],
            None => vec![],
        },
        Kind::RatioHv => one(ratio_angle(number(c, 1), number(c, 2))),
        Kind::RatioVh => one(ratio_angle(number(c, 2), number(c, 1))),
        Kind::WaterDepth => quantity(c, Dimension::Length, rule.field)
            .map(|d| vec![(rule.field.to_string(), json!({ "depth_below_crest": d }))])
            .unwrap_or_default(),
        Kind::WaterLevel => quantity(c, Dimension::Length, rule.field)
            .map(|e| vec![(rule.field.to_string(), json!({ "elevation": e }))])
            .unwrap_or_default(),
        Kind::Integer => c[1]
            .parse::<i64>()
            .map(|n| vec![(rule.field.to_string(), json!(n))])
            .unwrap_or_default(),
        Kind::Fixed("toe") => vec![(rule.field.to_string(), json!({ "elevation": 0.0 }))],
        Kind::Fixed(v) => vec![(rule.field.to_string(), json!(v))],
    }
}

/// All field mentions in `text`, ordered by position.
pub(super) fn scan(text: &str) -> Vec<Found> {
    let mut buffer = text.to_lowercase();
    let mut found = Vec::new();
    for rule in rules() {
        let mut spans = Vec::new();
        for c in rule.re.captures_iter(&buffer) {
            let m = c.get(0).expect("whole match");
            for (field, value) in values(rule, &c) {
                found.push(Found {
                    position: m.start(),
                    field,
                    value,
                });
            }
            spans.push(m.range());
        }
        for r in spans {
            buffer.replace_range(r.clone(), &" ".repeat(r.len()));
        }
    }
    found.sort_by_key(|f| f.position);
    found
}
