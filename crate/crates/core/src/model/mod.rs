//! Canonical slope-stability problem representation.
//!
//! A [`SlopeProblem`] is the complete, unit-normalized description that the
//! solver and emitters consume. Incomplete descriptions coming from chat
//! turns or hand-written files are [`PartialProblem`]s; they become complete
//! through [`normalize_units`] followed by [`fill_defaults`].

mod canonical;
mod defaults;
mod partial;
mod polyline;
pub mod units;
mod validate;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canonical::{
    canonical_hash, canonical_string, canonicalize_value, fnv1a64, hash_view, read_problem_file,
    round_sig, to_canonical_pretty, write_problem_file,
};
pub use defaults::{fill_defaults, DefaultsTable, MaterialDefaults};
pub use partial::{
    normalize_units, PartialAnalysis, PartialGeometry, PartialLayer, PartialProblem, PolylineInput,
    Quantity, WaterTableInput,
};
pub use polyline::{Point, Polyline};
pub use validate::{validate, ValidationReport, Violation};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("geometry is required and is never assumed")]
    MissingGeometry,
    #[error("unknown unit `{unit}` for {field_path}")]
    UnknownUnit { field_path: String, unit: String },
    #[error("invalid problem: {0}")]
    InvalidProblem(ValidationReport),
    #[error("malformed problem document: {0}")]
    Malformed(String),
    #[error("unknown field path `{0}`")]
    UnknownField(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Ground surface, either as an explicit polyline or as a parametric
/// single-bench slope with the toe at the origin rising left to right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlopeGeometry {
    Polyline {
        surface: Polyline,
    },
    Parametric {
        height: f64,
        slope_angle: f64,
        crest_extent: f64,
        toe_extent: f64,
    },
}

impl SlopeGeometry {
    /// Ground surface as a polyline. Parametric slopes expand to four
    /// vertices: toe-side end, toe, crest, crest-side end.
    pub fn surface(&self) -> Polyline {
        match self {
            SlopeGeometry::Polyline { surface } => surface.clone(),
            SlopeGeometry::Parametric {
                height,
                slope_angle,
                crest_extent,
                toe_extent,
            } => {
                let run = height / slope_angle.to_radians().tan();
                Polyline::new(vec![
                    Point::new(-toe_extent, 0.0),
                    Point::new(0.0, 0.0),
                    Point::new(run, *height),
                    Point::new(run + crest_extent, *height),
                ])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialLayer {
    pub name: String,
    /// kN/m³
    pub unit_weight: f64,
    /// kPa
    pub cohesion: f64,
    /// degrees
    pub friction_angle: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturated_unit_weight: Option<f64>,
    /// Lower boundary of the layer. Required on every layer but the last,
    /// which extends without bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Polyline>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Fellenius,
    BishopSimplified,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Fellenius => "Fellenius (ordinary method of slices)",
            Method::BishopSimplified => "Bishop simplified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Target {
    AdonisProfile,
    HyrcanProfile,
    None,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::AdonisProfile, Target::HyrcanProfile, Target::None];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::AdonisProfile => "ADONIS_PROFILE",
            Target::HyrcanProfile => "HYRCAN_PROFILE",
            Target::None => "NONE",
        }
    }

    /// Accepts the enum spelling as well as the short names used on the
    /// command line (`adonis`, `hyrcan`).
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adonis_profile" | "adonis" => Some(Target::AdonisProfile),
            "hyrcan_profile" | "hyrcan" => Some(Target::HyrcanProfile),
            "none" => Some(Target::None),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterGrid {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub nx: i64,
    pub ny: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub center_grid: CenterGrid,
    pub radius_samples: i64,
    pub refine_rounds: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub method: Method,
    pub slice_count: i64,
    pub target: Target,
    pub search: SearchConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProvenanceSource {
    User,
    Defaulted,
    LlmExtracted,
    ImageAnnotation,
}

/// Where a field value came from. `default_key` names the defaults-table
/// entry for `DEFAULTED` values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldProvenance {
    pub field_path: String,
    pub source: ProvenanceSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_key: Option<String>,
}

impl FieldProvenance {
    pub fn new(field_path: impl Into<String>, source: ProvenanceSource) -> Self {
        Self {
            field_path: field_path.into(),
            source,
            default_key: None,
        }
    }

    pub fn defaulted(field_path: impl Into<String>, key: impl Into<String>) -> Self {
        Self {
            field_path: field_path.into(),
            source: ProvenanceSource::Defaulted,
            default_key: Some(key.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeProblem {
    pub geometry: SlopeGeometry,
    /// Ordered top to bottom.
    pub layers: Vec<MaterialLayer>,
    pub water_table: Option<Polyline>,
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub provenance: Vec<FieldProvenance>,
}

impl SlopeProblem {
    pub fn surface(&self) -> Polyline {
        self.geometry.surface()
    }

    /// Index of the layer containing the point `(x, y)` below the surface.
    pub fn layer_at(&self, x: f64, y: f64) -> usize {
        self.layers
            .iter()
            .position(|l| l.base.as_ref().is_none_or(|b| y >= b.eval(x)))
            .unwrap_or(self.layers.len().saturating_sub(1))
    }

    pub fn to_partial(&self) -> PartialProblem {
        PartialProblem::from(self)
    }
}
