//! Structured sidecar annotations for uploaded slope images.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{ExtractError, ExtractionResult};
use crate::model::units::{to_canonical, Dimension};
use crate::model::ProvenanceSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDimension {
    pub label: String,
    pub value: f64,
    #[serde(default)]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialCallout {
    pub layer_name: String,
    pub property: String,
    pub value: f64,
    #[serde(default)]
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImageAnnotation {
    #[serde(default)]
    pub labeled_dimensions: Vec<LabeledDimension>,
    #[serde(default)]
    pub material_callouts: Vec<MaterialCallout>,
    /// Ground surface points, `[[x, y], ..]`, in `surface_unit` (metres when absent).
    #[serde(default)]
    pub surface: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub surface_unit: Option<String>,
}

/// The sidecar file shipped next to an image: `{"annotations": {..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationFile {
    pub annotations: ImageAnnotation,
}

impl AnnotationFile {
    pub fn parse(text: &str) -> Result<Self, ExtractError> {
        serde_json::from_str(text).map_err(|e| ExtractError::InvalidAnnotation(e.to_string()))
    }
}

fn dimension_field(label: &str) -> Option<(&'static str, Dimension)> {
    let key = label.trim().to_ascii_lowercase().replace([' ', '-'], "_");
    Some(match key.as_str() {
        "height" | "h" | "slope_height" => ("geometry.height", Dimension::Length),
        "slope_angle" | "angle" | "beta" | "β" => ("geometry.slope_angle", Dimension::Angle),
        "crest_extent" | "crest" => ("geometry.crest_extent", Dimension::Length),
        "toe_extent" | "toe" => ("geometry.toe_extent", Dimension::Length),
        "water_depth" | "water_table_depth" => ("water_table", Dimension::Length),
        "water_level" | "water_elevation" => ("water_table", Dimension::Length),
        _ => return None,
    })
}

fn property_field(property: &str) -> Option<(&'static str, Dimension)> {
    let key = property
        .trim()
        .to_ascii_lowercase()
        .replace([' ', '-'], "_");
    Some(match key.as_str() {
        "unit_weight" | "gamma" | "γ" => ("unit_weight", Dimension::UnitWeight),
        "saturated_unit_weight" | "gamma_sat" => ("saturated_unit_weight", Dimension::UnitWeight),
        "cohesion" | "c" => ("cohesion", Dimension::Stress),
        "friction_angle" | "phi" | "φ" => ("friction_angle", Dimension::Angle),
        _ => return None,
    })
}

fn convert(
    value: f64,
    unit: &Option<String>,
    dim: Dimension,
    path: &str,
) -> Result<f64, ExtractError> {
    match unit {
        None => Ok(value),
        Some(u) => to_canonical(value, u, dim, path)
            .map_err(|e| ExtractError::InvalidAnnotation(e.to_string())),
    }
}

impl ImageAnnotation {
    /// Canonical-unit mentions in annotation order. Layers are numbered by
    /// first appearance of their name.
    pub fn mentions(&self) -> Result<Vec<(String, Value)>, ExtractError> {
        let mut out = Vec::new();
        if let Some(points) = &self.surface {
            let f = convert(
                1.0,
                &self.surface_unit,
                Dimension::Length,
                "geometry.surface",
            )?;
            let pts: Vec<[f64; 2]> = points.iter().map(|[x, y]| [x * f, y * f]).collect();
            out.push(("geometry.surface".to_string(), json!(pts)));
        }
        for d in &self.labeled_dimensions {
            let (path, dim) = dimension_field(&d.label).ok_or_else(|| {
                ExtractError::InvalidAnnotation(format!("unknown dimension label `{}`", d.label))
            })?;
            let v = convert(d.value, &d.unit, dim, path)?;
            let value = match d.label.to_ascii_lowercase().as_str() {
                l if l.contains("depth") => json!({ "depth_below_crest": v }),
                l if path == "water_table" && !l.contains("depth") => json!({ "elevation": v }),
                _ => json!(v),
            };
            out.push((path.to_string(), value));
        }
        let mut names: Vec<&str> = Vec::new();
        for c in &self.material_callouts {
            let i = match names.iter().position(|n| *n == c.layer_name) {
                Some(i) => i,
                None => {
                    names.push(&c.layer_name);
                    out.push((
                        format!("layers[{}].name", names.len() - 1),
                        json!(c.layer_name),
                    ));
                    names.len() - 1
                }
            };
            let (leaf, dim) = property_field(&c.property).ok_or_else(|| {
                ExtractError::InvalidAnnotation(format!(
                    "unknown material property `{}`",
                    c.property
                ))
            })?;
            let path = format!("layers[{i}].{leaf}");
            let v = convert(c.value, &c.unit, dim, &path)?;
            out.push((path, json!(v)));
        }
        Ok(out)
    }

    pub fn extract(&self) -> Result<ExtractionResult, ExtractError> {
        Ok(ExtractionResult::from_mentions(
            self.mentions()?,
            ProvenanceSource::ImageAnnotation,
        ))
    }
}

/// Combines an image annotation with the accompanying text (which may be
/// empty). Annotation values are taken first; a differing value in the
/// text is reported as a conflict.
pub fn extract_with_annotation(
    text: &str,
    annotation: &ImageAnnotation,
) -> Result<ExtractionResult, ExtractError> {
    let mut out = annotation.extract()?;
    for (path, value) in super::rules::scan(text)
        .into_iter()
        .map(|f| (f.field, f.value))
    {
        out.offer(&path, value, ProvenanceSource::User);
    }
    out.refresh_missing();
    Ok(out)
}
