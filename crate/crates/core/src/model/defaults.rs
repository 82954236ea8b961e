use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;

use super::canonical::round_sig;
use super::partial::{PartialProblem, Quantity, WaterTableInput};
use super::{
    AnalysisConfig, CenterGrid, FieldProvenance, MaterialLayer, Method, ModelError, Point,
    Polyline, SearchConfig, SlopeGeometry, SlopeProblem, Target,
};

const SHIPPED: &str = include_str!("../../data/defaults.json");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MaterialDefaults {
    pub unit_weight: f64,
    pub cohesion: f64,
    pub friction_angle: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct GeometryDefaults {
    crest_extent_factor: f64,
    toe_extent_factor: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct LayerDefaults {
    name_prefix: String,
    material_class: String,
}

#[derive(Debug, Clone, Deserialize)]
struct SearchDefaults {
    nx: i64,
    ny: i64,
    radius_samples: i64,
    refine_rounds: i64,
    x_span: [f64; 2],
    y_above_crest: [f64; 2],
    quantum: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct AnalysisDefaults {
    method: Method,
    slice_count: i64,
    target: Target,
    search: SearchDefaults,
}

#[derive(Debug, Clone, Deserialize)]
struct TableDoc {
    version: String,
    materials: BTreeMap<String, MaterialDefaults>,
    geometry: GeometryDefaults,
    layer: LayerDefaults,
    analysis: AnalysisDefaults,
}

/// Versioned table of assumed values used when a problem description is
/// incomplete. Entries are addressed by dotted keys such as
/// `materials.generic_soil.unit_weight`.
#[derive(Debug, Clone)]
pub struct DefaultsTable {
    doc: TableDoc,
    raw: Value,
}

impl DefaultsTable {
    /// The table shipped with this crate (`data/defaults.json`).
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED).expect("shipped defaults table is well formed")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let raw: Value =
            serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        let doc: TableDoc = serde_json::from_value(raw.clone())
            .map_err(|e| ModelError::Malformed(e.to_string()))?;
        if !doc.materials.contains_key(&doc.layer.material_class) {
            return Err(ModelError::Malformed(format!(
                "default material class `{}` is not in the table",
                doc.layer.material_class
            )));
        }
        Ok(Self { doc, raw })
    }

    pub fn version(&self) -> &str {
        &self.doc.version
    }

    pub fn material(&self, class: &str) -> Option<&MaterialDefaults> {
        self.doc.materials.get(class)
    }

    pub fn material_classes(&self) -> impl Iterator<Item = &str> {
        self.doc.materials.keys().map(String::as_str)
    }

    /// True when `key` addresses an entry of the table.
    pub fn has_key(&self, key: &str) -> bool {
        let mut node = &self.raw;
        for part in key.split('.') {
            match node.get(part) {
                Some(next) => node = next,
                None => return false,
            }
        }
        true
    }

    /// Search grid derived from the ground surface: centers over the middle
    /// half of the profile, from a quarter to two reliefs above the crest.
    pub fn search_for(&self, surface: &Polyline) -> SearchConfig {
        let s = &self.doc.analysis.search;
        let (x0, x1) = surface.x_range().unwrap_or((0.0, 1.0));
        let (y0, y1) = surface.y_range().unwrap_or((0.0, 1.0));
        let relief = if y1 > y0 { y1 - y0 } else { 1.0 };
        let q = |v: f64| round_sig((v / s.quantum).round() * s.quantum, 12);
        SearchConfig {
            center_grid: CenterGrid {
                x_range: [
                    q(x0 + s.x_span[0] * (x1 - x0)),
                    q(x0 + s.x_span[1] * (x1 - x0)),
                ],
                y_range: [
                    q(y1 + s.y_above_crest[0] * relief),
                    q(y1 + s.y_above_crest[1] * relief),
                ],
                nx: s.nx,
                ny: s.ny,
            },
            radius_samples: s.radius_samples,
            refine_rounds: s.refine_rounds,
        }
    }
}

/// Completes a partial problem from the defaults table. Values already
/// present are never overwritten; every filled value gains a `DEFAULTED`
/// provenance entry naming its table key.
pub fn fill_defaults(
    partial: &PartialProblem,
    defaults: &DefaultsTable,
) -> Result<SlopeProblem, ModelError> {
    let mut provenance = partial.provenance.clone();
    let mut note = |path: String, key: String| {
        provenance.retain(|p: &FieldProvenance| p.field_path != path);
        provenance.push(FieldProvenance::defaulted(path, key));
    };
    let value = |q: &Option<Quantity>| q.as_ref().map(|q| q.value);

    let geom = partial
        .geometry
        .as_ref()
        .ok_or(ModelError::MissingGeometry)?;
    let geometry = if let Some(surface) = &geom.surface {
        SlopeGeometry::Polyline {
            surface: surface.to_polyline(),
        }
    } else {
        let (Some(height), Some(slope_angle)) = (value(&geom.height), value(&geom.slope_angle))
        else {
            return Err(ModelError::MissingGeometry);
        };
        let g = &defaults.doc.geometry;
        let crest_extent = value(&geom.crest_extent).unwrap_or_else(|| {
            note(
                "geometry.crest_extent".into(),
                "geometry.crest_extent_factor".into(),
            );
            g.crest_extent_factor * height
        });
        let toe_extent = value(&geom.toe_extent).unwrap_or_else(|| {
            note(
                "geometry.toe_extent".into(),
                "geometry.toe_extent_factor".into(),
            );
            g.toe_extent_factor * height
        });
        SlopeGeometry::Parametric {
            height,
            slope_angle,
            crest_extent,
            toe_extent,
        }
    };
    let surface = geometry.surface();

    let mut layers = Vec::with_capacity(partial.layers.len());
    for (i, layer) in partial.layers.iter().enumerate() {
        let class = layer
            .material_class
            .as_deref()
            .filter(|c| defaults.material(c).is_some())
            .unwrap_or(&defaults.doc.layer.material_class)
            .to_string();
        let mat = defaults.material(&class).expect("class checked above");
        let mut take = |field: &str, given: &Option<Quantity>, fallback: f64| {
            value(given).unwrap_or_else(|| {
                note(
                    format!("layers[{i}].{field}"),
                    format!("materials.{class}.{field}"),
                );
                fallback
            })
        };
        let unit_weight = take("unit_weight", &layer.unit_weight, mat.unit_weight);
        let cohesion = take("cohesion", &layer.cohesion, mat.cohesion);
        let friction_angle = take("friction_angle", &layer.friction_angle, mat.friction_angle);
        let name = layer.name.clone().unwrap_or_else(|| {
            note(format!("layers[{i}].name"), "layer.name_prefix".into());
            format!("{}-{}", defaults.doc.layer.name_prefix, i + 1)
        });
        layers.push(MaterialLayer {
            name,
            unit_weight,
            cohesion,
            friction_angle,
            saturated_unit_weight: value(&layer.saturated_unit_weight),
            base: layer.base.as_ref().map(|b| b.to_polyline()),
        });
    }

    let water_table = partial.water_table.as_ref().map(|w| match w {
        WaterTableInput::Polyline(line) => line.to_polyline(),
        WaterTableInput::Level { elevation } => horizontal(&surface, elevation.value),
        WaterTableInput::Depth { depth_below_crest } => {
            let crest = surface.y_range().map_or(0.0, |r| r.1);
            horizontal(&surface, crest - depth_below_crest.value)
        }
    });

    let a = &partial.analysis;
    let ad = &defaults.doc.analysis;
    let method = a.method.unwrap_or_else(|| {
        note("analysis.method".into(), "analysis.method".into());
        ad.method
    });
    let slice_count = a.slice_count.unwrap_or_else(|| {
        note("analysis.slice_count".into(), "analysis.slice_count".into());
        ad.slice_count
    });
    let target = a.target.unwrap_or_else(|| {
        note("analysis.target".into(), "analysis.target".into());
        ad.target
    });
    let search = a.search.clone().unwrap_or_else(|| {
        note("analysis.search".into(), "analysis.search".into());
        defaults.search_for(&surface)
    });

    provenance.sort_by(|a, b| a.field_path.cmp(&b.field_path));
    Ok(SlopeProblem {
        geometry,
        layers,
        water_table,
        analysis: AnalysisConfig {
            method,
            slice_count,
            target,
            search,
        },
        provenance,
    })
}

fn horizontal(surface: &Polyline, y: f64) -> Polyline {
    let (x0, x1) = surface.x_range().unwrap_or((0.0, 1.0));
    Polyline::new(vec![Point::new(x0, y), Point::new(x1, y)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProvenanceSource;
    use serde_json::json;

    fn parametric() -> PartialProblem {
        let mut p = PartialProblem::default();
        p.set("geometry.height", json!(10.0)).unwrap();
        p.set("geometry.slope_angle", json!(45.0)).unwrap();
        p
    }

    #[test]
    fn shipped_table_values() {
        let t = DefaultsTable::shipped();
        let g = t.material("generic_soil").unwrap();
        assert_eq!(
            (g.unit_weight, g.cohesion, g.friction_angle),
            (19.0, 5.0, 30.0)
        );
        let c = t.material("soft_clay").unwrap();
        assert_eq!(
            (c.unit_weight, c.cohesion, c.friction_angle),
            (17.0, 25.0, 0.0)
        );
        let s = t.material("dense_sand").unwrap();
        assert_eq!(
            (s.unit_weight, s.cohesion, s.friction_angle),
            (20.0, 0.0, 38.0)
        );
        assert!(t.has_key("materials.generic_soil.unit_weight"));
        assert!(!t.has_key("materials.granite"));
    }

    #[test]
    fn missing_unit_weight_uses_generic_soil() {
        let mut p = parametric();
        p.set("layers[0].cohesion", json!(25.0)).unwrap();
        p.set("layers[0].friction_angle", json!(20.0)).unwrap();
        let t = DefaultsTable::shipped();
        let full = fill_defaults(&p, &t).unwrap();
        assert_eq!(full.layers[0].unit_weight, 19.0);
        assert_eq!(full.layers[0].cohesion, 25.0);
        let prov = full
            .provenance
            .iter()
            .find(|p| p.field_path == "layers[0].unit_weight")
            .unwrap();
        assert_eq!(prov.source, ProvenanceSource::Defaulted);
        assert_eq!(
            prov.default_key.as_deref(),
            Some("materials.generic_soil.unit_weight")
        );
        for entry in &full.provenance {
            assert!(t.has_key(entry.default_key.as_deref().unwrap()));
        }
    }

    #[test]
    fn fully_specified_problem_is_unchanged() {
        let t = DefaultsTable::shipped();
        let first = fill_defaults(&parametric_with_layer(), &t).unwrap();
        let again = fill_defaults(&first.to_partial(), &t).unwrap();
        assert_eq!(first, again);
    }

    fn parametric_with_layer() -> PartialProblem {
        let mut p = parametric();
        p.set("layers[0].unit_weight", json!(18.0)).unwrap();
        p.set("layers[0].cohesion", json!(5.0)).unwrap();
        p.set("layers[0].friction_angle", json!(20.0)).unwrap();
        p
    }

    #[test]
    fn geometry_is_never_defaulted() {
        let t = DefaultsTable::shipped();
        let mut p = PartialProblem::default();
        p.set("layers[0].cohesion", json!(5.0)).unwrap();
        assert!(matches!(
            fill_defaults(&p, &t),
            Err(ModelError::MissingGeometry)
        ));
        let mut only_height = PartialProblem::default();
        only_height.set("geometry.height", json!(5.0)).unwrap();
        assert!(matches!(
            fill_defaults(&only_height, &t),
            Err(ModelError::MissingGeometry)
        ));
    }

    #[test]
    fn material_class_selects_defaults() {
        let mut p = parametric();
        p.set("layers[0].material_class", json!("soft_clay"))
            .unwrap();
        let full = fill_defaults(&p, &DefaultsTable::shipped()).unwrap();
        assert_eq!(full.layers[0].cohesion, 25.0);
        assert_eq!(full.layers[0].friction_angle, 0.0);
    }

    #[test]
    fn water_depth_resolves_below_crest() {
        let mut p = parametric_with_layer();
        p.set("water_table", json!({"depth_below_crest": 4.0}))
            .unwrap();
        let full = fill_defaults(&p, &DefaultsTable::shipped()).unwrap();
        let wt = full.water_table.unwrap();
        assert_eq!(wt.points()[0].y, 6.0);
        assert_eq!(wt.x_range(), full.geometry.surface().x_range());
    }

    #[test]
    fn default_search_grid_is_quantized() {
        let full = fill_defaults(&parametric_with_layer(), &DefaultsTable::shipped()).unwrap();
        let g = &full.analysis.search.center_grid;
        assert_eq!(g.x_range, [-7.5, 17.5]);
        assert_eq!(g.y_range, [12.5, 30.0]);
    }
}
