use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::units::{to_canonical, Dimension};
use super::{
    FieldProvenance, Method, ModelError, Point, Polyline, SearchConfig, SlopeGeometry,
    SlopeProblem, Target,
};

/// A number with an optional unit tag. Untagged numbers are already in
/// canonical units. Serialized as a bare number when untagged, otherwise as
/// `{"value": .., "unit": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "QuantityRepr", into = "QuantityRepr")]
pub struct Quantity {
    pub value: f64,
    pub unit: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum QuantityRepr {
    Plain(f64),
    Tagged { value: f64, unit: String },
}

impl From<QuantityRepr> for Quantity {
    fn from(r: QuantityRepr) -> Self {
        match r {
            QuantityRepr::Plain(value) => Quantity { value, unit: None },
            QuantityRepr::Tagged { value, unit } => Quantity {
                value,
                unit: Some(unit),
            },
        }
    }
}

impl From<Quantity> for QuantityRepr {
    fn from(q: Quantity) -> Self {
        match q.unit {
            None => QuantityRepr::Plain(q.value),
            Some(unit) => QuantityRepr::Tagged {
                value: q.value,
                unit,
            },
        }
    }
}

impl Quantity {
    pub fn canonical(value: f64) -> Self {
        Self { value, unit: None }
    }

    pub fn tagged(value: f64, unit: impl Into<String>) -> Self {
        Self {
            value,
            unit: Some(unit.into()),
        }
    }

    fn normalized(&self, dim: Dimension, path: &str) -> Result<Quantity, ModelError> {
        match &self.unit {
            None => Ok(self.clone()),
            Some(u) => Ok(Quantity::canonical(to_canonical(self.value, u, dim, path)?)),
        }
    }
}

/// Polyline with an optional length unit: `[[x, y], ..]` or
/// `{"points": [[x, y], ..], "unit": "ft"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PolylineRepr", into = "PolylineRepr")]
pub struct PolylineInput {
    pub points: Vec<Point>,
    pub unit: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PolylineRepr {
    Plain(Vec<Point>),
    Tagged { points: Vec<Point>, unit: String },
}

impl From<PolylineRepr> for PolylineInput {
    fn from(r: PolylineRepr) -> Self {
        match r {
            PolylineRepr::Plain(points) => Self { points, unit: None },
            PolylineRepr::Tagged { points, unit } => Self {
                points,
                unit: Some(unit),
            },
        }
    }
}

impl From<PolylineInput> for PolylineRepr {
    fn from(p: PolylineInput) -> Self {
        match p.unit {
            None => PolylineRepr::Plain(p.points),
            Some(unit) => PolylineRepr::Tagged {
                points: p.points,
                unit,
            },
        }
    }
}

impl PolylineInput {
    pub fn canonical(line: &Polyline) -> Self {
        Self {
            points: line.points().to_vec(),
            unit: None,
        }
    }

    fn normalized(&self, path: &str) -> Result<PolylineInput, ModelError> {
        let Some(unit) = &self.unit else {
            return Ok(self.clone());
        };
        let f = to_canonical(1.0, unit, Dimension::Length, path)?;
        Ok(PolylineInput {
            points: self
                .points
                .iter()
                .map(|p| Point::new(p.x * f, p.y * f))
                .collect(),
            unit: None,
        })
    }

    pub fn to_polyline(&self) -> Polyline {
        Polyline::new(self.points.clone())
    }
}

/// Water table as given by the user: explicit polyline, a horizontal
/// elevation, or a depth below the crest (highest surface point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WaterTableInput {
    Polyline(PolylineInput),
    Level { elevation: Quantity },
    Depth { depth_below_crest: Quantity },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialGeometry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<PolylineInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_angle: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crest_extent: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub toe_extent: Option<Quantity>,
}

impl PartialGeometry {
    pub fn is_empty(&self) -> bool {
        *self == PartialGeometry::default()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialLayer {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Key into the defaults table used for any missing material value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material_class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_weight: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohesion: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub friction_angle: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturated_unit_weight: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<PolylineInput>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialAnalysis {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_count: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
}

impl PartialAnalysis {
    pub fn is_empty(&self) -> bool {
        *self == PartialAnalysis::default()
    }
}

/// A problem description whose fields may be absent or carry source units.
/// This is also the on-disk problem file format.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialProblem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<PartialGeometry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<PartialLayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub water_table: Option<WaterTableInput>,
    #[serde(default, skip_serializing_if = "PartialAnalysis::is_empty")]
    pub analysis: PartialAnalysis,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<FieldProvenance>,
}

/// Splits `layers[3].cohesion` into `("layers", Some(3), Some("cohesion"))`.
fn split_path(path: &str) -> Result<(&str, Option<usize>, Option<&str>), ModelError> {
    let bad = || ModelError::UnknownField(path.to_string());
    let (head, rest) = match path.split_once('.') {
        Some((h, r)) => (h, Some(r)),
        None => (path, None),
    };
    if let Some(stripped) = head.strip_prefix("layers[") {
        let idx: usize = stripped
            .strip_suffix(']')
            .and_then(|s| s.parse().ok())
            .ok_or_else(bad)?;
        return Ok(("layers", Some(idx), rest));
    }
    Ok((head, None, rest))
}

impl PartialProblem {
    pub fn is_empty(&self) -> bool {
        self.entries().is_empty()
    }

    /// Every present leaf field as `(field_path, value)`, in document order.
    pub fn entries(&self) -> Vec<(String, Value)> {
        let doc = serde_json::to_value(self).expect("partial problem serializes");
        let mut out = Vec::new();
        let Value::Object(top) = doc else {
            return out;
        };
        for section in ["geometry", "layers", "water_table", "analysis"] {
            match (section, top.get(section)) {
                (_, None) => {}
                ("layers", Some(Value::Array(layers))) => {
                    for (i, layer) in layers.iter().enumerate() {
                        if let Value::Object(fields) = layer {
                            for (k, v) in fields {
                                out.push((format!("layers[{i}].{k}"), v.clone()));
                            }
                        }
                    }
                }
                ("water_table", Some(v)) => out.push(("water_table".to_string(), v.clone())),
                (_, Some(Value::Object(fields))) => {
                    for (k, v) in fields {
                        out.push((format!("{section}.{k}"), v.clone()));
                    }
                }
                _ => {}
            }
        }
        out
    }

    pub fn get(&self, path: &str) -> Option<Value> {
        self.entries()
            .into_iter()
            .find(|(p, _)| p == path)
            .map(|(_, v)| v)
    }

    pub fn has(&self, path: &str) -> bool {
        self.get(path).is_some()
    }

    /// Sets one leaf field from its JSON value, creating intermediate
    /// layers as needed.
    pub fn set(&mut self, path: &str, value: Value) -> Result<(), ModelError> {
        let (head, idx, leaf) = split_path(path)?;
        let mut doc = serde_json::to_value(&*self).expect("partial problem serializes");
        let top = doc.as_object_mut().expect("object");
        match (head, idx, leaf) {
            ("water_table", None, None) => {
                top.insert("water_table".into(), value);
            }
            ("geometry" | "analysis", None, Some(leaf)) if !leaf.contains('.') => {
                let section = top
                    .entry(head.to_string())
                    .or_insert_with(|| Value::Object(Map::new()));
                section
                    .as_object_mut()
                    .ok_or_else(|| ModelError::UnknownField(path.into()))?
                    .insert(leaf.to_string(), value);
            }
            ("layers", Some(i), Some(leaf)) if !leaf.contains('.') => {
                let layers = top
                    .entry("layers")
                    .or_insert_with(|| Value::Array(Vec::new()))
                    .as_array_mut()
                    .ok_or_else(|| ModelError::UnknownField(path.into()))?;
                while layers.len() <= i {
                    layers.push(Value::Object(Map::new()));
                }
                layers[i]
                    .as_object_mut()
                    .ok_or_else(|| ModelError::UnknownField(path.into()))?
                    .insert(leaf.to_string(), value);
            }
            _ => return Err(ModelError::UnknownField(path.to_string())),
        }
        let updated: PartialProblem = serde_json::from_value(doc)
            .map_err(|e| ModelError::Malformed(format!("{path}: {e}")))?;
        *self = updated;
        Ok(())
    }

    /// Records the source of `path`, replacing any earlier entry.
    pub fn set_provenance(&mut self, entry: FieldProvenance) {
        self.provenance.retain(|p| p.field_path != entry.field_path);
        self.provenance.push(entry);
        self.provenance
            .sort_by(|a, b| a.field_path.cmp(&b.field_path));
    }

    pub fn provenance_of(&self, path: &str) -> Option<&FieldProvenance> {
        self.provenance.iter().find(|p| p.field_path == path)
    }

    /// Required fields that no value or default can supply: the slope shape
    /// and the strength of every layer without a material class. Geometry
    /// paths come first.
    pub fn missing_required(&self) -> Vec<String> {
        let mut missing = Vec::new();
        let geom = self.geometry.clone().unwrap_or_default();
        if geom.surface.is_none() {
            if geom.height.is_none() {
                missing.push("geometry.height".to_string());
            }
            if geom.slope_angle.is_none() {
                missing.push("geometry.slope_angle".to_string());
            }
        }
        let layer_count = self.layers.len().max(1);
        for i in 0..layer_count {
            let layer = self.layers.get(i).cloned().unwrap_or_default();
            if layer.material_class.is_some() {
                continue;
            }
            if layer.cohesion.is_none() {
                missing.push(format!("layers[{i}].cohesion"));
            }
            if layer.friction_angle.is_none() {
                missing.push(format!("layers[{i}].friction_angle"));
            }
        }
        missing
    }
}

/// Converts every unit-tagged value to canonical units (m, kN/m³, kPa,
/// degrees). Already-canonical values pass through untouched, so the
/// operation is idempotent.
pub fn normalize_units(partial: &PartialProblem) -> Result<PartialProblem, ModelError> {
    let mut out = partial.clone();
    let norm = |q: &Option<Quantity>, dim, path: &str| -> Result<Option<Quantity>, ModelError> {
        q.as_ref().map(|q| q.normalized(dim, path)).transpose()
    };
    if let Some(g) = &partial.geometry {
        out.geometry = Some(PartialGeometry {
            surface: g
                .surface
                .as_ref()
                .map(|s| s.normalized("geometry.surface"))
                .transpose()?,
            height: norm(&g.height, Dimension::Length, "geometry.height")?,
            slope_angle: norm(&g.slope_angle, Dimension::Angle, "geometry.slope_angle")?,
            crest_extent: norm(&g.crest_extent, Dimension::Length, "geometry.crest_extent")?,
            toe_extent: norm(&g.toe_extent, Dimension::Length, "geometry.toe_extent")?,
        });
    }
    for (i, (src, dst)) in partial.layers.iter().zip(out.layers.iter_mut()).enumerate() {
        let p = |f: &str| format!("layers[{i}].{f}");
        dst.unit_weight = norm(&src.unit_weight, Dimension::UnitWeight, &p("unit_weight"))?;
        dst.cohesion = norm(&src.cohesion, Dimension::Stress, &p("cohesion"))?;
        dst.friction_angle = norm(&src.friction_angle, Dimension::Angle, &p("friction_angle"))?;
        dst.saturated_unit_weight = norm(
            &src.saturated_unit_weight,
            Dimension::UnitWeight,
            &p("saturated_unit_weight"),
        )?;
        dst.base = src
            .base
            .as_ref()
            .map(|b| b.normalized(&p("base")))
            .transpose()?;
    }
    out.water_table = match &partial.water_table {
        None => None,
        Some(WaterTableInput::Polyline(line)) => {
            Some(WaterTableInput::Polyline(line.normalized("water_table")?))
        }
        Some(WaterTableInput::Level { elevation }) => Some(WaterTableInput::Level {
            elevation: elevation.normalized(Dimension::Length, "water_table")?,
        }),
        Some(WaterTableInput::Depth { depth_below_crest }) => Some(WaterTableInput::Depth {
            depth_below_crest: depth_below_crest.normalized(Dimension::Length, "water_table")?,
        }),
    };
    Ok(out)
}

impl From<&SlopeProblem> for PartialProblem {
    fn from(p: &SlopeProblem) -> Self {
        let q = |v: f64| Some(Quantity::canonical(v));
        let geometry = match &p.geometry {
            SlopeGeometry::Polyline { surface } => PartialGeometry {
                surface: Some(PolylineInput::canonical(surface)),
                ..Default::default()
            },
            SlopeGeometry::Parametric {
                height,
                slope_angle,
                crest_extent,
                toe_extent,
            } => PartialGeometry {
                surface: None,
                height: q(*height),
                slope_angle: q(*slope_angle),
                crest_extent: q(*crest_extent),
                toe_extent: q(*toe_extent),
            },
        };
        PartialProblem {
            geometry: Some(geometry),
            layers: p
                .layers
                .iter()
                .map(|l| PartialLayer {
                    name: Some(l.name.clone()),
                    material_class: None,
                    unit_weight: q(l.unit_weight),
                    cohesion: q(l.cohesion),
                    friction_angle: q(l.friction_angle),
                    saturated_unit_weight: l.saturated_unit_weight.map(Quantity::canonical),
                    base: l.base.as_ref().map(PolylineInput::canonical),
                })
                .collect(),
            water_table: p
                .water_table
                .as_ref()
                .map(|w| WaterTableInput::Polyline(PolylineInput::canonical(w))),
            analysis: PartialAnalysis {
                method: Some(p.analysis.method),
                slice_count: Some(p.analysis.slice_count),
                target: Some(p.analysis.target),
                search: Some(p.analysis.search.clone()),
            },
            provenance: p.provenance.clone(),
        }
    }
}
