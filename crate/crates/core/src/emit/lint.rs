use serde::{Deserialize, Serialize};

use super::{parse_script, ParseError, TargetProfile};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LintWarning {
    pub code: String,
    pub field_path: String,
    pub message: String,
}

fn warn(code: &str, field_path: String, message: String) -> LintWarning {
    LintWarning {
        code: code.into(),
        field_path,
        message,
    }
}

/// Best-practice checks on a script that parses.
pub fn lint(script: &str, profile: &TargetProfile) -> Result<Vec<LintWarning>, ParseError> {
    let p = parse_script(script, profile)?;
    let mut out = Vec::new();
    if p.analysis.slice_count < 25 {
        out.push(warn(
            "few_slices",
            "analysis.slice_count".into(),
            "slice_count below 25".into(),
        ));
    }
    let g = &p.analysis.search.center_grid;
    if g.nx < 5 || g.ny < 5 {
        out.push(warn(
            "coarse_grid",
            "analysis.search.center_grid".into(),
            format!("search grid {}x{} is coarser than 5x5", g.nx, g.ny),
        ));
    }
    for (i, layer) in p.layers.iter().enumerate() {
        if layer.friction_angle > 50.0 {
            out.push(warn(
                "implausible_friction",
                format!("layers[{i}].friction_angle"),
                format!(
                    "friction angle {} deg of layer \"{}\" is above 50 deg",
                    layer.friction_angle, layer.name
                ),
            ));
        }
        if layer.cohesion > 1000.0 {
            out.push(warn(
                "implausible_cohesion",
                format!("layers[{i}].cohesion"),
                format!(
                    "cohesion {} kPa of layer \"{}\" is above 1000 kPa",
                    layer.cohesion, layer.name
                ),
            ));
        }
        if layer.saturated_unit_weight.is_some() && p.water_table.is_none() {
            out.push(warn(
                "unused_saturated_weight",
                format!("layers[{i}].saturated_unit_weight"),
                format!(
                    "layer \"{}\" sets a saturated unit weight but there is no water table",
                    layer.name
                ),
            ));
        }
    }
    Ok(out)
}
