use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Polyline, SlopeGeometry, SlopeProblem};

/// Tolerance for elevation comparisons between profiles, in meters.
const ELEVATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field_path: String,
    pub message: String,
}

/// Invariant violations sorted by field path.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn paths(&self) -> Vec<&str> {
        self.violations
            .iter()
            .map(|v| v.field_path.as_str())
            .collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.field_path, v.message))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation {
            field_path: path.into(),
            message: message.into(),
        });
    }

    fn check(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.push(path, message);
        }
    }

    fn polyline(&mut self, line: &Polyline, path: &str) -> bool {
        if line.len() < 2 {
            self.push(path, "polyline needs at least two points");
            false
        } else if !line.all_finite() {
            self.push(path, "coordinates must be finite");
            false
        } else if !line.is_x_monotone() {
            self.push(path, "x must strictly increase along the polyline");
            false
        } else {
            true
        }
    }
}

/// Checks every invariant of the problem model. Violations are data; the
/// report is empty exactly when the problem is valid.
pub fn validate(problem: &SlopeProblem) -> ValidationReport {
    let mut c = Collector(Vec::new());

    let surface_ok = match &problem.geometry {
        SlopeGeometry::Polyline { surface } => c.polyline(surface, "geometry.surface"),
        SlopeGeometry::Parametric {
            height,
            slope_angle,
            crest_extent,
            toe_extent,
        } => {
            let before = c.0.len();
            c.check(
                height.is_finite() && *height > 0.0,
                "geometry.height",
                "height must be a positive length",
            );
            c.check(
                slope_angle.is_finite() && *slope_angle > 0.0 && *slope_angle < 90.0,
                "geometry.slope_angle",
                "slope angle must lie in (0, 90) degrees",
            );
            c.check(
                crest_extent.is_finite() && *crest_extent > 0.0,
                "geometry.crest_extent",
                "crest extent must be a positive length",
            );
            c.check(
                toe_extent.is_finite() && *toe_extent > 0.0,
                "geometry.toe_extent",
                "toe extent must be a positive length",
            );
            c.0.len() == before
        }
    };
    let surface = problem.surface();

    if problem.layers.is_empty() {
        c.push("layers", "at least one material layer is required");
    }
    let last = problem.layers.len().saturating_sub(1);
    let mut bases: Vec<(usize, &Polyline)> = Vec::new();
    for (i, layer) in problem.layers.iter().enumerate() {
        let p = |f: &str| format!("layers[{i}].{f}");
        c.check(
            !layer.name.trim().is_empty(),
            p("name"),
            "name must not be empty",
        );
        c.check(
            layer.unit_weight.is_finite() && layer.unit_weight > 0.0,
            p("unit_weight"),
            "unit weight must be positive (kN/m3)",
        );
        c.check(
            layer.cohesion.is_finite() && layer.cohesion >= 0.0,
            p("cohesion"),
            "cohesion must be non-negative (kPa)",
        );
        c.check(
            layer.friction_angle.is_finite()
                && layer.friction_angle >= 0.0
                && layer.friction_angle < 90.0,
            p("friction_angle"),
            "friction angle must lie in [0, 90) degrees",
        );
        if layer.cohesion == 0.0 && layer.friction_angle == 0.0 {
            c.push(p("cohesion"), "layer has neither cohesion nor friction");
        }
        if let Some(sat) = layer.saturated_unit_weight {
            c.check(
                sat.is_finite() && sat >= layer.unit_weight,
                p("saturated_unit_weight"),
                "saturated unit weight must be at least the unit weight",
            );
        }
        match (&layer.base, i == last) {
            (None, false) => c.push(
                p("base"),
                "every layer above the last needs a base boundary",
            ),
            (Some(_), true) => c.push(p("base"), "the bottom layer must not have a base boundary"),
            (Some(base), false) => {
                if c.polyline(base, &p("base")) {
                    bases.push((i, base));
                }
            }
            (None, true) => {}
        }
    }
    for pair in bases.windows(2) {
        let ((i, upper), (j, lower)) = (pair[0], pair[1]);
        if j != i + 1 {
            continue;
        }
        let crossing = upper
            .points()
            .iter()
            .chain(lower.points())
            .any(|p| upper.eval(p.x) + ELEVATION_TOL < lower.eval(p.x));
        c.check(
            !crossing,
            format!("layers[{j}].base"),
            format!("boundary crosses the base of layer {i}"),
        );
    }

    if let Some(wt) = &problem.water_table {
        if c.polyline(wt, "water_table") && surface_ok {
            let (a0, a1) = wt.x_range().expect("non-empty");
            let (b0, b1) = surface.x_range().expect("non-empty");
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            let above = wt
                .points()
                .iter()
                .chain(surface.points())
                .filter(|p| p.x >= lo && p.x <= hi)
                .any(|p| wt.eval(p.x) > surface.eval(p.x) + ELEVATION_TOL);
            c.check(
                !above,
                "water_table",
                "water table rises above the ground surface",
            );
        }
    }

    let a = &problem.analysis;
    c.check(
        (10..=10_000).contains(&a.slice_count),
        "analysis.slice_count",
        "slice count must lie in [10, 10000]",
    );
    let g = &a.search.center_grid;
    let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
    c.check(
        range_ok(g.x_range),
        "analysis.search.center_grid.x_range",
        "range must be finite and strictly ordered",
    );
    c.check(
        range_ok(g.y_range),
        "analysis.search.center_grid.y_range",
        "range must be finite and strictly ordered",
    );
    c.check(
        g.nx >= 2,
        "analysis.search.center_grid.nx",
        "at least 2 grid columns",
    );
    c.check(
        g.ny >= 2,
        "analysis.search.center_grid.ny",
        "at least 2 grid rows",
    );
    c.check(
        a.search.radius_samples >= 2,
        "analysis.search.radius_samples",
        "at least 2 radius samples",
    );
    c.check(
        a.search.refine_rounds >= 0,
        "analysis.search.refine_rounds",
        "refine rounds must be non-negative",
    );

    let mut violations = c.0;
    violations.sort_by(|a, b| {
        a.field_path
            .cmp(&b.field_path)
            .then_with(|| a.message.cmp(&b.message))
    });
    ValidationReport { violations }
}
