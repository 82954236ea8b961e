#![allow(dead_code)]

pub mod agent;
pub mod circles;
pub mod corpus;
pub mod extraction;
pub mod gen;
pub mod oracle;

use serde_json::Value;
use slopesim_core::model::{
    AnalysisConfig, CenterGrid, MaterialLayer, Method, SearchConfig, SlopeGeometry, SlopeProblem,
    Target,
};
use slopesim_core::solver::SlipCircle;

pub fn fixture(name: &str) -> Value {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    serde_json::from_str(&text).unwrap()
}

/// The recorded benchmark slope and its fixed circle.
pub fn benchmark() -> (SlopeProblem, SlipCircle, Value) {
    let fx = fixture("benchmark_oracle.json");
    let s = &fx["slope"];
    let soil = &fx["soil"];
    let f = |v: &Value| v.as_f64().unwrap();
    let problem = SlopeProblem {
        geometry: SlopeGeometry::Parametric {
            height: f(&s["height"]),
            slope_angle: f(&s["slope_angle"]),
            crest_extent: f(&s["crest_extent"]),
            toe_extent: f(&s["toe_extent"]),
        },
        layers: vec![MaterialLayer {
            name: "benchmark".into(),
            unit_weight: f(&soil["unit_weight"]),
            cohesion: f(&soil["cohesion"]),
            friction_angle: f(&soil["friction_angle"]),
            saturated_unit_weight: None,
            base: None,
        }],
        water_table: None,
        analysis: AnalysisConfig {
            method: Method::BishopSimplified,
            slice_count: 50,
            target: Target::None,
            search: SearchConfig {
                center_grid: CenterGrid {
                    x_range: [0.0, 20.0],
                    y_range: [12.0, 30.0],
                    nx: 10,
                    ny: 10,
                },
                radius_samples: 10,
                refine_rounds: 3,
            },
        },
        provenance: vec![],
    };
    let c = &fx["circle"];
    let circle = SlipCircle::new(f(&c["center"][0]), f(&c["center"][1]), f(&c["radius"]));
    (problem, circle, fx["oracle"].clone())
}
