#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::Value;
use slopesim::config::ServiceConfig;
use slopesim::state::AppState;
use slopesim_core::agent::StepClock;
use slopesim_core::extract::{LlmBackend, RuleBackend};
use slopesim_core::solver::SlipCircle;

pub const PARTIAL: &str = "I have a 10 m high slope at 45 degrees.";
pub const COMPLETION: &str =
    "The soil has cohesion 25 kPa, friction angle 20 and unit weight 19 kN/m3.";
pub const RUN: &str = "Please compute the factor of safety.";

pub fn core_fixture(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

/// The recorded benchmark slope as a problem file, its fixed circle and the
/// oracle values.
pub fn benchmark_file(dir: &Path) -> (PathBuf, SlipCircle, Value) {
    let fx = core_fixture("benchmark_oracle.json");
    let s = &fx["slope"];
    let soil = &fx["soil"];
    let doc = serde_json::json!({
        "geometry": {
            "height": s["height"],
            "slope_angle": s["slope_angle"],
            "crest_extent": s["crest_extent"],
            "toe_extent": s["toe_extent"],
        },
        "layers": [{
            "name": "benchmark",
            "unit_weight": soil["unit_weight"],
            "cohesion": soil["cohesion"],
            "friction_angle": soil["friction_angle"],
        }],
        "analysis": {"method": "BISHOP_SIMPLIFIED", "slice_count": 50},
    });
    let path = dir.join("benchmark.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let c = &fx["circle"];
    let f = |v: &Value| v.as_f64().unwrap();
    let circle = SlipCircle::new(f(&c["center"][0]), f(&c["center"][1]), f(&c["radius"]));
    (path, circle, fx["oracle"].clone())
}

pub fn config(data_dir: &Path) -> ServiceConfig {
    ServiceConfig {
        data_dir: data_dir.to_path_buf(),
        ..Default::default()
    }
}

pub fn state_with(cfg: ServiceConfig, backend: Arc<dyn LlmBackend>) -> Arc<AppState> {
    Arc::new(
        AppState::with_backend(cfg, backend, Arc::new(StepClock::new(1_700_000_000_000, 1)))
            .unwrap(),
    )
}

pub fn offline_state(data_dir: &Path) -> Arc<AppState> {
    state_with(config(data_dir), Arc::new(RuleBackend))
}
