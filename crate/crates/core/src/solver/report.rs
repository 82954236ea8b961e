use serde::{Deserialize, Serialize};

use crate::model::{canonical_hash, to_canonical_pretty, Method, SlopeProblem};

use super::{Slice, SlipCircle, SolveResult, GAMMA_W};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMeta {
    pub method: Method,
    pub bishop_iterations: usize,
    pub converged: bool,
    pub grid_evaluations: usize,
    pub tension_clamps: usize,
    pub entry_x: f64,
    pub exit_x: f64,
    pub gamma_w: f64,
    pub pore_pressure_model: String,
    pub problem_hash: String,
    pub problem: SlopeProblem,
}

/// On-disk solver result: `fos`, `critical_circle`, `slices`, `meta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub fos: f64,
    pub critical_circle: SlipCircle,
    pub slices: Vec<Slice>,
    pub meta: ResultMeta,
}

impl ResultFile {
    pub fn new(problem: &SlopeProblem, result: &SolveResult) -> Self {
        Self {
            fos: result.fos,
            critical_circle: result.critical,
            slices: result.slices.clone(),
            meta: ResultMeta {
                method: result.method,
                bishop_iterations: result.bishop_iterations,
                converged: result.converged,
                grid_evaluations: result.grid_evaluations,
                tension_clamps: result.tension_clamps,
                entry_x: result.entry_x,
                exit_x: result.exit_x,
                gamma_w: GAMMA_W,
                pore_pressure_model:
                    "hydrostatic: gamma_w times water-table height above the slice base midpoint"
                        .into(),
                problem_hash: canonical_hash(problem).unwrap_or_default(),
                problem: problem.clone(),
            },
        }
    }

    pub fn to_text(&self) -> String {
        to_canonical_pretty(self)
    }

    pub fn from_text(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
