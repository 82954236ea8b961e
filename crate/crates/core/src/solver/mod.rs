//! Limit-equilibrium slope stability by the method of slices.
//!
//! Circular slip surfaces are discretized into vertical slices of equal
//! width ([`build_slices`]); the factor of safety follows from the ordinary
//! method ([`fos_fellenius`]) or Bishop's simplified method
//! ([`fos_bishop`]); [`search_critical`] minimizes over a grid of circles.

mod fos;
mod plot;
mod report;
mod search;
mod slices;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Method, Point};

pub use fos::{bishop_step, fos_bishop, fos_fellenius, tension_clamp_count, BishopOutcome};
pub use plot::render_svg;
pub use report::{ResultFile, ResultMeta};
pub use search::{candidate_radii, evaluate_circle, grid_centers, search_critical, solve_circle};
pub use slices::{build_slices, circle_exits};

/// Unit weight of water, kN/m³.
pub const GAMMA_W: f64 = 9.81;
pub const BISHOP_TOL: f64 = 1e-8;
pub const BISHOP_MAX_ITER: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("slip circle does not cut the ground surface in exactly two points")]
    DegenerateCircle,
    #[error("no driving moment on the slip surface")]
    NoDrivingForce,
    #[error("Bishop iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("no admissible slip circle in the search grid")]
    NoAdmissibleCircle,
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipCircle {
    pub center: Point,
    pub radius: f64,
}

impl SlipCircle {
    pub fn new(x: f64, y: f64, radius: f64) -> Self {
        Self {
            center: Point::new(x, y),
            radius,
        }
    }

    /// Elevation of the lower arc at `x` (clamped to the circle's extent).
    pub fn lower_arc(&self, x: f64) -> f64 {
        let dx = x - self.center.x;
        self.center.y - (self.radius * self.radius - dx * dx).max(0.0).sqrt()
    }

    /// Ordering used for deterministic tie-breaks: x, then y, then radius.
    pub(crate) fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.center
            .x
            .total_cmp(&other.center.x)
            .then(self.center.y.total_cmp(&other.center.y))
            .then(self.radius.total_cmp(&other.radius))
    }
}

/// One vertical slice. Angles are in radians; `base_angle` is positive
/// where the base rises in the direction away from the toe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub x_mid: f64,
    pub width: f64,
    /// kN per meter run
    pub weight: f64,
    pub base_angle: f64,
    pub base_length: f64,
    /// kPa
    pub cohesion: f64,
    pub friction: f64,
    /// kPa
    pub pore_pressure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub critical: SlipCircle,
    pub fos: f64,
    pub method: Method,
    pub slices: Vec<Slice>,
    pub bishop_iterations: usize,
    pub converged: bool,
    pub grid_evaluations: usize,
    /// Slices whose effective normal force was negative and whose
    /// frictional resistance was therefore set to zero.
    pub tension_clamps: usize,
    pub entry_x: f64,
    pub exit_x: f64,
}
