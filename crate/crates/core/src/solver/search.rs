use std::cmp::Ordering;

use rayon::prelude::*;

use crate::model::{validate, Method, Point, Polyline, SlopeProblem};

use super::{
    build_slices, circle_exits, fos_bishop, fos_fellenius, tension_clamp_count, SlipCircle,
    SolveResult, SolverError, BISHOP_MAX_ITER, BISHOP_TOL,
};

/// Grid of trial centers, row-major over x then y, both ranges inclusive.
pub fn grid_centers(problem: &SlopeProblem) -> Vec<Point> {
    let g = &problem.analysis.search.center_grid;
    let (nx, ny) = (g.nx.max(2) as usize, g.ny.max(2) as usize);
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        let x = g.x_range[0] + (g.x_range[1] - g.x_range[0]) * i as f64 / (nx - 1) as f64;
        for j in 0..ny {
            let y = g.y_range[0] + (g.y_range[1] - g.y_range[0]) * j as f64 / (ny - 1) as f64;
            out.push(Point::new(x, y));
        }
    }
    out
}

fn distance_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a.x + t * dx - p.x, a.y + t * dy - p.y);
    (qx * qx + qy * qy).sqrt()
}

/// Bounds for trial radii about `center`: from the shortest distance to the
/// surface (a tangent circle) to the nearer of the two surface endpoints,
/// so both exits stay within the described profile.
fn radius_bounds(surface: &Polyline, center: Point) -> (f64, f64) {
    let pts = surface.points();
    let lo = pts
        .windows(2)
        .map(|w| distance_to_segment(center, w[0], w[1]))
        .fold(f64::INFINITY, f64::min);
    let dist = |p: Point| ((p.x - center.x).powi(2) + (p.y - center.y).powi(2)).sqrt();
    let hi = dist(pts[0]).min(dist(pts[pts.len() - 1]));
    (lo, hi)
}

/// Trial radii for one center: `radius_samples` values evenly spaced on
/// `(r_lo, r_hi]`. Empty when the bounds are inverted.
pub fn candidate_radii(problem: &SlopeProblem, center: Point) -> Vec<f64> {
    let (lo, hi) = radius_bounds(&problem.surface(), center);
    let n = problem.analysis.search.radius_samples.max(2) as usize;
    if !(hi > lo) {
        return vec![f64::NAN; n];
    }
    (1..=n)
        .map(|k| lo + (hi - lo) * k as f64 / n as f64)
        .collect()
}

#[derive(Debug, Clone)]
struct Trial {
    circle: SlipCircle,
    fos: f64,
    iterations: usize,
}

fn better(a: &Trial, b: &Trial) -> Ordering {
    a.fos
        .total_cmp(&b.fos)
        .then_with(|| a.circle.lex_cmp(&b.circle))
}

/// Factor of safety on one circle with the problem's method and slice
/// count, plus the Bishop iteration count (0 for Fellenius).
pub fn evaluate_circle(
    problem: &SlopeProblem,
    circle: &SlipCircle,
) -> Result<(f64, usize), SolverError> {
    let n = problem.analysis.slice_count.max(1) as usize;
    let slices = build_slices(problem, circle, n)?;
    match problem.analysis.method {
        Method::Fellenius => Ok((fos_fellenius(&slices)?, 0)),
        Method::BishopSimplified => {
            let b = fos_bishop(&slices, BISHOP_TOL, BISHOP_MAX_ITER)?;
            Ok((b.fos, b.iterations))
        }
    }
}

fn trial(problem: &SlopeProblem, circle: SlipCircle) -> Option<Trial> {
    if !circle.radius.is_finite() {
        return None;
    }
    evaluate_circle(problem, &circle)
        .ok()
        .filter(|(fos, _)| fos.is_finite() && *fos > 0.0)
        .map(|(fos, iterations)| Trial {
            circle,
            fos,
            iterations,
        })
}

fn best_of(trials: impl ParallelIterator<Item = Option<Trial>>) -> Option<Trial> {
    trials.flatten().min_by(better)
}

fn finish(
    problem: &SlopeProblem,
    best: Trial,
    evaluations: usize,
) -> Result<SolveResult, SolverError> {
    let n = problem.analysis.slice_count.max(1) as usize;
    let slices = build_slices(problem, &best.circle, n)?;
    let (entry_x, exit_x) = circle_exits(&problem.surface(), &best.circle)?;
    Ok(SolveResult {
        critical: best.circle,
        fos: best.fos,
        method: problem.analysis.method,
        tension_clamps: tension_clamp_count(&slices),
        slices,
        bishop_iterations: best.iterations,
        converged: true,
        grid_evaluations: evaluations,
        entry_x,
        exit_x,
    })
}

fn ensure_valid(problem: &SlopeProblem) -> Result<(), SolverError> {
    let report = validate(problem);
    if report.is_empty() {
        Ok(())
    } else {
        Err(SolverError::InvalidProblem(report.to_string()))
    }
}

/// Solves one fixed circle. `NonConvergence` and geometric errors are
/// returned rather than skipped.
pub fn solve_circle(
    problem: &SlopeProblem,
    circle: &SlipCircle,
) -> Result<SolveResult, SolverError> {
    ensure_valid(problem)?;
    let (fos, iterations) = evaluate_circle(problem, circle)?;
    finish(
        problem,
        Trial {
            circle: *circle,
            fos,
            iterations,
        },
        1,
    )
}

/// Critical circle search: every grid center × trial radius is evaluated,
/// skipping degenerate and non-convergent circles; then `refine_rounds`
/// rounds of local search with halved steps around the incumbent. Ties go
/// to the lowest `(x, y, r)`.
pub fn search_critical(problem: &SlopeProblem) -> Result<SolveResult, SolverError> {
    ensure_valid(problem)?;
    let centers = grid_centers(problem);
    let candidates: Vec<SlipCircle> = centers
        .iter()
        .flat_map(|c| {
            candidate_radii(problem, *c)
                .into_iter()
                .map(move |r| SlipCircle::new(c.x, c.y, r))
        })
        .collect();
    let mut evaluations = candidates.len();
    let mut best = best_of(candidates.into_par_iter().map(|c| trial(problem, c)))
        .ok_or(SolverError::NoAdmissibleCircle)?;

    let g = &problem.analysis.search.center_grid;
    let mut dx = (g.x_range[1] - g.x_range[0]) / (g.nx.max(2) - 1) as f64;
    let mut dy = (g.y_range[1] - g.y_range[0]) / (g.ny.max(2) - 1) as f64;
    let (lo, hi) = radius_bounds(&problem.surface(), best.circle.center);
    let mut dr = ((hi - lo) / problem.analysis.search.radius_samples.max(2) as f64).abs();
    if !(dr > 0.0) {
        dr = 0.01 * best.circle.radius;
    }
    for _ in 0..problem.analysis.search.refine_rounds.max(0) {
        dx *= 0.5;
        dy *= 0.5;
        dr *= 0.5;
        let c = best.circle;
        let mut neighbours = Vec::with_capacity(26);
        for i in -1..=1 {
            for j in -1..=1 {
                for k in -1..=1 {
                    if (i, j, k) != (0, 0, 0) {
                        neighbours.push(SlipCircle::new(
                            c.center.x + i as f64 * dx,
                            c.center.y + j as f64 * dy,
                            c.radius + k as f64 * dr,
                        ));
                    }
                }
            }
        }
        evaluations += neighbours.len();
        if let Some(t) = best_of(neighbours.into_par_iter().map(|c| trial(problem, c))) {
            if t.fos < best.fos {
                best = t;
            }
        }
    }
    finish(problem, best, evaluations)
}
