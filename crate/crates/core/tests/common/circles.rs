use slopesim_core::model::{Polyline, SlopeGeometry, SlopeProblem};
use slopesim_core::solver::{
    build_slices, candidate_radii, evaluate_circle, grid_centers, SlipCircle,
};

/// Largest accepted ratio of sum |W sin a| to |sum W sin a|. Beyond it the
/// driving sum cancels so badly that rounding in single terms shows up far
/// above 1e-9 in the factor of safety.
pub const MAX_DRIVE_CONDITION: f64 = 1e3;

/// Conditioning of the driving sum on `circle`.
pub fn drive_condition(p: &SlopeProblem, circle: &SlipCircle) -> f64 {
    let Ok(slices) = build_slices(p, circle, p.analysis.slice_count as usize) else {
        return f64::INFINITY;
    };
    let terms = slices.iter().map(|s| s.weight * s.base_angle.sin());
    let abs: f64 = terms.clone().map(f64::abs).sum();
    abs / terms.sum::<f64>().abs()
}

/// First admissible, well-conditioned circle of the problem's own search
/// grid, if any.
pub fn admissible_circle(p: &SlopeProblem) -> Option<SlipCircle> {
    grid_centers(p).into_iter().find_map(|c| {
        candidate_radii(p, c)
            .into_iter()
            .map(|r| SlipCircle::new(c.x, c.y, r))
            .find(|circle| {
                evaluate_circle(p, circle).is_ok()
                    && drive_condition(p, circle) <= MAX_DRIVE_CONDITION
            })
    })
}

fn scale_line(l: &Polyline, s: f64) -> Polyline {
    l.scaled(s)
}

/// Every length in the problem multiplied by `s`; cohesion scaled with it
/// so that the problem stays similar.
pub fn scaled(p: &SlopeProblem, s: f64) -> SlopeProblem {
    let mut q = p.clone();
    q.geometry = match &p.geometry {
        SlopeGeometry::Polyline { surface } => SlopeGeometry::Polyline {
            surface: scale_line(surface, s),
        },
        SlopeGeometry::Parametric {
            height,
            slope_angle,
            crest_extent,
            toe_extent,
        } => SlopeGeometry::Parametric {
            height: height * s,
            slope_angle: *slope_angle,
            crest_extent: crest_extent * s,
            toe_extent: toe_extent * s,
        },
    };
    for l in &mut q.layers {
        l.cohesion *= s;
        l.base = l.base.as_ref().map(|b| scale_line(b, s));
    }
    q.water_table = p.water_table.as_ref().map(|w| scale_line(w, s));
    let g = &mut q.analysis.search.center_grid;
    g.x_range = [g.x_range[0] * s, g.x_range[1] * s];
    g.y_range = [g.y_range[0] * s, g.y_range[1] * s];
    q
}

pub fn scaled_circle(c: &SlipCircle, s: f64) -> SlipCircle {
    SlipCircle::new(c.center.x * s, c.center.y * s, c.radius * s)
}
