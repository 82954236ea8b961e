use crate::model::{Point, Polyline, SlopeProblem};

use super::{Slice, SlipCircle, SolverError, GAMMA_W};

const ROOT_DEDUP: f64 = 1e-9;

/// Intersections of the circle with one segment, as points.
fn segment_hits(a: Point, b: Point, circle: &SlipCircle, out: &mut Vec<Point>) {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let (fx, fy) = (a.x - circle.center.x, a.y - circle.center.y);
    let qa = dx * dx + dy * dy;
    let qb = 2.0 * (fx * dx + fy * dy);
    let qc = fx * fx + fy * fy - circle.radius * circle.radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if qa == 0.0 || disc < 0.0 {
        return;
    }
    let sq = disc.sqrt();
    // numerically stable pair of roots
    let q = -0.5 * (qb + qb.signum() * sq);
    let mut roots = [q / qa, if q != 0.0 { qc / q } else { q / qa }];
    roots.sort_by(f64::total_cmp);
    for t in roots {
        if (-1e-12..=1.0 + 1e-12).contains(&t) {
            out.push(Point::new(a.x + t * dx, a.y + t * dy));
        }
    }
}

/// Entry and exit abscissae of the slip circle on the ground surface (the
/// surface polyline extended flat beyond its ends).
pub fn circle_exits(surface: &Polyline, circle: &SlipCircle) -> Result<(f64, f64), SolverError> {
    if !(circle.radius > 0.0) || !circle.center.is_finite() || !circle.radius.is_finite() {
        return Err(SolverError::DegenerateCircle);
    }
    let pts = surface.points();
    let first = pts[0];
    let last = pts[pts.len() - 1];
    let reach = circle.radius + 1.0;
    let mut vertices = Vec::with_capacity(pts.len() + 2);
    if circle.center.x - reach < first.x {
        vertices.push(Point::new(circle.center.x - reach, first.y));
    }
    vertices.extend_from_slice(pts);
    if circle.center.x + reach > last.x {
        vertices.push(Point::new(circle.center.x + reach, last.y));
    }

    let mut hits = Vec::new();
    for w in vertices.windows(2) {
        segment_hits(w[0], w[1], circle, &mut hits);
    }
    if hits.iter().any(|p| p.y > circle.center.y + ROOT_DEDUP) {
        return Err(SolverError::DegenerateCircle);
    }
    let mut xs: Vec<f64> = hits.iter().map(|p| p.x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < ROOT_DEDUP);
    if xs.len() != 2 {
        return Err(SolverError::DegenerateCircle);
    }
    let (xl, xr) = (xs[0], xs[1]);
    let mid = 0.5 * (xl + xr);
    if surface.eval(mid) <= circle.lower_arc(mid) {
        return Err(SolverError::DegenerateCircle);
    }
    Ok((xl, xr))
}

/// Discretizes the sliding mass above `circle` into `n` vertical slices of
/// equal width between the circle's entry and exit points.
///
/// Slice weight integrates layer unit weights over the column at the slice
/// midpoint, using the saturated unit weight below the water table. Pore
/// pressure is hydrostatic: `GAMMA_W` times the height of the water table
/// above the base midpoint.
pub fn build_slices(
    problem: &SlopeProblem,
    circle: &SlipCircle,
    n: usize,
) -> Result<Vec<Slice>, SolverError> {
    let surface = problem.surface();
    let (xl, xr) = circle_exits(&surface, circle)?;
    if n == 0 {
        return Err(SolverError::DegenerateCircle);
    }
    // the mass slides toward the lower exit
    let orient = if surface.eval(xr) >= surface.eval(xl) {
        1.0
    } else {
        -1.0
    };
    let width = (xr - xl) / n as f64;
    let mut slices = Vec::with_capacity(n);
    for i in 0..n {
        let x_mid = xl + (i as f64 + 0.5) * width;
        let y_base = circle.lower_arc(x_mid);
        let top = surface.eval(x_mid);
        let water = problem.water_table.as_ref().map(|w| w.eval(x_mid));

        let mut weight = 0.0;
        let mut ceiling = top;
        for layer in &problem.layers {
            let floor = layer
                .base
                .as_ref()
                .map_or(y_base, |b| b.eval(x_mid).max(y_base));
            let thickness = (ceiling.min(top) - floor).max(0.0);
            if thickness > 0.0 {
                let seg_top = ceiling.min(top);
                let dry = match water {
                    Some(wl) => (seg_top - floor.max(wl)).clamp(0.0, thickness),
                    None => thickness,
                };
                let wet = thickness - dry;
                let sat = layer.saturated_unit_weight.unwrap_or(layer.unit_weight);
                weight += width * (layer.unit_weight * dry + sat * wet);
            }
            ceiling = ceiling.min(floor);
            if floor <= y_base {
                break;
            }
        }

        let sin_a = orient * (x_mid - circle.center.x) / circle.radius;
        let base_angle = sin_a.clamp(-1.0, 1.0).asin();
        let base_length = width / base_angle.cos();
        let base_layer = &problem.layers[problem.layer_at(x_mid, y_base)];
        let pore_pressure = water.map_or(0.0, |wl| GAMMA_W * (wl - y_base).max(0.0));
        slices.push(Slice {
            x_mid,
            width,
            weight,
            base_angle,
            base_length,
            cohesion: base_layer.cohesion,
            friction: base_layer.friction_angle.to_radians(),
            pore_pressure,
        });
    }
    if slices.iter().all(|s| s.weight <= 0.0) {
        return Err(SolverError::DegenerateCircle);
    }
    Ok(slices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        AnalysisConfig, CenterGrid, MaterialLayer, Method, SearchConfig, SlopeGeometry, Target,
    };

    pub(crate) fn homogeneous(surface: Polyline) -> SlopeProblem {
        SlopeProblem {
            geometry: SlopeGeometry::Polyline { surface },
            layers: vec![MaterialLayer {
                name: "soil".into(),
                unit_weight: 18.0,
                cohesion: 10.0,
                friction_angle: 25.0,
                saturated_unit_weight: Some(20.0),
                base: None,
            }],
            water_table: None,
            analysis: AnalysisConfig {
                method: Method::BishopSimplified,
                slice_count: 50,
                target: Target::None,
                search: SearchConfig {
                    center_grid: CenterGrid {
                        x_range: [0.0, 1.0],
                        y_range: [10.0, 11.0],
                        nx: 2,
                        ny: 2,
                    },
                    radius_samples: 2,
                    refine_rounds: 0,
                },
            },
            provenance: vec![],
        }
    }

    fn slope() -> Polyline {
        Polyline::from(vec![[-20.0, 0.0], [0.0, 0.0], [10.0, 10.0], [30.0, 10.0]])
    }

    #[test]
    fn circle_above_ground_is_degenerate() {
        let p = homogeneous(slope());
        let c = SlipCircle::new(5.0, 40.0, 5.0);
        assert_eq!(build_slices(&p, &c, 20), Err(SolverError::DegenerateCircle));
    }

    #[test]
    fn circle_entirely_below_ground_is_degenerate() {
        let p = homogeneous(slope());
        let c = SlipCircle::new(5.0, -20.0, 3.0);
        assert_eq!(build_slices(&p, &c, 20), Err(SolverError::DegenerateCircle));
    }

    #[test]
    fn equal_widths_span_the_chord() {
        let p = homogeneous(slope());
        let c = SlipCircle::new(3.0, 15.0, 16.0);
        let (xl, xr) = circle_exits(&p.surface(), &c).unwrap();
        let s = build_slices(&p, &c, 40).unwrap();
        assert_eq!(s.len(), 40);
        let total: f64 = s.iter().map(|s| s.width).sum();
        assert!((total - (xr - xl)).abs() < 1e-9);
        for sl in &s {
            assert!((sl.base_length - sl.width / sl.base_angle.cos()).abs() < 1e-12);
            assert!(sl.weight >= 0.0);
        }
    }

    #[test]
    fn symmetric_valley_has_no_net_driving_moment() {
        let valley = Polyline::from(vec![[-10.0, 5.0], [0.0, 0.0], [10.0, 5.0]]);
        let p = homogeneous(valley);
        let c = SlipCircle::new(0.0, 8.0, 10.0);
        let s = build_slices(&p, &c, 200).unwrap();
        let drive: f64 = s.iter().map(|s| s.weight * s.base_angle.sin()).sum();
        let total: f64 = s.iter().map(|s| s.weight).sum();
        assert!(drive.abs() < 1e-9 * total, "{drive} vs {total}");
    }

    #[test]
    fn pore_pressure_is_hydrostatic() {
        let mut p = homogeneous(slope());
        p.water_table = Some(Polyline::from(vec![[-20.0, 0.0], [30.0, 5.0]]));
        let c = SlipCircle::new(3.0, 15.0, 16.0);
        for s in build_slices(&p, &c, 30).unwrap() {
            let wl = p.water_table.as_ref().unwrap().eval(s.x_mid);
            let expect = GAMMA_W * (wl - c.lower_arc(s.x_mid)).max(0.0);
            assert!((s.pore_pressure - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn mirrored_slope_drives_the_other_way() {
        let p = homogeneous(slope());
        let mirrored = homogeneous(Polyline::from(vec![
            [-30.0, 10.0],
            [-10.0, 10.0],
            [0.0, 0.0],
            [20.0, 0.0],
        ]));
        let c = SlipCircle::new(3.0, 15.0, 16.0);
        let m = SlipCircle::new(-3.0, 15.0, 16.0);
        let a = build_slices(&p, &c, 50).unwrap();
        let b = build_slices(&mirrored, &m, 50).unwrap();
        let da: f64 = a.iter().map(|s| s.weight * s.base_angle.sin()).sum();
        let db: f64 = b.iter().map(|s| s.weight * s.base_angle.sin()).sum();
        assert!(da > 0.0);
        assert!((da - db).abs() < 1e-9 * da);
    }
}
