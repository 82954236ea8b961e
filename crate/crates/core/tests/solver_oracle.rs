mod common;

use common::benchmark;
use common::oracle::{
    circle_exits as oracle_exits, sliding_area, slope_fos, OracleSoil, ParametricSlope,
};
use slopesim_core::model::{Method, Polyline, SlopeGeometry};
use slopesim_core::solver::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn frozen_fixture_matches_live_oracle() {
    let (_, c, o) = benchmark();
    let slope = ParametricSlope {
        height: 10.0,
        angle_deg: 26.57,
    };
    let soil = OracleSoil {
        unit_weight: 18.0,
        cohesion: 20.0,
        friction_deg: 20.0,
    };
    let live = slope_fos(
        &slope, &soil, c.center.x, c.center.y, c.radius, 20_000, 1e-12,
    );
    assert!(rel(live.bishop, o["fos_bishop"].as_f64().unwrap()) < 1e-12);
    assert!(rel(live.fellenius, o["fos_fellenius"].as_f64().unwrap()) < 1e-12);
}

#[test]
fn benchmark_bishop_within_half_percent_of_oracle() {
    let (p, c, o) = benchmark();
    let expected = o["fos_bishop"].as_f64().unwrap();
    let r = solve_circle(&p, &c).unwrap();
    assert!(r.converged);
    assert!(rel(r.fos, expected) < 0.005, "{} vs {}", r.fos, expected);
}

#[test]
fn benchmark_exits_match_oracle() {
    let (p, c, o) = benchmark();
    let (xl, xr) = circle_exits(&p.surface(), &c).unwrap();
    assert!((xl - o["entry_x"].as_f64().unwrap()).abs() < 1e-9);
    assert!((xr - o["exit_x"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn slice_weights_integrate_the_sliding_area() {
    let (p, c, _) = benchmark();
    let slope = ParametricSlope {
        height: 10.0,
        angle_deg: 26.57,
    };
    let area = sliding_area(&slope, c.center.x, c.center.y, c.radius, 20_000);
    let total: f64 = build_slices(&p, &c, 200)
        .unwrap()
        .iter()
        .map(|s| s.weight)
        .sum();
    assert!(rel(total, area * 18.0) < 0.005);
}

#[test]
fn steep_slope_matches_oracle() {
    let (mut p, _, _) = benchmark();
    p.geometry = SlopeGeometry::Parametric {
        height: 10.0,
        slope_angle: 45.0,
        crest_extent: 20.0,
        toe_extent: 20.0,
    };
    p.layers[0].cohesion = 5.0;
    let c = SlipCircle::new(5.0, 15.0, 16.0);
    let slope = ParametricSlope {
        height: 10.0,
        angle_deg: 45.0,
    };
    let soil = OracleSoil {
        unit_weight: 18.0,
        cohesion: 5.0,
        friction_deg: 20.0,
    };
    let o = slope_fos(&slope, &soil, 5.0, 15.0, 16.0, 20_000, 1e-12);
    let (ol, or) = oracle_exits(&slope, 5.0, 15.0, 16.0);
    let (xl, xr) = circle_exits(&p.surface(), &c).unwrap();
    assert!((xl - ol).abs() < 1e-9 && (xr - or).abs() < 1e-9);
    let bishop = solve_circle(&p, &c).unwrap().fos;
    p.analysis.method = Method::Fellenius;
    let fellenius = solve_circle(&p, &c).unwrap().fos;
    assert!(rel(bishop, o.bishop) < 0.005);
    assert!(rel(fellenius, o.fellenius) < 0.005);
}

/// Second, independently ordered evaluation of the ordinary-method sums.
fn fellenius_reverse(slices: &[Slice]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for s in slices.iter().rev() {
        let (sin, cos) = s.base_angle.sin_cos();
        let n_eff = s.weight * cos - s.pore_pressure * s.width / cos;
        num += s.cohesion * s.width / cos
            + if n_eff > 0.0 {
                n_eff * s.friction.tan()
            } else {
                0.0
            };
        den += s.weight * sin;
    }
    num / den
}

#[test]
fn fellenius_matches_independent_sum_with_water() {
    let (mut p, c, _) = benchmark();
    p.layers[0].saturated_unit_weight = Some(20.0);
    p.water_table = Some(Polyline::from(vec![[-20.0, 0.0], [0.0, 1.0], [40.0, 5.0]]));
    let s = build_slices(&p, &c, 75).unwrap();
    let a = fos_fellenius(&s).unwrap();
    let b = fellenius_reverse(&s);
    assert!(rel(a, b) < 1e-12, "{a} vs {b}");
}

#[test]
fn slice_count_convergence() {
    let (p, c, _) = benchmark();
    let fs = |n: usize| {
        let s = build_slices(&p, &c, n).unwrap();
        fos_bishop(&s, 1e-12, 500).unwrap().fos
    };
    assert!((fs(400) - fs(200)).abs() < (fs(100) - fs(50)).abs());
}

#[test]
fn sparse_grid_returns_best_admissible_and_counts_everything() {
    let (mut p, _, _) = benchmark();
    // columns at x = 5 and x = 60 (past the profile, nearest point is the
    // endpoint, so no radius range); rows at y = -5 (inside the soil) and 25
    p.analysis.search.center_grid.x_range = [5.0, 60.0];
    p.analysis.search.center_grid.y_range = [-5.0, 25.0];
    p.analysis.search.center_grid.nx = 2;
    p.analysis.search.center_grid.ny = 2;
    p.analysis.search.radius_samples = 2;
    p.analysis.search.refine_rounds = 0;
    let r = search_critical(&p).unwrap();
    assert_eq!(r.grid_evaluations, 8);
    let mut admissible = Vec::new();
    for center in grid_centers(&p) {
        for radius in candidate_radii(&p, center) {
            let circle = SlipCircle::new(center.x, center.y, radius);
            if let Ok((fos, _)) = evaluate_circle(&p, &circle) {
                admissible.push((fos, circle));
            }
        }
    }
    assert!(admissible
        .iter()
        .all(|(_, c)| c.center.x == 5.0 && c.center.y == 25.0));
    let best = admissible
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    assert_eq!(r.critical, best.1);
    assert_eq!(r.fos, best.0);
}

#[test]
fn all_degenerate_grid_is_an_error() {
    let (mut p, _, _) = benchmark();
    p.analysis.search.center_grid.x_range = [60.0, 70.0];
    p.analysis.search.center_grid.y_range = [-50.0, -40.0];
    assert_eq!(
        search_critical(&p).unwrap_err(),
        SolverError::NoAdmissibleCircle
    );
}

#[test]
fn bishop_is_not_far_below_fellenius() {
    let (p, c, _) = benchmark();
    let s = build_slices(&p, &c, 50).unwrap();
    let b = fos_bishop(&s, BISHOP_TOL, BISHOP_MAX_ITER).unwrap().fos;
    assert!(b >= 0.95 * fos_fellenius(&s).unwrap());
}

#[test]
fn result_file_round_trips_and_plots() {
    let (p, c, _) = benchmark();
    let r = solve_circle(&p, &c).unwrap();
    let file = ResultFile::new(&p, &r);
    let text = file.to_text();
    let back = ResultFile::from_text(&text).unwrap();
    assert!((back.fos - r.fos).abs() < 1e-9 * r.fos);
    assert_eq!(back.slices.len(), 50);
    let svg = render_svg(&back);
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("FS = 1.986"));
    assert_eq!(svg, render_svg(&back));
}
