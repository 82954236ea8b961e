//! Seeded generator of valid problems whose numbers all have at most nine
//! significant digits.

use rand::prelude::*;
use slopesim_core::model::{
    validate, AnalysisConfig, CenterGrid, MaterialLayer, Method, Point, Polyline, SearchConfig,
    SlopeGeometry, SlopeProblem, Target,
};

fn q(rng: &mut StdRng, lo: f64, hi: f64, step: f64) -> f64 {
    let k = rng.random_range((lo / step).round() as i64..=(hi / step).round() as i64);
    dec(k as f64 * step, 3)
}

/// Nearest double to `x` rounded to `places` decimals.
fn dec(x: f64, places: usize) -> f64 {
    format!("{x:.places$}").parse().unwrap()
}

const NAMES: [&str; 6] = [
    "clay",
    "dense sand",
    "fill \"A\"",
    "silt\\loam",
    "rock",
    "layer-1",
];

fn geometry(rng: &mut StdRng) -> SlopeGeometry {
    if rng.random_bool(0.5) {
        SlopeGeometry::Parametric {
            height: q(rng, 2.0, 40.0, 0.01),
            slope_angle: q(rng, 10.0, 75.0, 0.01),
            crest_extent: q(rng, 5.0, 50.0, 0.1),
            toe_extent: q(rng, 5.0, 50.0, 0.1),
        }
    } else {
        let n = rng.random_range(2..=7);
        let mut x = q(rng, -50.0, 0.0, 0.01);
        let mut y = q(rng, 0.0, 5.0, 0.01);
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            pts.push(Point::new(x, y));
            x = dec(x + q(rng, 1.0, 20.0, 0.01), 2);
            y = q(rng, 0.0, 30.0, 0.01);
        }
        SlopeGeometry::Polyline {
            surface: Polyline::new(pts),
        }
    }
}

/// A valid problem in the capability set of `target`.
pub fn random_problem(rng: &mut StdRng, target: Target) -> SlopeProblem {
    loop {
        let geometry = geometry(rng);
        let surface = geometry.surface();
        let (x0, x1) = surface.x_range().unwrap();
        let (x0, x1) = (dec(x0, 2), dec(x1, 2));
        let (y0, y1) = surface.y_range().unwrap();
        let n_layers = rng.random_range(1..=3);
        let mut depth = (y0 - 0.5).floor();
        let layers: Vec<MaterialLayer> = (0..n_layers)
            .map(|i| {
                let unit_weight = q(rng, 14.0, 24.0, 0.01);
                let friction_angle = q(rng, 0.0, 45.0, 0.1);
                let cohesion = if friction_angle == 0.0 {
                    q(rng, 1.0, 80.0, 0.1)
                } else {
                    q(rng, 0.0, 80.0, 0.1)
                };
                let base = (i + 1 < n_layers).then(|| {
                    depth = dec(depth - q(rng, 1.0, 8.0, 0.5), 1);
                    Polyline::new(vec![
                        Point::new(x0, depth),
                        Point::new(x1, dec(depth - q(rng, 0.0, 2.0, 0.5), 1)),
                    ])
                });
                if let Some(b) = &base {
                    depth = b.y_range().unwrap().0;
                }
                MaterialLayer {
                    name: format!("{} {}", NAMES[rng.random_range(0..NAMES.len())], i + 1),
                    unit_weight,
                    cohesion,
                    friction_angle,
                    saturated_unit_weight: rng
                        .random_bool(0.4)
                        .then(|| dec(unit_weight + q(rng, 0.0, 3.0, 0.01), 2)),
                    base,
                }
            })
            .collect();
        let water_table = rng.random_bool(0.5).then(|| {
            let level = dec(y0 - q(rng, 0.0, 3.0, 0.01), 2);
            Polyline::new(vec![Point::new(x0, level), Point::new(x1, level)])
        });
        let method = if target == Target::AdonisProfile || rng.random_bool(0.5) {
            Method::BishopSimplified
        } else {
            Method::Fellenius
        };
        let width = x1 - x0;
        let p = SlopeProblem {
            geometry,
            layers,
            water_table,
            analysis: AnalysisConfig {
                method,
                slice_count: rng.random_range(10..=200),
                target,
                search: SearchConfig {
                    center_grid: CenterGrid {
                        x_range: [dec(x0 + 0.25 * width, 3), dec(x0 + 0.75 * width, 3)],
                        y_range: [
                            (y1 + 1.0).round(),
                            (y1 + 1.0).round() + q(rng, 5.0, 40.0, 0.5),
                        ],
                        nx: rng.random_range(2..=15),
                        ny: rng.random_range(2..=15),
                    },
                    radius_samples: rng.random_range(2..=15),
                    refine_rounds: rng.random_range(0..=5),
                },
            },
            provenance: vec![],
        };
        if validate(&p).is_empty() {
            return p;
        }
    }
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}
