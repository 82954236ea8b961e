use std::fmt::Write;

use crate::model::{Point, SlopeProblem};

use super::ResultFile;

const WIDTH: f64 = 800.0;
const MARGIN: f64 = 40.0;

struct Frame {
    x0: f64,
    y1: f64,
    scale: f64,
}

impl Frame {
    fn map(&self, p: Point) -> (f64, f64) {
        (
            MARGIN + (p.x - self.x0) * self.scale,
            MARGIN + (self.y1 - p.y) * self.scale,
        )
    }

    fn path(&self, pts: &[Point]) -> String {
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let (x, y) = self.map(*p);
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, x, y);
        }
        d
    }
}

/// SVG cross-section: ground surface, layer boundaries, water table, the
/// critical circle between its exits and the slice boundaries.
pub fn render_svg(result: &ResultFile) -> String {
    let problem: &SlopeProblem = &result.meta.problem;
    let surface = problem.surface();
    let circle = result.critical_circle;
    let (sx0, sx1) = surface.x_range().unwrap_or((0.0, 1.0));
    let (sy0, sy1) = surface.y_range().unwrap_or((0.0, 1.0));
    let x0 = sx0.min(circle.center.x);
    let x1 = sx1.max(circle.center.x);
    let y0 = sy0.min(circle.center.y - circle.radius);
    let y1 = sy1.max(circle.center.y);
    let scale = (WIDTH - 2.0 * MARGIN) / (x1 - x0).max(1e-9);
    let height = (y1 - y0) * scale + 2.0 * MARGIN;
    let frame = Frame { x0, y1, scale };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let mut ground = surface.points().to_vec();
    ground.push(Point::new(sx1, y0));
    ground.push(Point::new(sx0, y0));
    let _ = writeln!(
        svg,
        r##"<path d="{} Z" fill="#e8d8b8" stroke="#7a5a2a" stroke-width="2"/>"##,
        frame.path(&ground)
    );
    for layer in &problem.layers {
        if let Some(base) = &layer.base {
            let _ = writeln!(
                svg,
                r##"<path d="{}" fill="none" stroke="#7a5a2a" stroke-dasharray="6 4"/>"##,
                frame.path(base.points())
            );
        }
    }
    if let Some(wt) = &problem.water_table {
        let _ = writeln!(
            svg,
            r##"<path d="{}" fill="none" stroke="#2a6fdb" stroke-width="2"/>"##,
            frame.path(wt.points())
        );
    }
    for s in &result.slices {
        let left = s.x_mid - 0.5 * s.width;
        let top = Point::new(left, surface.eval(left));
        let bottom = Point::new(left, circle.lower_arc(left));
        let _ = writeln!(
            svg,
            r##"<path d="{}" stroke="#999999" stroke-width="0.5"/>"##,
            frame.path(&[top, bottom])
        );
    }
    let arc: Vec<Point> = (0..=200)
        .map(|i| {
            let x =
                result.meta.entry_x + (result.meta.exit_x - result.meta.entry_x) * i as f64 / 200.0;
            Point::new(x, circle.lower_arc(x))
        })
        .collect();
    let _ = writeln!(
        svg,
        r##"<path d="{}" fill="none" stroke="#d62728" stroke-width="2.5"/>"##,
        frame.path(&arc)
    );
    let (cx, cy) = frame.map(circle.center);
    let _ = writeln!(
        svg,
        r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="4" fill="#d62728"/>"##
    );
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN:.0}" y="24" font-family="sans-serif" font-size="16">FS = {:.3} ({})</text>"#,
        result.fos,
        result.meta.method.label()
    );
    svg.push_str("</svg>\n");
    svg
}
