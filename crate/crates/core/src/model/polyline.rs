use serde::{Deserialize, Serialize};

/// A 2D point in meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Piecewise-linear profile `y(x)`, extended horizontally past both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Polyline(pub Vec<Point>);

impl Polyline {
    pub fn new(points: Vec<Point>) -> Self {
        Self(points)
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.0.iter().all(Point::is_finite)
    }

    /// True when x strictly increases along the vertices.
    pub fn is_x_monotone(&self) -> bool {
        self.0.windows(2).all(|w| w[1].x > w[0].x)
    }

    pub fn x_range(&self) -> Option<(f64, f64)> {
        Some((self.0.first()?.x, self.0.last()?.x))
    }

    pub fn y_range(&self) -> Option<(f64, f64)> {
        let mut it = self.0.iter().map(|p| p.y);
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), y| (lo.min(y), hi.max(y))))
    }

    /// Elevation at `x`. Requires a non-empty, x-monotone polyline.
    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.0;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if x <= first.x {
            return first.y;
        }
        if x >= last.x {
            return last.y;
        }
        // first index with p.x > x; guaranteed in 1..len
        let hi = pts.partition_point(|p| p.x <= x);
        let (a, b) = (pts[hi - 1], pts[hi]);
        let t = (x - a.x) / (b.x - a.x);
        a.y + t * (b.y - a.y)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(
            self.0
                .iter()
                .map(|p| Point::new(p.x * factor, p.y * factor))
                .collect(),
        )
    }
}

impl From<Vec<[f64; 2]>> for Polyline {
    fn from(v: Vec<[f64; 2]>) -> Self {
        Self(v.into_iter().map(Point::from).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_extends_flat() {
        let p = Polyline::from(vec![[0.0, 0.0], [10.0, 5.0], [20.0, 5.0]]);
        assert_eq!(p.eval(-3.0), 0.0);
        assert_eq!(p.eval(5.0), 2.5);
        assert_eq!(p.eval(10.0), 5.0);
        assert_eq!(p.eval(25.0), 5.0);
    }

    #[test]
    fn monotonicity() {
        assert!(Polyline::from(vec![[0.0, 0.0], [1.0, 0.0]]).is_x_monotone());
        assert!(!Polyline::from(vec![[0.0, 0.0], [0.0, 1.0]]).is_x_monotone());
    }

    #[test]
    fn point_serializes_as_pair() {
        let s = serde_json::to_string(&Point::new(1.5, -2.0)).unwrap();
        assert_eq!(s, "[1.5,-2.0]");
    }
}
