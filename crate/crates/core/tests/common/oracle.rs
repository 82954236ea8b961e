//! Independent reference computations used to check the solver and the
//! retrieval engine. Nothing here calls into the library's numerical paths.

#![allow(dead_code)]

/// Ground surface of a parametric slope with the toe at the origin.
pub struct ParametricSlope {
    pub height: f64,
    pub angle_deg: f64,
}

impl ParametricSlope {
    pub fn crest_x(&self) -> f64 {
        self.height / self.angle_deg.to_radians().tan()
    }

    pub fn surface(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.crest_x() {
            self.height
        } else {
            x * self.height / self.crest_x()
        }
    }
}

pub struct OracleSoil {
    pub unit_weight: f64,
    pub cohesion: f64,
    pub friction_deg: f64,
}

fn lower_arc(cx: f64, cy: f64, r: f64, x: f64) -> f64 {
    cy - (r * r - (x - cx) * (x - cx)).max(0.0).sqrt()
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Entry and exit abscissae of a circle on the slope surface, found by
/// dense sampling plus bisection.
pub fn circle_exits(slope: &ParametricSlope, cx: f64, cy: f64, r: f64) -> (f64, f64) {
    let g = |x: f64| slope.surface(x) - lower_arc(cx, cy, r, x);
    let a = cx - r;
    let b = cx + r;
    let samples = 100_000;
    let mut roots = Vec::new();
    let mut prev_x = a;
    let mut prev = g(a);
    for i in 1..=samples {
        let x = a + (b - a) * i as f64 / samples as f64;
        let v = g(x);
        if (v > 0.0) != (prev > 0.0) {
            roots.push(bisect(g, prev_x, x));
        }
        prev_x = x;
        prev = v;
    }
    assert_eq!(roots.len(), 2, "oracle circle must cut the surface twice");
    (roots[0], roots[1])
}

struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn new() -> Self {
        Self {
            sum: 0.0,
            comp: 0.0,
        }
    }
    fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }
}

pub struct OracleResult {
    pub fellenius: f64,
    pub bishop: f64,
    pub weight: f64,
}

/// Dry homogeneous slope, circle (cx, cy, r), `n` vertical slices.
/// Bishop iterates to `tol` from a Fellenius seed.
pub fn slope_fos(
    slope: &ParametricSlope,
    soil: &OracleSoil,
    cx: f64,
    cy: f64,
    r: f64,
    n: usize,
    tol: f64,
) -> OracleResult {
    let (xl, xr) = circle_exits(slope, cx, cy, r);
    let b = (xr - xl) / n as f64;
    let tan_phi = soil.friction_deg.to_radians().tan();
    // (weight, sin a, cos a)
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        let xm = xl + (i as f64 + 0.5) * b;
        let ybase = lower_arc(cx, cy, r, xm);
        let h = (slope.surface(xm) - ybase).max(0.0);
        let w = soil.unit_weight * h * b;
        let sin_a = (xm - cx) / r;
        let cos_a = (1.0 - sin_a * sin_a).sqrt();
        cols.push((w, sin_a, cos_a));
    }
    let mut drive = KahanSum::new();
    let mut weight = KahanSum::new();
    let mut resist = KahanSum::new();
    for &(w, s, c) in &cols {
        drive.add(w * s);
        weight.add(w);
        resist.add(soil.cohesion * b / c + w * c * tan_phi);
    }
    let fellenius = resist.sum / drive.sum;
    let mut fs = fellenius;
    for _ in 0..10_000 {
        let mut num = KahanSum::new();
        for &(w, s, c) in &cols {
            let tan_a = s / c;
            let m = c * (1.0 + tan_a * tan_phi / fs);
            num.add((soil.cohesion * b + w * tan_phi) / m);
        }
        let next = num.sum / drive.sum;
        if (next - fs).abs() < tol {
            fs = next;
            break;
        }
        fs = next;
    }
    OracleResult {
        fellenius,
        bishop: fs,
        weight: weight.sum,
    }
}

/// Cross-section area between a parametric slope surface and a circle,
/// by composite Simpson quadrature.
pub fn sliding_area(slope: &ParametricSlope, cx: f64, cy: f64, r: f64, n: usize) -> f64 {
    let (xl, xr) = circle_exits(slope, cx, cy, r);
    let n = if n % 2 == 1 { n + 1 } else { n };
    let h = (xr - xl) / n as f64;
    let f = |x: f64| (slope.surface(x) - lower_arc(cx, cy, r, x)).max(0.0);
    let mut acc = f(xl) + f(xr);
    for i in 1..n {
        let x = xl + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

/// Exhaustive cosine ranking: (index, score) best first, ties by key order.
pub fn brute_force_top_k(
    keys: &[String],
    vectors: &[Vec<f64>],
    query: &[f64],
    k: usize,
) -> Vec<(String, f64)> {
    let qn: f64 = query.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut scored: Vec<(String, f64)> = keys
        .iter()
        .zip(vectors)
        .map(|(key, v)| {
            let vn: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = v.iter().zip(query).map(|(a, b)| a * b).sum();
            (key.clone(), dot / (vn * qn))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}
