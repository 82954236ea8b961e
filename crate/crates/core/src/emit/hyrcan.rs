//! Function-call dialect.

use crate::model::{Method, Point};

use super::lexer::{quote, Cursor};
use super::{fmt_num, ParseError, Statement};

pub(super) const STAGE_LABELS: [&str; 12] = [
    "`Profile(...)`",
    "`NewModel()`",
    "`Slope(...)` or `SurfacePoint(...)`",
    "`Material(...)` or `Boundary(...)`",
    "`WaterPoint(...)`",
    "`Method(...)`",
    "`Slices(...)`",
    "`Grid(...)`",
    "`Radii(...)`",
    "`Refine(...)`",
    "`Solve()`",
    "`Report(\"fos\")`",
];

fn xy(p: &Point) -> String {
    format!("x={}, y={}", fmt_num(p.x), fmt_num(p.y))
}

pub(super) fn render(s: &Statement) -> String {
    match s {
        Statement::Header { profile, version } => {
            format!("Profile({}, {})", quote(profile), quote(version))
        }
        Statement::Model => "NewModel()".into(),
        Statement::Slope {
            height,
            angle,
            crest,
            toe,
        } => format!(
            "Slope(height={}, angle={}, crest={}, toe={})",
            fmt_num(*height),
            fmt_num(*angle),
            fmt_num(*crest),
            fmt_num(*toe)
        ),
        Statement::SurfacePoint(p) => format!("SurfacePoint({})", xy(p)),
        Statement::Material {
            name,
            unit_weight,
            cohesion,
            friction,
            saturated,
        } => {
            let sat = saturated.map_or(String::new(), |s| {
                format!(", sat_unit_weight={}", fmt_num(s))
            });
            format!(
                "Material(name={}, unit_weight={}, cohesion={}, phi={}{sat})",
                quote(name),
                fmt_num(*unit_weight),
                fmt_num(*cohesion),
                fmt_num(*friction)
            )
        }
        Statement::Boundary { material, point } => {
            format!("Boundary(material={}, {})", quote(material), xy(point))
        }
        Statement::WaterPoint(p) => format!("WaterPoint({})", xy(p)),
        Statement::Method(m) => format!(
            "Method({})",
            match m {
                Method::BishopSimplified => "\"bishop\"",
                Method::Fellenius => "\"fellenius\"",
            }
        ),
        Statement::Slices(n) => format!("Slices({n})"),
        Statement::Grid { x, y, nx, ny } => format!(
            "Grid(xmin={}, xmax={}, ymin={}, ymax={}, nx={nx}, ny={ny})",
            fmt_num(x[0]),
            fmt_num(x[1]),
            fmt_num(y[0]),
            fmt_num(y[1])
        ),
        Statement::Radii(n) => format!("Radii({n})"),
        Statement::Refine(n) => format!("Refine({n})"),
        Statement::Solve => "Solve()".into(),
        Statement::Output => "Report(\"fos\")".into(),
    }
}

fn kw_number(c: &mut Cursor, name: &str) -> Result<f64, ParseError> {
    c.key(name)?;
    c.number()
}

fn kw_integer(c: &mut Cursor, name: &str) -> Result<i64, ParseError> {
    c.key(name)?;
    c.integer()
}

fn xy_args(c: &mut Cursor) -> Result<Point, ParseError> {
    let x = kw_number(c, "x")?;
    c.punct(',')?;
    let y = kw_number(c, "y")?;
    Ok(Point::new(x, y))
}

fn literal(c: &mut Cursor, want: &str) -> Result<(), ParseError> {
    let err = c.error(format!("\"{want}\""));
    match c.string() {
        Ok(s) if s == want => Ok(()),
        _ => Err(err),
    }
}

pub(super) fn parse_line(c: &mut Cursor) -> Result<Statement, ParseError> {
    const HEADS: [&str; 14] = [
        "Profile",
        "NewModel",
        "Slope",
        "SurfacePoint",
        "Material",
        "Boundary",
        "WaterPoint",
        "Method",
        "Slices",
        "Grid",
        "Radii",
        "Refine",
        "Solve",
        "Report",
    ];
    let head = HEADS[c.one_of(&HEADS)?];
    c.punct('(')?;
    let statement = match head {
        "Profile" => {
            literal(c, "hyrcan")?;
            c.punct(',')?;
            Statement::Header {
                profile: "hyrcan".into(),
                version: c.string()?,
            }
        }
        "NewModel" => Statement::Model,
        "Slope" => {
            let height = kw_number(c, "height")?;
            c.punct(',')?;
            let angle = kw_number(c, "angle")?;
            c.punct(',')?;
            let crest = kw_number(c, "crest")?;
            c.punct(',')?;
            let toe = kw_number(c, "toe")?;
            Statement::Slope {
                height,
                angle,
                crest,
                toe,
            }
        }
        "SurfacePoint" => Statement::SurfacePoint(xy_args(c)?),
        "Material" => {
            c.key("name")?;
            let name = c.string()?;
            c.punct(',')?;
            let unit_weight = kw_number(c, "unit_weight")?;
            c.punct(',')?;
            let cohesion = kw_number(c, "cohesion")?;
            c.punct(',')?;
            let friction = kw_number(c, "phi")?;
            let saturated = if c.punct(',').is_ok() {
                Some(kw_number(c, "sat_unit_weight")?)
            } else {
                None
            };
            Statement::Material {
                name,
                unit_weight,
                cohesion,
                friction,
                saturated,
            }
        }
        "Boundary" => {
            c.key("material")?;
            let material = c.string()?;
            c.punct(',')?;
            Statement::Boundary {
                material,
                point: xy_args(c)?,
            }
        }
        "WaterPoint" => Statement::WaterPoint(xy_args(c)?),
        "Method" => {
            let err = c.error("\"bishop\" or \"fellenius\"");
            match c.string().as_deref() {
                Ok("bishop") => Statement::Method(Method::BishopSimplified),
                Ok("fellenius") => Statement::Method(Method::Fellenius),
                _ => return Err(err),
            }
        }
        "Slices" => Statement::Slices(c.integer()?),
        "Grid" => {
            let x0 = kw_number(c, "xmin")?;
            c.punct(',')?;
            let x1 = kw_number(c, "xmax")?;
            c.punct(',')?;
            let y0 = kw_number(c, "ymin")?;
            c.punct(',')?;
            let y1 = kw_number(c, "ymax")?;
            c.punct(',')?;
            let nx = kw_integer(c, "nx")?;
            c.punct(',')?;
            let ny = kw_integer(c, "ny")?;
            Statement::Grid {
                x: [x0, x1],
                y: [y0, y1],
                nx,
                ny,
            }
        }
        "Radii" => Statement::Radii(c.integer()?),
        "Refine" => Statement::Refine(c.integer()?),
        "Solve" => Statement::Solve,
        _ => {
            literal(c, "fos")?;
            Statement::Output
        }
    };
    c.punct(')')?;
    Ok(statement)
}
