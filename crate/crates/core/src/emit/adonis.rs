//! Command-per-line dialect.

use crate::model::{Method, Point};

use super::lexer::{quote, Cursor};
use super::{fmt_num, ParseError, Statement};

pub(super) const STAGE_LABELS: [&str; 12] = [
    "`profile`",
    "`model new`",
    "`geometry`",
    "`material` or `boundary`",
    "`water`",
    "`set method`",
    "`set slices`",
    "`set grid`",
    "`set radii`",
    "`set refine`",
    "`solve`",
    "`output fos`",
];

pub(super) fn render(s: &Statement) -> String {
    match s {
        Statement::Header { profile, version } => {
            format!("profile {profile} version {}", quote(version))
        }
        Statement::Model => "model new".into(),
        Statement::Slope {
            height,
            angle,
            crest,
            toe,
        } => format!(
            "geometry slope height {} angle {} crest {} toe {}",
            fmt_num(*height),
            fmt_num(*angle),
            fmt_num(*crest),
            fmt_num(*toe)
        ),
        Statement::SurfacePoint(p) => format!("geometry point {} {}", fmt_num(p.x), fmt_num(p.y)),
        Statement::Material {
            name,
            unit_weight,
            cohesion,
            friction,
            saturated,
        } => {
            let mut line = format!(
                "material {} unit-weight {} cohesion {} friction {}",
                quote(name),
                fmt_num(*unit_weight),
                fmt_num(*cohesion),
                fmt_num(*friction)
            );
            if let Some(sat) = saturated {
                line.push_str(&format!(" saturated {}", fmt_num(*sat)));
            }
            line
        }
        Statement::Boundary { material, point } => format!(
            "boundary {} point {} {}",
            quote(material),
            fmt_num(point.x),
            fmt_num(point.y)
        ),
        Statement::WaterPoint(p) => format!("water point {} {}", fmt_num(p.x), fmt_num(p.y)),
        Statement::Method(m) => format!(
            "set method {}",
            match m {
                Method::BishopSimplified => "bishop",
                Method::Fellenius => "fellenius",
            }
        ),
        Statement::Slices(n) => format!("set slices {n}"),
        Statement::Grid { x, y, nx, ny } => format!(
            "set grid x {} {} y {} {} count {nx} {ny}",
            fmt_num(x[0]),
            fmt_num(x[1]),
            fmt_num(y[0]),
            fmt_num(y[1])
        ),
        Statement::Radii(n) => format!("set radii {n}"),
        Statement::Refine(n) => format!("set refine {n}"),
        Statement::Solve => "solve".into(),
        Statement::Output => "output fos".into(),
    }
}

fn point(c: &mut Cursor) -> Result<Point, ParseError> {
    Ok(Point::new(c.number()?, c.number()?))
}

pub(super) fn parse_line(c: &mut Cursor) -> Result<Statement, ParseError> {
    const HEADS: [&str; 9] = [
        "profile", "model", "geometry", "material", "boundary", "water", "set", "solve", "output",
    ];
    Ok(match HEADS[c.one_of(&HEADS)?] {
        "profile" => {
            c.word("adonis")?;
            c.word("version")?;
            Statement::Header {
                profile: "adonis".into(),
                version: c.string()?,
            }
        }
        "model" => {
            c.word("new")?;
            Statement::Model
        }
        "geometry" => match c.one_of(&["slope", "point"])? {
            0 => {
                c.word("height")?;
                let height = c.number()?;
                c.word("angle")?;
                let angle = c.number()?;
                c.word("crest")?;
                let crest = c.number()?;
                c.word("toe")?;
                let toe = c.number()?;
                Statement::Slope {
                    height,
                    angle,
                    crest,
                    toe,
                }
            }
            _ => Statement::SurfacePoint(point(c)?),
        },
        "material" => {
            let name = c.string()?;
            c.word("unit-weight")?;
            let unit_weight = c.number()?;
            c.word("cohesion")?;
            let cohesion = c.number()?;
            c.word("friction")?;
            let friction = c.number()?;
            let saturated = if c.peek().is_some() {
                c.word("saturated")?;
                Some(c.number()?)
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
        "boundary" => {
            let material = c.string()?;
            c.word("point")?;
            Statement::Boundary {
                material,
                point: point(c)?,
            }
        }
        "water" => {
            c.word("point")?;
            Statement::WaterPoint(point(c)?)
        }
        "set" => match c.one_of(&["method", "slices", "grid", "radii", "refine"])? {
            0 => {
                c.word("bishop")?;
                Statement::Method(Method::BishopSimplified)
            }
            1 => Statement::Slices(c.integer()?),
            2 => {
                c.word("x")?;
                let x = [c.number()?, c.number()?];
                c.word("y")?;
                let y = [c.number()?, c.number()?];
                c.word("count")?;
                let nx = c.integer()?;
                let ny = c.integer()?;
                Statement::Grid { x, y, nx, ny }
            }
            3 => Statement::Radii(c.integer()?),
            _ => Statement::Refine(c.integer()?),
        },
        "solve" => Statement::Solve,
        _ => {
            c.word("fos")?;
            Statement::Output
        }
    })
}
