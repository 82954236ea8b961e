//! Script emitters and round-trip parsers for the two target dialects.
//!
//! Both dialects share one statement sequence (header, model, geometry,
//! materials top-down with their base boundaries, water table, analysis
//! settings, solve, output) and differ only in line syntax. The normative
//! grammars ship as `profiles/*.grammar`.

mod adonis;
mod hyrcan;
mod lexer;
mod lint;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    canonical_hash, round_sig, validate, AnalysisConfig, CenterGrid, MaterialLayer, Method, Point,
    Polyline, SearchConfig, SlopeGeometry, SlopeProblem, Target, ValidationReport,
};

pub use lint::{lint, LintWarning};

pub const EMITTER_VERSION: &str = concat!("slopesim-emit ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("line {line}, column {column}: expected {expected}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub expected: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmitError {
    #[error("unknown target profile `{0}`")]
    UnknownProfile(String),
    #[error("{field_path} is not supported by {}", profile.as_str())]
    UnsupportedFeature { field_path: String, profile: Target },
    #[error("invalid problem: {0}")]
    InvalidProblem(ValidationReport),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub supports_water_table: bool,
    pub supports_multilayer: bool,
    pub method_set: Vec<Method>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetProfile {
    pub profile_id: Target,
    pub grammar_version: String,
    pub capabilities: Capabilities,
}

impl TargetProfile {
    pub fn adonis() -> Self {
        Self {
            profile_id: Target::AdonisProfile,
            grammar_version: "1.0".into(),
            capabilities: Capabilities {
                supports_water_table: true,
                supports_multilayer: true,
                method_set: vec![Method::BishopSimplified],
            },
        }
    }

    pub fn hyrcan() -> Self {
        Self {
            profile_id: Target::HyrcanProfile,
            grammar_version: "1.0".into(),
            capabilities: Capabilities {
                supports_water_table: true,
                supports_multilayer: true,
                method_set: vec![Method::BishopSimplified, Method::Fellenius],
            },
        }
    }

    pub fn all() -> Vec<Self> {
        vec![Self::adonis(), Self::hyrcan()]
    }

    pub fn for_target(target: Target) -> Result<Self, EmitError> {
        match target {
            Target::AdonisProfile => Ok(Self::adonis()),
            Target::HyrcanProfile => Ok(Self::hyrcan()),
            Target::None => Err(EmitError::UnknownProfile(target.as_str().into())),
        }
    }

    /// Looks a profile up by enum spelling or short name.
    pub fn from_id(id: &str) -> Result<Self, EmitError> {
        Target::parse(id)
            .ok_or_else(|| EmitError::UnknownProfile(id.to_string()))
            .and_then(Self::for_target)
    }

    /// The shipped grammar document.
    pub fn grammar(&self) -> &'static str {
        match self.profile_id {
            Target::AdonisProfile => include_str!("../../profiles/adonis.grammar"),
            _ => include_str!("../../profiles/hyrcan.grammar"),
        }
    }

    fn display_name(&self) -> &'static str {
        match self.profile_id {
            Target::AdonisProfile => "ADONIS-profile",
            _ => "HYRCAN-profile",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmittedScript {
    pub target: Target,
    pub text: String,
    pub problem_hash: String,
    pub emitter_version: String,
}

/// One script statement, independent of dialect.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Statement {
    Header {
        profile: String,
        version: String,
    },
    Model,
    Slope {
        height: f64,
        angle: f64,
        crest: f64,
        toe: f64,
    },
    SurfacePoint(Point),
    Material {
        name: String,
        unit_weight: f64,
        cohesion: f64,
        friction: f64,
        saturated: Option<f64>,
    },
    Boundary {
        material: String,
        point: Point,
    },
    WaterPoint(Point),
    Method(Method),
    Slices(i64),
    Grid {
        x: [f64; 2],
        y: [f64; 2],
        nx: i64,
        ny: i64,
    },
    Radii(i64),
    Refine(i64),
    Solve,
    Output,
}

impl Statement {
    /// Position in the fixed statement order.
    fn stage(&self) -> usize {
        match self {
            Statement::Header { .. } => 0,
            Statement::Model => 1,
            Statement::Slope { .. } | Statement::SurfacePoint(_) => 2,
            Statement::Material { .. } | Statement::Boundary { .. } => 3,
            Statement::WaterPoint(_) => 4,
            Statement::Method(_) => 5,
            Statement::Slices(_) => 6,
            Statement::Grid { .. } => 7,
            Statement::Radii(_) => 8,
            Statement::Refine(_) => 9,
            Statement::Solve => 10,
            Statement::Output => 11,
        }
    }
}

const LAST_STAGE: usize = 11;
const WATER_STAGE: usize = 4;

/// Number text with 9 significant digits, shortest form.
pub(crate) fn fmt_num(x: f64) -> String {
    format!("{}", round_sig(x, 9))
}

fn check_capabilities(problem: &SlopeProblem, profile: &TargetProfile) -> Result<(), EmitError> {
    let caps = &profile.capabilities;
    let unsupported = |field_path: &str| EmitError::UnsupportedFeature {
        field_path: field_path.into(),
        profile: profile.profile_id,
    };
    if problem.water_table.is_some() && !caps.supports_water_table {
        return Err(unsupported("water_table"));
    }
    if problem.layers.len() > 1 && !caps.supports_multilayer {
        return Err(unsupported("layers"));
    }
    if !caps.method_set.contains(&problem.analysis.method) {
        return Err(unsupported("analysis.method"));
    }
    Ok(())
}

fn statements(problem: &SlopeProblem, profile: &TargetProfile) -> Vec<Statement> {
    let mut out = vec![
        Statement::Header {
            profile: match profile.profile_id {
                Target::AdonisProfile => "adonis".into(),
                _ => "hyrcan".into(),
            },
            version: profile.grammar_version.clone(),
        },
        Statement::Model,
    ];
    match &problem.geometry {
        SlopeGeometry::Parametric {
            height,
            slope_angle,
            crest_extent,
            toe_extent,
        } => out.push(Statement::Slope {
            height: *height,
            angle: *slope_angle,
            crest: *crest_extent,
            toe: *toe_extent,
        }),
        SlopeGeometry::Polyline { surface } => {
            out.extend(surface.points().iter().map(|p| Statement::SurfacePoint(*p)))
        }
    }
    for layer in &problem.layers {
        out.push(Statement::Material {
            name: layer.name.clone(),
            unit_weight: layer.unit_weight,
            cohesion: layer.cohesion,
            friction: layer.friction_angle,
            saturated: layer.saturated_unit_weight,
        });
        if let Some(base) = &layer.base {
            out.extend(base.points().iter().map(|p| Statement::Boundary {
                material: layer.name.clone(),
                point: *p,
            }));
        }
    }
    if let Some(wt) = &problem.water_table {
        out.extend(wt.points().iter().map(|p| Statement::WaterPoint(*p)));
    }
    let a = &problem.analysis;
    let g = &a.search.center_grid;
    out.extend([
        Statement::Method(a.method),
        Statement::Slices(a.slice_count),
        Statement::Grid {
            x: g.x_range,
            y: g.y_range,
            nx: g.nx,
            ny: g.ny,
        },
        Statement::Radii(a.search.radius_samples),
        Statement::Refine(a.search.refine_rounds),
        Statement::Solve,
        Statement::Output,
    ]);
    out
}

/// Compiles a valid problem into a script for `profile`.
pub fn emit(problem: &SlopeProblem, profile: &TargetProfile) -> Result<EmittedScript, EmitError> {
    let report = validate(problem);
    if !report.is_empty() {
        return Err(EmitError::InvalidProblem(report));
    }
    check_capabilities(problem, profile)?;
    let problem_hash = canonical_hash(problem).map_err(|_| EmitError::InvalidProblem(report))?;
    let mut text = format!(
        "# {} slope stability script\n# problem-hash: {problem_hash}\n# emitter: {EMITTER_VERSION}\n",
        profile.display_name()
    );
    for s in statements(problem, profile) {
        let line = match profile.profile_id {
            Target::AdonisProfile => adonis::render(&s),
            _ => hyrcan::render(&s),
        };
        text.push_str(&line);
        text.push('\n');
    }
    Ok(EmittedScript {
        target: profile.profile_id,
        text,
        problem_hash,
        emitter_version: EMITTER_VERSION.into(),
    })
}

#[derive(Default)]
struct Builder {
    stage: Option<usize>,
    slope: Option<(f64, f64, f64, f64)>,
    surface: Vec<Point>,
    layers: Vec<MaterialLayer>,
    bases: Vec<Vec<Point>>,
    water: Vec<Point>,
    method: Option<Method>,
    slices: i64,
    grid: Option<CenterGrid>,
    radii: i64,
    refine: i64,
}

fn stage_label(profile: Target, stage: usize) -> &'static str {
    match profile {
        Target::AdonisProfile => adonis::STAGE_LABELS[stage],
        _ => hyrcan::STAGE_LABELS[stage],
    }
}

impl Builder {
    fn expected_after(&self, profile: Target) -> String {
        let mut options = Vec::new();
        let start = self.stage.map_or(0, |s| s);
        for s in start..=LAST_STAGE {
            let repeatable = matches!(s, 2..=4);
            if Some(s) == self.stage && !repeatable {
                continue;
            }
            if s == 2 && self.slope.is_some() {
                continue;
            }
            options.push(stage_label(profile, s));
            let required_here = Some(s) != self.stage && s != WATER_STAGE;
            let geometry_incomplete = s == 2 && self.slope.is_none() && self.surface.len() < 2;
            if required_here || geometry_incomplete {
                break;
            }
        }
        match options.len() {
            0 => "end of script".into(),
            1 => options[0].into(),
            _ => {
                let (last, rest) = options.split_last().expect("non-empty");
                format!("{} or {last}", rest.join(", "))
            }
        }
    }

    fn push(
        &mut self,
        st: Statement,
        line: usize,
        profile: &TargetProfile,
    ) -> Result<(), ParseError> {
        let at = |expected: String| ParseError {
            line,
            column: 1,
            expected,
        };
        let s = st.stage();
        let cur = self.stage;
        let allowed = match cur {
            None => s == 0,
            Some(c) if s == c => match &st {
                Statement::Slope { .. } => false,
                Statement::SurfacePoint(_) => self.slope.is_none(),
                Statement::Boundary { .. }
                | Statement::Material { .. }
                | Statement::WaterPoint(_) => true,
                _ => false,
            },
            Some(c) if s > c => {
                let geometry_ok = c != 2 || self.slope.is_some() || self.surface.len() >= 2;
                let skipped_required = (c + 1..s).any(|k| k != WATER_STAGE);
                let boundary_first = matches!(st, Statement::Boundary { .. });
                geometry_ok && !skipped_required && !boundary_first
            }
            Some(_) => false,
        };
        if !allowed {
            return Err(at(self.expected_after(profile.profile_id)));
        }
        self.stage = Some(s);
        match st {
            Statement::Header {
                profile: name,
                version,
            } => {
                let want = if profile.profile_id == Target::AdonisProfile {
                    "adonis"
                } else {
                    "hyrcan"
                };
                if name != want {
                    return Err(at(format!("profile `{want}`")));
                }
                if version != profile.grammar_version {
                    return Err(at(format!(
                        "grammar version \"{}\"",
                        profile.grammar_version
                    )));
                }
            }
            Statement::Model | Statement::Solve | Statement::Output => {}
            Statement::Slope {
                height,
                angle,
                crest,
                toe,
            } => {
                if !self.surface.is_empty() {
                    return Err(at(stage_label(profile.profile_id, 2).into()));
                }
                self.slope = Some((height, angle, crest, toe));
            }
            Statement::SurfacePoint(p) => self.surface.push(p),
            Statement::Material {
                name,
                unit_weight,
                cohesion,
                friction,
                saturated,
            } => {
                self.layers.push(MaterialLayer {
                    name,
                    unit_weight,
                    cohesion,
                    friction_angle: friction,
                    saturated_unit_weight: saturated,
                    base: None,
                });
                self.bases.push(Vec::new());
            }
            Statement::Boundary { material, point } => {
                let current = &self.layers.last().expect("material precedes boundary").name;
                if *current != material {
                    return Err(at(format!(
                        "boundary for material {}",
                        lexer::quote(current)
                    )));
                }
                self.bases
                    .last_mut()
                    .expect("parallel to layers")
                    .push(point);
            }
            Statement::WaterPoint(p) => self.water.push(p),
            Statement::Method(m) => {
                if !profile.capabilities.method_set.contains(&m) {
                    return Err(at("supported method".into()));
                }
                self.method = Some(m);
            }
            Statement::Slices(n) => self.slices = n,
            Statement::Grid { x, y, nx, ny } => {
                self.grid = Some(CenterGrid {
                    x_range: x,
                    y_range: y,
                    nx,
                    ny,
                })
            }
            Statement::Radii(n) => self.radii = n,
            Statement::Refine(n) => self.refine = n,
        }
        Ok(())
    }

    fn finish(self, profile: &TargetProfile, end_line: usize) -> Result<SlopeProblem, ParseError> {
        if self.stage != Some(LAST_STAGE) {
            return Err(ParseError {
                line: end_line,
                column: 1,
                expected: self.expected_after(profile.profile_id),
            });
        }
        let geometry = match self.slope {
            Some((height, slope_angle, crest_extent, toe_extent)) => SlopeGeometry::Parametric {
                height,
                slope_angle,
                crest_extent,
                toe_extent,
            },
            None => SlopeGeometry::Polyline {
                surface: Polyline::new(self.surface),
            },
        };
        let layers = self
            .layers
            .into_iter()
            .zip(self.bases)
            .map(|(mut l, b)| {
                if !b.is_empty() {
                    l.base = Some(Polyline::new(b));
                }
                l
            })
            .collect();
        Ok(SlopeProblem {
            geometry,
            layers,
            water_table: (!self.water.is_empty()).then(|| Polyline::new(self.water)),
            analysis: AnalysisConfig {
                method: self.method.expect("method stage passed"),
                slice_count: self.slices,
                target: profile.profile_id,
                search: SearchConfig {
                    center_grid: self.grid.expect("grid stage passed"),
                    radius_samples: self.radii,
                    refine_rounds: self.refine,
                },
            },
            provenance: Vec::new(),
        })
    }
}

/// Parses a script in `profile`'s dialect back into a problem. Provenance is
/// not reconstructed and the target is set to the profile.
pub fn parse_script(text: &str, profile: &TargetProfile) -> Result<SlopeProblem, ParseError> {
    let mut builder = Builder::default();
    let mut last_line = 0;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        last_line = line_no;
        let tokens = lexer::tokenize(line, line_no)?;
        if tokens.is_empty() {
            continue;
        }
        let mut cursor = lexer::Cursor::new(&tokens, line_no, line.chars().count());
        let statement = match profile.profile_id {
            Target::AdonisProfile => adonis::parse_line(&mut cursor)?,
            _ => hyrcan::parse_line(&mut cursor)?,
        };
        cursor.end()?;
        builder.push(statement, line_no, profile)?;
    }
    builder.finish(profile, last_line + 1)
}
