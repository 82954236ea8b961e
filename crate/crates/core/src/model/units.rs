//! Unit tags accepted on input and their conversion to canonical units
//! (m, kN/m³, kPa, degrees).

use super::ModelError;

pub const FT_TO_M: f64 = 0.3048;
pub const PCF_TO_KN_M3: f64 = 0.157087;
pub const PSF_TO_KPA: f64 = 0.0478803;

/// Physical dimension of a numeric problem field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    UnitWeight,
    Stress,
    Angle,
}

impl Dimension {
    pub fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::Length => "m",
            Dimension::UnitWeight => "kN/m3",
            Dimension::Stress => "kPa",
            Dimension::Angle => "deg",
        }
    }
}

/// Multiplicative factor from `unit` to the canonical unit of `dim`, or
/// `None` when the tag is not recognized for that dimension.
pub fn factor(unit: &str, dim: Dimension) -> Option<f64> {
    let tag = unit.trim().to_ascii_lowercase().replace(' ', "");
    let f = match dim {
        Dimension::Length => match tag.as_str() {
            "m" | "meter" | "meters" | "metre" | "metres" => 1.0,
            "ft" | "foot" | "feet" | "'" => FT_TO_M,
            _ => return None,
        },
        Dimension::UnitWeight => match tag.as_str() {
            "kn/m3" | "kn/m^3" | "kn/m³" | "kn/cu.m" => 1.0,
            "pcf" | "lb/ft3" | "lb/ft^3" | "lb/ft³" => PCF_TO_KN_M3,
            _ => return None,
        },
        Dimension::Stress => match tag.as_str() {
            "kpa" | "kn/m2" | "kn/m^2" | "kn/m²" => 1.0,
            "psf" | "lb/ft2" | "lb/ft^2" | "lb/ft²" => PSF_TO_KPA,
            _ => return None,
        },
        Dimension::Angle => match tag.as_str() {
            "deg" | "degree" | "degrees" | "°" => 1.0,
            "rad" | "radian" | "radians" => 180.0 / std::f64::consts::PI,
            _ => return None,
        },
    };
    Some(f)
}

/// Converts `value` tagged with `unit` to canonical units.
pub fn to_canonical(
    value: f64,
    unit: &str,
    dim: Dimension,
    field_path: &str,
) -> Result<f64, ModelError> {
    let f = factor(unit, dim).ok_or_else(|| ModelError::UnknownUnit {
        field_path: field_path.to_string(),
        unit: unit.to_string(),
    })?;
    if f == 1.0 {
        Ok(value)
    } else if dim == Dimension::Angle {
        Ok(value.to_degrees())
    } else {
        Ok(value * f)
    }
}
