//! Physical constants and unit conversion.
//!
//! Everything inside the crate is SI. Units other than SI only appear when
//! reading inputs or writing reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Newton's constant, m³ kg⁻¹ s⁻².
    pub g: f64,
    /// Reduced Planck constant, J s.
    pub hbar: f64,
    /// Speed of light, m s⁻¹.
    pub c: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            g: 6.674e-11,
            hbar: 1.0546e-34,
            c: 2.998e8,
        }
    }
}

impl PhysicalConstants {
    pub fn new(g: f64, hbar: f64, c: f64) -> Result<Self> {
        let pc = PhysicalConstants { g, hbar, c };
        pc.validate()?;
        Ok(pc)
    }

    /// G = ħ = c = 1.
    pub fn dimensionless() -> Self {
        PhysicalConstants {
            g: 1.0,
            hbar: 1.0,
            c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("G", self.g), ("hbar", self.hbar), ("c", self.c)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("constant {name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// The energy ħc / (1 cm) in joules, the reporting unit for Δ.
    pub fn hbar_c_per_cm(&self) -> f64 {
        self.hbar * self.c / 0.01
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    Meter,
    Centimeter,
    Kilogram,
    Gram,
    Second,
    Joule,
    Dimensionless,
}

impl Unit {
    /// SI unit with the same dimension, and the factor taking `self` to it.
    fn si(self) -> (Unit, f64) {
        match self {
            Unit::Meter => (Unit::Meter, 1.0),
            Unit::Centimeter => (Unit::Meter, 1e-2),
            Unit::Kilogram => (Unit::Kilogram, 1.0),
            Unit::Gram => (Unit::Kilogram, 1e-3),
            Unit::Second => (Unit::Second, 1.0),
            Unit::Joule => (Unit::Joule, 1.0),
            Unit::Dimensionless => (Unit::Dimensionless, 1.0),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Unit::Meter => "m",
            Unit::Centimeter => "cm",
            Unit::Kilogram => "kg",
            Unit::Gram => "g",
            Unit::Second => "s",
            Unit::Joule => "J",
            Unit::Dimensionless => "dimensionless",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "m" => Unit::Meter,
            "cm" => Unit::Centimeter,
            "kg" => Unit::Kilogram,
            "g" => Unit::Gram,
            "s" => Unit::Second,
            "J" => Unit::Joule,
            "dimensionless" | "1" | "" => Unit::Dimensionless,
            other => return Err(Error::invalid(format!("unknown unit tag {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: Unit,
}

impl Quantity {
    pub fn new(value: f64, unit: Unit) -> Self {
        Quantity { value, unit }
    }

    /// Parses `"1e-3 cm"` or a bare number (dimensionless).
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let num = parts
            .next()
            .ok_or_else(|| Error::invalid("empty quantity"))?;
        let value: f64 = num
            .parse()
            .map_err(|_| Error::invalid(format!("not a number: {num:?}")))?;
        let unit = match parts.next() {
            Some(tag) => tag.parse()?,
            None => Unit::Dimensionless,
        };
        if parts.next().is_some() {
            return Err(Error::invalid(format!("trailing input in quantity {s:?}")));
        }
        Ok(Quantity { value, unit })
    }
}

pub fn to_si(q: Quantity) -> Quantity {
    let (unit, factor) = q.unit.si();
    Quantity {
        value: q.value * factor,
        unit,
    }
}

/// Expresses an SI quantity in `target`, which must share its dimension.
pub fn from_si(q: Quantity, target: Unit) -> Result<Quantity> {
    let (base, factor) = target.si();
    if base != q.unit {
        return Err(Error::invalid(format!("cannot express {} in {}", q.unit, target)));
    }
    Ok(Quantity {
        value: q.value / factor,
        unit: target,
    })
}

/// Parses a value with an optional unit tag and returns it in SI.
pub fn parse_si(s: &str) -> Result<f64> {
    Ok(to_si(Quantity::parse(s)?).value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn conversions() {
        assert_eq!(to_si(Quantity::new(1.0, Unit::Centimeter)), Quantity::new(0.01, Unit::Meter));
        assert_eq!(to_si(Quantity::new(5e-12, Unit::Kilogram)), Quantity::new(5e-12, Unit::Kilogram));
        assert_eq!(to_si(Quantity::new(1.0, Unit::Gram)), Quantity::new(1e-3, Unit::Kilogram));
    }

    #[test]
    fn unknown_unit_is_rejected() {
        assert!("furlong".parse::<Unit>().is_err());
        assert!(Quantity::parse("3 parsec").is_err());
        assert!(from_si(Quantity::new(1.0, Unit::Meter), Unit::Gram).is_err());
    }

    #[test]
    fn parse_with_units() {
        assert_eq!(parse_si("1e-3 cm").unwrap(), 1e-5);
        assert_eq!(parse_si("2.5").unwrap(), 2.5);
    }

    #[test]
    fn constants_must_be_positive() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalConstants::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn round_trip_within_one_ulp(v in -1e30f64..1e30, idx in 0usize..4) {
            let unit = [Unit::Centimeter, Unit::Gram, Unit::Meter, Unit::Kilogram][idx];
            let back = from_si(to_si(Quantity::new(v, unit)), unit).unwrap();
            let ulp = f64::EPSILON * v.abs();
            prop_assert!((back.value - v).abs() <= ulp, "{} vs {}", back.value, v);
        }
    }
}
