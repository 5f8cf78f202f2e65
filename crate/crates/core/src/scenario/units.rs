//! Human-unit quantities in config files ("10 MHz", "-134 dBm/Hz", "500 KB").
//!
//! Everything is converted to SI on load: Hz, W, W/Hz, bits, bits/s, m, s.
//! Bytes are decimal (1 KB = 1000 bytes = 8000 bits).

use serde::Deserialize;

use crate::error::{Result, TcrError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Power,
    PowerDensity,
    Data,
    Rate,
    Length,
    Cycles,
    Unitless,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Frequency => "frequency",
            Dimension::Power => "power",
            Dimension::PowerDensity => "power spectral density",
            Dimension::Data => "data size",
            Dimension::Rate => "rate",
            Dimension::Length => "length",
            Dimension::Cycles => "cycles",
            Dimension::Unitless => "unitless",
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts `value unit` to SI, returning the unit's dimension.
fn convert(value: f64, unit: &str) -> Option<(f64, Dimension)> {
    use Dimension::*;
    let out = match unit {
        "Hz" => (value, Frequency),
        "kHz" => (value * 1e3, Frequency),
        "MHz" => (value * 1e6, Frequency),
        "GHz" => (value * 1e9, Frequency),
        "W" => (value, Power),
        "mW" => (value * 1e-3, Power),
        "dBm" => (dbm_to_watts(value), Power),
        "dBW" => (10f64.powf(value / 10.0), Power),
        "W/Hz" => (value, PowerDensity),
        "dBm/Hz" => (dbm_to_watts(value), PowerDensity),
        "bit" | "bits" => (value, Data),
        "kbit" => (value * 1e3, Data),
        "Mbit" => (value * 1e6, Data),
        "B" => (value * 8.0, Data),
        "KB" | "kB" => (value * 8e3, Data),
        "MB" => (value * 8e6, Data),
        "GB" => (value * 8e9, Data),
        "bps" | "bit/s" => (value, Rate),
        "kbps" => (value * 1e3, Rate),
        "Mbps" => (value * 1e6, Rate),
        "Gbps" => (value * 1e9, Rate),
        "m" => (value, Length),
        "km" => (value * 1e3, Length),
        "cycles" => (value, Cycles),
        "Mcycles" => (value * 1e6, Cycles),
        "Gcycles" => (value * 1e9, Cycles),
        _ => return None,
    };
    Some(out)
}

/// Parses `"<number> <unit>"` (whitespace optional) into SI units of the
/// expected dimension. A bare number is taken as already in SI.
pub fn parse_quantity(text: &str, expected: Dimension) -> Result<f64> {
    let text = text.trim();
    let split = text
        .char_indices()
        .find(|&(i, c)| c.is_ascii_alphabetic() && !(matches!(c, 'e' | 'E') && is_exponent(text, i)))
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    let (num, unit) = text.split_at(split);
    let value: f64 =
        num.trim().parse().map_err(|_| TcrError::InvalidConfig(format!("cannot parse number in quantity {text:?}")))?;
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok(value);
    }
    match convert(value, unit) {
        Some((si, dim)) if dim == expected => Ok(si),
        Some((_, dim)) => Err(TcrError::InvalidConfig(format!(
            "quantity {text:?} is a {}, expected a {}",
            dim.name(),
            expected.name()
        ))),
        None => Err(TcrError::InvalidConfig(format!("unknown unit {unit:?} in {text:?}"))),
    }
}

// `1e-3 MHz`: the `e` belongs to the number when followed by a digit or sign
// and preceded by a digit.
fn is_exponent(text: &str, i: usize) -> bool {
    let bytes = text.as_bytes();
    let prev_digit = i > 0 && (bytes[i - 1].is_ascii_digit() || bytes[i - 1] == b'.');
    let next = bytes.get(i + 1).copied();
    prev_digit && matches!(next, Some(c) if c.is_ascii_digit() || c == b'-' || c == b'+')
}

/// A config value that is either a bare SI number or a string with a unit.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

impl Quantity {
    pub fn to_si(&self, expected: Dimension) -> Result<f64> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Text(s) => parse_quantity(s, expected),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_common_units() {
        assert_eq!(parse_quantity("10 MHz", Dimension::Frequency).unwrap(), 10e6);
        assert_eq!(parse_quantity("20GHz", Dimension::Frequency).unwrap(), 20e9);
        assert_eq!(parse_quantity("500 KB", Dimension::Data).unwrap(), 4e6);
        assert_eq!(parse_quantity("8 MB", Dimension::Data).unwrap(), 6.4e7);
        assert_eq!(parse_quantity("15 Mbps", Dimension::Rate).unwrap(), 15e6);
        assert_eq!(parse_quantity("0.2 W", Dimension::Power).unwrap(), 0.2);
        assert_eq!(parse_quantity("1e-3 MHz", Dimension::Frequency).unwrap(), 1e3);
        assert_eq!(parse_quantity("3.5", Dimension::Power).unwrap(), 3.5);
    }

    #[test]
    fn dbm_density() {
        let w = parse_quantity("-134 dBm/Hz", Dimension::PowerDensity).unwrap();
        assert!((w / 3.981_071_705_534_97e-17 - 1.0).abs() < 1e-12);
        assert!((parse_quantity("30 dBm", Dimension::Power).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_wrong_dimension_and_unknown_units() {
        assert!(parse_quantity("10 MHz", Dimension::Power).is_err());
        assert!(parse_quantity("10 furlongs", Dimension::Length).is_err());
        assert!(parse_quantity("abc", Dimension::Length).is_err());
    }
}
