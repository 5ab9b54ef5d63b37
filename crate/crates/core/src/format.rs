//! Number formatting shared by every exporter.
//!
//! JSON output carries 17 significant digits (round-trip exact for `f64`),
//! CSV output carries 12.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

pub const JSON_DIGITS: usize = 17;
pub const CSV_DIGITS: usize = 12;

/// Formats `value` with `digits` significant digits in the style of C's
/// `%g`: fixed notation for decimal exponents in `-5..digits`, scientific
/// otherwise, trailing zeros removed.
pub fn sig(value: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if value == 0.0 {
        return if value.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !value.is_finite() {
        return format!("{value}");
    }
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, value)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv(value: f64) -> String {
    sig(value, CSV_DIGITS)
}

/// `f64` wrapper that serializes through `serde_json` with 17 significant
/// digits instead of the shortest round-trip representation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sig17(pub f64);

impl Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(sig(self.0, JSON_DIGITS)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

pub(crate) fn sig17_vec(values: &[f64]) -> Vec<Sig17> {
    values.iter().copied().map(Sig17).collect()
}
