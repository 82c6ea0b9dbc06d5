//! Locale-independent shortest round-trip formatting of doubles.
//!
//! Values in `[1e-5, 1e16)` are written positionally, everything else in
//! scientific notation. Both forms parse back to the identical bit pattern.

use serde::{Deserialize, Deserializer, Serializer};

pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let a = v.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

/// serde adapter storing an `f64` as a decimal string.
pub mod decimal {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_f64(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        parse_f64(&s).ok_or_else(|| serde::de::Error::custom(format!("bad decimal '{s}'")))
    }
}
