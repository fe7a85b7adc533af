// SPDX-License-Identifier: Apache-2.0

//! Number formatting shared by every tabular writer.
//!
//! Reals are printed like C's `%.6g`; undefined measures print as `nan`.

/// Significant digits used for all real-valued output.
pub const SIGNIFICANT_DIGITS: usize = 6;

/// Formats `x` with six significant digits, `%g` style.
pub fn real(x: f64) -> String {
    sig(x, SIGNIFICANT_DIGITS)
}

/// Formats an optional measure, mapping `None` to `nan`.
pub fn measure(x: Option<f64>) -> String {
    match x {
        Some(v) => real(v),
        None => "nan".to_owned(),
    }
}

/// `%.{digits}g` formatting.
pub fn sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "nan".to_owned();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_owned();
    }
    if x == 0.0 {
        return "0".to_owned();
    }

    // Round once in scientific notation to learn the decimal exponent.
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");

    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses a real written by [`real`] or [`measure`]; `nan` maps to `None`.
pub fn parse_measure(s: &str) -> Option<Option<f64>> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("nan") {
        return Some(None);
    }
    s.parse::<f64>().ok().map(Some)
}
