//! Float formatting shared by every CSV and JSON artifact.

/// Significant digits kept in written floats.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to 12 significant digits, then prints the shortest string that
/// reads back to the rounded value. Very large or small magnitudes use
/// exponent notation.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap();
    let exponent = rounded.abs().log10().floor();
    if (-5.0..16.0).contains(&exponent) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Rounds to 12 significant digits (the value [`fmt_float`] prints).
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shortest_and_capped() {
        assert_eq!(fmt_float(0.25), "0.25");
        assert_eq!(fmt_float(2.0f64.sqrt()), "1.41421356237");
        assert_eq!(fmt_float(-3.0), "-3");
        assert_eq!(fmt_float(1e-9), "1e-9");
        assert_eq!(fmt_float(0.1 + 0.2), "0.3");
    }
}
