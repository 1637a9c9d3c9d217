//! Number formatting for reproducible output files.

/// Rounds to 9 significant digits.
pub fn sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// 9-significant-digit text; `-0` prints as `0`. Magnitudes outside
/// `[1e-4, 1e9)` use exponent notation.
pub fn fmt9(x: f64) -> String {
    let r = sig9(x);
    if r == 0.0 {
        "0".to_string()
    } else if r.is_finite() && (r.abs() < 1e-4 || r.abs() >= 1e9) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_digits() {
        assert_eq!(fmt9(std::f64::consts::PI), "3.14159265");
        assert_eq!(fmt9(-0.0), "0");
        assert_eq!(fmt9(1.0), "1");
        assert_eq!(fmt9(1.234567891234e-7), "1.23456789e-7");
        assert_eq!(fmt9(0.00125), "0.00125");
        assert_eq!(fmt9(-2.5e12), "-2.5e12");
        assert_eq!(fmt9(f64::NAN), "NaN");
    }
}
