//! Small shared helpers: unit constants and stable float formatting.

/// Meters per statute mile.
pub const METERS_PER_MILE: f64 = 1609.344;

/// Seconds per hour.
pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Format a float with 6 significant digits, byte-stable across runs.
///
/// Values that fit a plain decimal representation use one; extreme
/// magnitudes fall back to scientific notation.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..7).contains(&mag) {
        let prec = (5 - mag).max(0) as usize;
        let s = format!("{x:.prec$}");
        trim_trailing_zeros(&s)
    } else {
        format!("{x:.5e}")
    }
}

fn trim_trailing_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// Round to `digits` significant digits (used for leaderboard tie-breaks).
pub fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (x * factor).round() / factor
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_basic() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(13.4112), "13.4112");
        assert_eq!(fmt_sig6(1234.5678), "1234.57");
        assert_eq!(fmt_sig6(-0.4), "-0.4");
        assert_eq!(fmt_sig6(1_000_000.4), "1000000");
    }

    #[test]
    fn sig6_extremes_use_scientific() {
        assert!(fmt_sig6(1e12).contains('e'));
        assert!(fmt_sig6(1e-9).contains('e'));
    }

    #[test]
    fn round_sig_digits() {
        assert_eq!(round_sig(123.456, 4), 123.5);
        assert_eq!(round_sig(0.0123456, 3), 0.0123);
    }
}
