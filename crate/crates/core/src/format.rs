//! Number formatting for human-readable tables.

/// Formats `x` with `digits` significant digits, switching to scientific
/// notation for very large or very small magnitudes. Non-finite values
/// print as `*`.
pub fn sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if !x.is_finite() {
        return "*".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci
        .split_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

/// Fraction as a percentage with one decimal, e.g. `98.9%`.
pub fn percent(x: f64) -> String {
    if x.is_finite() {
        format!("{:.1}%", 100.0 * x)
    } else {
        "*".into()
    }
}

/// p-value with four decimals.
pub fn p_value(p: f64) -> String {
    if p.is_finite() {
        format!("{p:.4}")
    } else {
        "*".into()
    }
}
