//! Display formatting shared by the renderers.

/// `H:MM:SS`, rounded to the nearest second.
pub fn duration_hms(secs: f64) -> String {
    let total = if secs.is_finite() && secs > 0.0 {
        secs.round() as u64
    } else {
        0
    };
    format!(
        "{}:{:02}:{:02}",
        total / 3600,
        (total / 60) % 60,
        total % 60
    )
}

/// Three significant figures in positional notation, e.g. `0.00366`.
/// Values of 1000 and above print as whole numbers.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{:.2}", if x.is_finite() { 0.0 } else { x });
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (2 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new digit (0.0009996 -> 0.00100); re-derive.
    let rounded: f64 = s.parse().unwrap_or(x);
    let m2 = rounded.abs().log10().floor() as i32;
    if rounded != 0.0 && m2 != magnitude {
        let decimals = (2 - m2).max(0) as usize;
        return format!("{rounded:.decimals$}");
    }
    s
}

/// Scientific notation with two decimals and a signed two-digit exponent,
/// e.g. `1.78e-03`.
pub fn sci(x: f64) -> String {
    let s = format!("{x:.2e}");
    let Some((mantissa, exp)) = s.split_once('e') else {
        return s;
    };
    let exp: i32 = exp.parse().unwrap_or(0);
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Two decimals for everyday magnitudes, scientific otherwise.
pub fn human(x: f64) -> String {
    if x == 0.0 || (0.01..10_000.0).contains(&x.abs()) {
        format!("{x:.2}")
    } else {
        sci(x)
    }
}

pub fn percent(fraction: f64) -> String {
    format!("{:.1}%", fraction * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        assert_eq!(duration_hms(1000.0), "0:16:40");
        assert_eq!(duration_hms(0.4), "0:00:00");
        assert_eq!(duration_hms(3725.0), "1:02:05");
    }

    #[test]
    fn significant_figures() {
        assert_eq!(sig3(13.18 * 1000.0 / 3.6e6), "0.00366");
        assert_eq!(sig3(0.0), "0.00");
        assert_eq!(sig3(1.234), "1.23");
        assert_eq!(sig3(0.00099996), "0.00100");
        // at or above 1000 the integer part is kept whole
        assert_eq!(sig3(1234.6), "1235");
    }

    #[test]
    fn scientific() {
        assert_eq!(sci(1.78e-3), "1.78e-03");
        assert_eq!(sci(7.26e-10), "7.26e-10");
        assert_eq!(sci(0.0), "0.00e+00");
        assert_eq!(sci(12345.0), "1.23e+04");
        assert_eq!(human(1.1), "1.10");
        assert_eq!(human(0.004), "4.00e-03");
    }
}
