//! Locale-free number formatting shared by the JSON and CSV writers.

/// Formats `x` with 17 significant digits and a `.` decimal separator.
///
/// Moderate magnitudes are written in positional notation, everything else in
/// exponent notation; both parse back to the identical `f64`.
pub fn sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..16).contains(&mag) {
        let decimals = (16 - mag).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        format!("{:.16e}", x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_and_has_enough_digits() {
        for &x in &[1.0 / 3.0_f64.sqrt(), -2.5e-9, 123456.789, 1e300, 0.5, -7.0] {
            let s = sig17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits = s
                .split(['e', 'E'])
                .next()
                .unwrap()
                .chars()
                .filter(|c| c.is_ascii_digit())
                .collect::<String>();
            assert!(digits.trim_start_matches('0').len() >= 15, "{s}");
        }
        assert_eq!(sig17(0.0), "0");
    }
}
