//! Number formatting for CSV output.

/// Formats `v` with `digits` significant digits, `%g` style: fixed notation
/// for moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn format_sig(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // round first so that e.g. 9.9999996 -> 10.0000 picks the right exponent
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        format!("{m}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::format_sig;

    #[test]
    fn significant_digits() {
        assert_eq!(format_sig(1.6980454934, 6), "1.69805");
        assert_eq!(format_sig(127.98619914, 6), "127.986");
        assert_eq!(format_sig(0.5, 6), "0.5");
        assert_eq!(format_sig(2000.0, 6), "2000");
        assert_eq!(format_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(format_sig(-0.000012345678, 3), "-1.23e-5");
        assert_eq!(format_sig(9.9999996, 6), "10");
        assert_eq!(format_sig(0.0, 6), "0");
    }
}
