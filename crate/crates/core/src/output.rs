//! Number formatting shared by the table writers.

/// `x` with `sig` significant digits, fixed notation for moderate
/// magnitudes and scientific notation otherwise, trailing zeros trimmed.
pub(crate) fn fmt_sig(x: f64, sig: usize) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..sig as i32).contains(&exp) {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_sig;

    #[test]
    fn formats() {
        assert_eq!(fmt_sig(4.240527072400182, 6), "4.24053");
        assert_eq!(fmt_sig(0.0174787, 6), "0.0174787");
        assert_eq!(fmt_sig(1.0, 6), "1");
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(1.5e-9, 6), "1.5e-9");
        assert_eq!(fmt_sig(-123456789.0, 6), "-1.23457e8");
        assert_eq!(fmt_sig(999999.7, 6), "1e6");
        assert_eq!(fmt_sig(f64::NAN, 6), "NaN");
    }
}
