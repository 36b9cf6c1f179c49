//! Real-number text form used by every exported file: 9 significant digits,
//! `%g`-style, so re-parsing and re-formatting is a fixed point.

/// Formats `x` with 9 significant digits, trimming trailing zeros.
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_owned()), exp)
    }
}

/// Rounds `x` to the value its exported text form parses back to.
pub fn round_real(x: f64) -> f64 {
    fmt_real(x).parse().unwrap_or(x)
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".to_owned()
    } else {
        t.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(fmt_real(0.0), "0");
        assert_eq!(fmt_real(1.0), "1");
        assert_eq!(fmt_real(-2.5), "-2.5");
        assert_eq!(fmt_real(0.1), "0.1");
        assert_eq!(fmt_real(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_real(123456789.0), "123456789");
        assert_eq!(fmt_real(1234567891.0), "1.23456789e9");
        assert_eq!(fmt_real(0.000012345678912), "1.23456789e-5");
        assert_eq!(fmt_real(0.00012345678912), "0.000123456789");
        assert_eq!(fmt_real(1.0 - 1e-7), "0.9999999");
    }

    proptest! {
        #[test]
        fn format_is_a_fixed_point(x in -1.0e12f64..1.0e12) {
            let once = fmt_real(x);
            let twice = fmt_real(once.parse().unwrap());
            prop_assert_eq!(&once, &twice);
        }

        #[test]
        fn nine_digits_of_precision(x in -100.0f64..100.0) {
            let back: f64 = fmt_real(x).parse().unwrap();
            prop_assert!((back - x).abs() <= x.abs() * 1e-8 + 1e-300);
        }
    }
}
