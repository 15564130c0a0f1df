//! Number formatting for CSV and JSON artifacts.

/// Formats `x` like C's `%.17g`: 17 significant digits, trailing zeros
/// dropped, scientific notation outside `1e-4 <= |x| < 1e17`.
pub fn sig17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    const P: i32 = 17;
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..P).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
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
    use super::sig17;

    #[test]
    fn matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.1, "0.10000000000000001"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.33333333333333331"),
            (123456.0, "123456"),
            (1e-5, "1.0000000000000001e-05"),
            (2.5e-7, "2.4999999999999999e-07"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (-0.75, "-0.75"),
            (0.0001, "0.0001"),
            (1.0 / 0.6925, "1.4440433212996391"),
        ];
        for (x, want) in cases {
            assert_eq!(sig17(x), want, "{x:e}");
        }
        assert_eq!(sig17(f64::NAN), "nan");
        assert_eq!(sig17(f64::INFINITY), "inf");
    }

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, 0.7155, 1e-300, 6.02e23, 0.183673469387755] {
            assert_eq!(sig17(x).parse::<f64>().unwrap(), x);
        }
    }
}
