/// Renders `x` with 9 significant digits in the style of C's `%.9g`:
/// fixed notation for decimal exponents in `-5..9`, scientific otherwise,
/// trailing zeros removed.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
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
    use super::sig9;

    #[test]
    fn matches_printf_g9() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(1.5e6), "1500000");
        assert_eq!(sig9(0.17046016666666666), "0.170460167");
        assert_eq!(sig9(2.0), "2");
        assert_eq!(sig9(-0.25), "-0.25");
        assert_eq!(sig9(1e-6), "1e-6");
        assert_eq!(sig9(123456789.4), "123456789");
        assert_eq!(sig9(1234567894.0), "1.23456789e9");
        assert_eq!(sig9(9.999999999e-5), "0.0001");
        assert_eq!(sig9(f64::INFINITY), "inf");
    }
}
