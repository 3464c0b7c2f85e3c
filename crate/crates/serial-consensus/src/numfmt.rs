//! printf-`%g` style float formatting for the text artifacts (CSV, matrix
//! dumps, edge lists). Rust's `Display` for floats has no significant-digit
//! control, so this is rolled by hand.

/// Format `x` with `sig` significant digits, trimming trailing zeros and
/// switching to scientific notation when the decimal exponent falls below -4
/// or reaches `sig`, like C's `%.<sig>g`.
pub fn fmt_g(x: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if x == 0.0 {
        // covers -0.0 as well; keeps artifacts free of sign noise
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }

    // Take the decimal exponent from the rounded scientific form so boundary
    // cases (9.99... rounding up a digit) land in the right branch.
    let sci = format!("{:.*e}", sig - 1, x);
    let epos = sci.find('e').expect("scientific format always has an 'e'");
    let exp: i32 = sci[epos + 1..].parse().expect("exponent is an integer");

    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_zeros(&sci[..epos]);
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}
