//! Decimal cell values held to 15 significant digits.

use alloc::format;
use alloc::string::String;
use core::fmt;

pub const SIGNIFICANT_DIGITS: usize = 15;

/// A finite number rounded to [`SIGNIFICANT_DIGITS`] on construction, so
/// that printing and re-parsing is the identity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Number(f64);

// Construction rejects NaN and folds -0 into 0, so equality is total and
// agrees with bitwise hashing.
impl Eq for Number {}

impl core::hash::Hash for Number {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

impl Number {
    pub fn new(value: f64) -> Option<Number> {
        if !value.is_finite() {
            return None;
        }
        let (neg, digits, exp) = decompose(value);
        if digits == "0" {
            return Some(Number(0.0));
        }
        let text = format!("{}{}e{}", if neg { "-" } else { "" }, digits_with_point(&digits), exp);
        text.parse::<f64>().ok().filter(|v| v.is_finite()).map(Number)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Parse a plain decimal literal: optional sign, digits with optional
    /// fraction, optional exponent. `inf`, `nan` and hex forms are rejected.
    pub fn parse_decimal(text: &str) -> Option<Number> {
        if !is_decimal_literal(text) {
            return None;
        }
        text.parse::<f64>().ok().and_then(Number::new)
    }
}

impl From<u32> for Number {
    fn from(v: u32) -> Self {
        Number(f64::from(v))
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (neg, digits, exp) = decompose(self.0);
        if digits == "0" {
            return f.write_str("0");
        }
        if neg {
            f.write_str("-")?;
        }
        if (-7..21).contains(&exp) {
            if exp < 0 {
                f.write_str("0.")?;
                for _ in 0..(-exp - 1) {
                    f.write_str("0")?;
                }
                f.write_str(&digits)
            } else {
                let int_len = exp as usize + 1;
                if digits.len() <= int_len {
                    f.write_str(&digits)?;
                    for _ in 0..(int_len - digits.len()) {
                        f.write_str("0")?;
                    }
                    Ok(())
                } else {
                    write!(f, "{}.{}", &digits[..int_len], &digits[int_len..])
                }
            }
        } else {
            write!(f, "{}e{}", digits_with_point(&digits), exp)
        }
    }
}

fn digits_with_point(digits: &str) -> String {
    if digits.len() == 1 {
        String::from(digits)
    } else {
        format!("{}.{}", &digits[..1], &digits[1..])
    }
}

/// Sign, significant digits without trailing zeros, decimal exponent.
fn decompose(value: f64) -> (bool, String, i32) {
    if value == 0.0 {
        return (false, String::from("0"), 0);
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, value.abs());
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    let mut digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    while digits.len() > 1 && digits.ends_with('0') {
        digits.pop();
    }
    (value < 0.0, digits, exp)
}

pub(crate) fn is_decimal_literal(text: &str) -> bool {
    let b = text.as_bytes();
    let mut i = 0;
    if matches!(b.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut mantissa_digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        mantissa_digits += i - frac_start;
    }
    if mantissa_digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if matches!(b.get(i), Some(b'+' | b'-')) {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn show(v: f64) -> String {
        Number::new(v).unwrap().to_string()
    }

    #[test]
    fn formats_plainly_in_the_usual_range() {
        assert_eq!(show(0.0), "0");
        assert_eq!(show(-0.0), "0");
        assert_eq!(show(3.5), "3.5");
        assert_eq!(show(100.0), "100");
        assert_eq!(show(-42.25), "-42.25");
        assert_eq!(show(0.001), "0.001");
        assert_eq!(show(0.1 + 0.2), "0.3");
        assert_eq!(show(1e20), "100000000000000000000");
        assert_eq!(show(1.5e21), "1.5e21");
        assert_eq!(show(1.25e-9), "1.25e-9");
    }

    #[test]
    fn decimal_literals() {
        for ok in ["0", "3.5", "-2", "+2", ".5", "5.", "1e3", "1.5E-2"] {
            assert!(Number::parse_decimal(ok).is_some(), "{ok}");
        }
        for bad in ["", "-", ".", "e3", "1e", "inf", "NaN", " 3", "3 ", "0x10", "1e999"] {
            assert!(Number::parse_decimal(bad).is_none(), "{bad}");
        }
    }

    proptest::proptest! {
        #[test]
        fn print_parse_is_identity(v in proptest::prop_oneof![-1e300f64..1e300f64, -1e-3f64..1e-3f64, proptest::num::f64::SUBNORMAL]) {
            let n = Number::new(v).unwrap();
            let text = n.to_string();
            let back = Number::parse_decimal(&text).unwrap();
            proptest::prop_assert_eq!(back, n);
            proptest::prop_assert_eq!(back.to_string(), text);
        }
    }
}
