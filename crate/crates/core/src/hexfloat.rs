//! Exact text encoding of `f64` values as C99-style hexadecimal floats.
//!
//! Normal numbers print as `0x1.<13 hex digits>p<exp>`, subnormals as
//! `0x0.<13 hex digits>p-1022`. The parser accepts what the formatter emits
//! (trailing fraction digits may be omitted), so every finite value
//! round-trips bit for bit.

use crate::error::{Error, Result};

const FRAC_BITS: u32 = 52;
const FRAC_MASK: u64 = (1 << FRAC_BITS) - 1;

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> FRAC_BITS) & 0x7ff) as i32;
    let frac = bits & FRAC_MASK;
    match (exp, frac) {
        (0, 0) => format!("{sign}0x0p+0"),
        (0, _) => format!("{sign}0x0.{frac:013x}p-1022"),
        _ => format!("{sign}0x1.{frac:013x}p{:+}", exp - 1023),
    }
}

pub fn parse(s: &str) -> Result<f64> {
    let bad = |msg: &str| Error::Parse {
        line: 0,
        msg: format!("`{s}`: {msg}"),
    };
    let t = s.trim();
    match t {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (negative, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let body = body
        .strip_prefix("0x")
        .or_else(|| body.strip_prefix("0X"))
        .ok_or_else(|| bad("missing 0x prefix"))?;
    let (mantissa, exponent) = body
        .split_once(['p', 'P'])
        .ok_or_else(|| bad("missing binary exponent"))?;
    let exponent: i32 = exponent.parse().map_err(|_| bad("bad exponent"))?;
    let (lead, digits) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if digits.len() > 13 || !digits.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(bad("fraction must have at most 13 hex digits"));
    }
    let frac = if digits.is_empty() {
        0
    } else {
        u64::from_str_radix(digits, 16).map_err(|_| bad("bad fraction"))? << (4 * (13 - digits.len()))
    };
    let sign = if negative { 1u64 << 63 } else { 0 };
    let bits = match lead {
        "1" => {
            if !(-1022..=1023).contains(&exponent) {
                return Err(bad("exponent out of range for a normal number"));
            }
            sign | (((exponent + 1023) as u64) << FRAC_BITS) | frac
        }
        "0" if frac == 0 => sign,
        "0" if exponent == -1022 => sign | frac,
        _ => return Err(bad("non-canonical mantissa")),
    };
    Ok(f64::from_bits(bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(format(1.0), "0x1.0000000000000p+0");
        assert_eq!(format(-2.5), "-0x1.4000000000000p+1");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(-0.0), "-0x0p+0");
        assert_eq!(parse("0x1.8p+1").unwrap(), 3.0);
        assert_eq!(parse("0x1p-1").unwrap(), 0.5);
        assert!(parse("-0x0p+0").unwrap().is_sign_negative());
        assert!(parse("1.5").is_err());
        assert!(parse("0x2.0p+0").is_err());
    }

    #[test]
    fn extremes() {
        for x in [f64::MIN_POSITIVE, f64::MAX, f64::MIN, 5e-324, -5e-324, f64::EPSILON] {
            assert_eq!(parse(&format(x)).unwrap().to_bits(), x.to_bits());
        }
        assert!(parse(&format(f64::NAN)).unwrap().is_nan());
        assert_eq!(parse(&format(f64::NEG_INFINITY)).unwrap(), f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            prop_assert_eq!(parse(&format(x)).unwrap().to_bits(), bits);
        }
    }
}
