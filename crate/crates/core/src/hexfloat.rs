//! IEEE-754 hexadecimal float text, compatible with Python's `float.hex()`
//! and `float.fromhex()` for finite values (`0x1.8000000000000p+1`).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("invalid hex float {0:?}")]
pub struct HexFloatError(pub String);

const MANTISSA_BITS: u32 = 52;
const MANTISSA_MASK: u64 = (1 << MANTISSA_BITS) - 1;
const EXP_BIAS: i32 = 1023;

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp_field = ((bits >> MANTISSA_BITS) & 0x7ff) as i32;
    let mantissa = bits & MANTISSA_MASK;
    if exp_field == 0 && mantissa == 0 {
        return format!("{sign}0x0.0p+0");
    }
    let (lead, exp) = if exp_field == 0 {
        (0, 1 - EXP_BIAS)
    } else {
        (1, exp_field - EXP_BIAS)
    };
    let exp_sign = if exp < 0 { '-' } else { '+' };
    format!("{sign}0x{lead}.{mantissa:013x}p{exp_sign}{}", exp.abs())
}

/// Parses the output of [`format`]. Also accepts shorter or longer
/// fraction digit strings as long as the value is exactly representable.
pub fn parse(s: &str) -> Result<f64, HexFloatError> {
    let err = || HexFloatError(s.to_owned());
    let t = s.trim();
    match t {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (negative, rest) = match t.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let rest = rest
        .strip_prefix("0x")
        .or_else(|| rest.strip_prefix("0X"))
        .ok_or_else(err)?;
    let (mant_str, exp_str) = rest.split_once(['p', 'P']).ok_or_else(err)?;
    let exp: i32 = exp_str.parse().map_err(|_| err())?;
    let (int_str, frac_str) = mant_str.split_once('.').unwrap_or((mant_str, ""));
    if int_str.is_empty() && frac_str.is_empty() {
        return Err(err());
    }

    // Accumulate all hex digits into an integer significand.
    let mut sig: u128 = 0;
    let mut frac_digits = 0i32;
    for (i, c) in int_str.chars().chain(frac_str.chars()).enumerate() {
        let d = c.to_digit(16).ok_or_else(err)? as u128;
        if sig >> 120 != 0 {
            return Err(err());
        }
        sig = (sig << 4) | d;
        if i >= int_str.len() {
            frac_digits += 1;
        }
    }
    let sign_bit = u64::from(negative) << 63;
    if sig == 0 {
        return Ok(f64::from_bits(sign_bit));
    }
    // value = sig * 2^e2
    let mut e2 = exp - 4 * frac_digits;
    while sig >= (1u128 << 53) {
        if sig & 1 != 0 {
            return Err(err());
        }
        sig >>= 1;
        e2 += 1;
    }
    let top = 127 - sig.leading_zeros() as i32;
    let unbiased = e2 + top;
    if unbiased > EXP_BIAS {
        return Err(err());
    }
    let bits = if unbiased >= 1 - EXP_BIAS {
        let mantissa = ((sig << (MANTISSA_BITS as i32 - top)) as u64) & MANTISSA_MASK;
        ((unbiased + EXP_BIAS) as u64) << MANTISSA_BITS | mantissa
    } else {
        // subnormal: value = mantissa * 2^-1074
        let shift = e2 + 1074;
        let mantissa = if shift >= 0 {
            sig << shift
        } else {
            let s = (-shift) as u32;
            if s >= 128 || sig & ((1u128 << s) - 1) != 0 {
                return Err(err());
            }
            sig >> s
        };
        mantissa as u64
    };
    Ok(f64::from_bits(sign_bit | bits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_strings() {
        // Reference values from Python's float.hex().
        assert_eq!(format(1.0), "0x1.0000000000000p+0");
        assert_eq!(format(3.0), "0x1.8000000000000p+1");
        assert_eq!(format(-0.1), "-0x1.999999999999ap-4");
        assert_eq!(format(0.0), "0x0.0p+0");
        assert_eq!(format(-0.0), "-0x0.0p+0");
        assert_eq!(format(f64::from_bits(1)), "0x0.0000000000001p-1022");
        assert_eq!(format(f64::MAX), "0x1.fffffffffffffp+1023");
    }

    #[test]
    fn parses_short_forms() {
        assert_eq!(parse("0x1p+0").unwrap(), 1.0);
        assert_eq!(parse("0x.8p1").unwrap(), 1.0);
        assert_eq!(parse("-0x1.8p-1").unwrap(), -0.75);
        assert!(parse("0x1.8").is_err());
        assert!(parse("1.5").is_err());
        assert!(parse("0xzp0").is_err());
    }

    proptest! {
        #[test]
        fn round_trips_bit_exact(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back = parse(&format(x)).unwrap();
            prop_assert_eq!(back.to_bits(), bits);
        }
    }
}
