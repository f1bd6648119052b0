use std::cmp::Ordering;

use num_bigint::BigUint;

use super::BucketScheme;
use crate::error::{Error, Result};

/// Within this distance of a half-integer the float logarithm cannot be
/// trusted to pick the right side, so the decision is made exactly.
const TIE_WINDOW: f64 = 1e-9;

/// Bucket label of a positive value: its logarithm rounded half away from
/// zero, clamped to the scheme's label range.
pub fn bucketize(value: f64, scheme: &BucketScheme) -> Result<i32> {
    if value.is_nan() || value <= 0.0 {
        return Err(Error::NonPositive(value));
    }
    if value.is_infinite() {
        return Ok(scheme.max_label());
    }
    let log = scheme.log(value);
    let lower = log.floor();
    let mut rounded = log.round() as i64;
    if (log - lower - 0.5).abs() < TIE_WINDOW {
        let k = lower as i64;
        // Ties at the clamp edges resolve to the edge label either way.
        if k >= scheme.min_exp as i64 && k < scheme.max_label() as i64 {
            rounded = exact_round_near_half(value, scheme.base, k);
        }
    }
    Ok(scheme.clamp(rounded))
}

/// Label for a value already expressed as a logarithm in the scheme's base.
pub fn label_for_log(log: f64, scheme: &BucketScheme) -> i32 {
    if log.is_nan() {
        return scheme.min_exp;
    }
    let r = log.round();
    if r >= i64::MAX as f64 {
        scheme.max_label()
    } else if r <= i64::MIN as f64 {
        scheme.min_exp
    } else {
        scheme.clamp(r as i64)
    }
}

/// Rounds `log_base(value)` given that it lies near `k + 1/2`, by comparing
/// `value^2` against `base^(2k + 1)` in exact integer arithmetic.
fn exact_round_near_half(value: f64, base: u32, k: i64) -> i64 {
    let (mantissa, exp2) = decompose(value);
    let m2 = BigUint::from(mantissa) * BigUint::from(mantissa);
    let power = 2 * k + 1;
    let b = BigUint::from(base);

    let mut lhs = m2;
    let mut rhs = BigUint::from(1u32);
    if power >= 0 {
        rhs *= b.pow(power as u32);
    } else {
        lhs *= b.pow((-power) as u32);
    }
    if exp2 >= 0 {
        lhs <<= (2 * exp2) as usize;
    } else {
        rhs <<= (-2 * exp2) as usize;
    }

    match lhs.cmp(&rhs) {
        Ordering::Greater => k + 1,
        Ordering::Less => k,
        // Exactly on the half-way point: away from zero.
        Ordering::Equal => {
            if k >= 0 {
                k + 1
            } else {
                k
            }
        }
    }
}

/// Splits a positive finite float into `mantissa * 2^exp`.
fn decompose(value: f64) -> (u64, i64) {
    let bits = value.to_bits();
    let exponent = ((bits >> 52) & 0x7ff) as i64;
    let fraction = bits & ((1u64 << 52) - 1);
    if exponent == 0 {
        (fraction, -1074)
    } else {
        (fraction | (1u64 << 52), exponent - 1075)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let s = BucketScheme::decimal();
        assert_eq!(bucketize(314.1, &s).unwrap(), 2);
        assert_eq!(bucketize(0.005, &s).unwrap(), -2);
        assert_eq!(bucketize(9.99e9, &s).unwrap(), 9);
        assert_eq!(bucketize(1.0, &s).unwrap(), 0);
        assert_eq!(bucketize(1e-30, &s).unwrap(), -2);
        assert_eq!(bucketize(f64::MAX, &s).unwrap(), 9);
    }

    #[test]
    fn rejects_non_positive() {
        let s = BucketScheme::decimal();
        assert!(bucketize(0.0, &s).is_err());
        assert!(bucketize(-3.0, &s).is_err());
        assert!(bucketize(f64::NAN, &s).is_err());
    }

    #[test]
    fn power_of_four_half_points_are_exact() {
        let s = BucketScheme::power_of_four();
        // 2 = 4^0.5 sits exactly on a tie and rounds away from zero.
        assert_eq!(bucketize(2.0, &s).unwrap(), 1);
        assert_eq!(bucketize(8.0, &s).unwrap(), 2);
        // 0.5 = 4^-0.5: away from zero means down.
        assert_eq!(bucketize(0.5, &s).unwrap(), -1);
        assert_eq!(bucketize(2.0f64.next_down(), &s).unwrap(), 0);
        assert_eq!(bucketize(0.5f64.next_up(), &s).unwrap(), 0);
    }

    #[test]
    fn decimal_half_points_use_exact_side() {
        let s = BucketScheme::decimal();
        // The correctly rounded sqrt(10) is within half an ulp of the true
        // root, so its neighbours straddle the tie.
        let r = 10f64.sqrt();
        assert_eq!(bucketize(r.next_down(), &s).unwrap(), 0);
        assert_eq!(bucketize(r.next_up(), &s).unwrap(), 1);
        // 3.1622776601683795^2 = 10.0000000000000012..., just above the tie.
        assert_eq!(bucketize(r, &s).unwrap(), 1);
        let r = 1000f64.sqrt();
        assert_eq!(bucketize(r.next_down(), &s).unwrap(), 1);
        assert_eq!(bucketize(r.next_up(), &s).unwrap(), 2);
    }

    #[test]
    fn decompose_roundtrip() {
        for v in [1.0, 0.1, 3.5e-310, 123456.789, f64::MAX] {
            let (m, e) = decompose(v);
            let e = e as i32;
            assert_eq!(m as f64 * 2f64.powi(e / 2) * 2f64.powi(e - e / 2), v);
        }
    }

    #[test]
    fn label_for_log_rounds_half_away() {
        let s = BucketScheme::decimal();
        assert_eq!(label_for_log(2.4, &s), 2);
        assert_eq!(label_for_log(2.5, &s), 3);
        assert_eq!(label_for_log(-1.5, &s), -2);
        assert_eq!(label_for_log(-5.0, &s), -2);
        assert_eq!(label_for_log(1e300, &s), 9);
    }
}
