//! Exact rational helpers shared across modules.
//!
//! The crate never decides a predicate with floating point.  Square roots
//! are handled either by comparing signed squares or by outward-rounded
//! rational brackets that are refined until the comparison resolves.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Parses `"num/den"` or `"num"` into an exact rational.
pub fn parse_ratio(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| format!("invalid rational numerator: {s:?}"))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| format!("invalid rational denominator: {s:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in rational: {s:?}"));
    }
    Ok(BigRational::new(num, den))
}

/// Formats a rational as `num/den` (denominator always present and positive).
pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// `x * |x|`: strictly monotone on all of Q, so `a < b  <=>  sq_signed(a) < sq_signed(b)`
/// whenever one side of the original comparison is a square root.
pub fn sq_signed(x: &BigRational) -> BigRational {
    x * x.abs()
}

/// Floor of a rational as an integer.
pub fn ratio_floor(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

/// Nearest integer to `num/den` (`den > 0`), ties rounded up.
pub fn round_nearest(num: &BigInt, den: &BigInt) -> BigInt {
    debug_assert!(den.is_positive());
    ((num << 1usize) + den).div_floor(&(den << 1usize))
}

/// Exact square root if `n` is a perfect square.
pub fn perfect_sqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

/// Exact square root of a nonnegative rational, if one exists in Q.
pub fn perfect_sqrt_ratio(r: &BigRational) -> Option<BigRational> {
    let n = perfect_sqrt(r.numer())?;
    let d = perfect_sqrt(r.denom())?;
    Some(BigRational::new(n, d))
}

/// Outward bracket `lo <= sqrt(r) <= hi` with `hi - lo = 1 / (denom * 2^precision)`.
/// Requires `r >= 0`.
pub fn sqrt_bracket(r: &BigRational, precision: u32) -> (BigRational, BigRational) {
    assert!(!r.is_negative(), "sqrt of a negative rational");
    // sqrt(n/d) = sqrt(n*d)/d, and sqrt(t) is bracketed by isqrt(t*4^p)/2^p.
    let t: BigInt = r.numer() * r.denom();
    let scale: BigInt = BigInt::one() << precision;
    let root = (&t * &scale * &scale).sqrt();
    let denom = r.denom() * &scale;
    let lo = BigRational::new(root.clone(), denom.clone());
    let hi = BigRational::new(root + 1, denom);
    (lo, hi)
}

/// Decides `sum_i sqrt(v_i) <= bound` exactly (`v_i >= 0`).
///
/// Perfect squares contribute exactly; the remaining roots are irrational
/// and a sum containing at least one of them can never equal the rational
/// bound, so bracket refinement terminates.
pub fn sum_of_sqrts_le(values: &[BigRational], bound: &BigRational) -> bool {
    let mut exact = BigRational::zero();
    let mut irrational: Vec<&BigRational> = Vec::new();
    for v in values {
        assert!(!v.is_negative(), "sqrt of a negative rational");
        match perfect_sqrt_ratio(v) {
            Some(root) => exact += root,
            None => irrational.push(v),
        }
    }
    if irrational.is_empty() {
        return exact <= *bound;
    }
    let target = bound - exact;
    if target.is_negative() {
        return false;
    }
    let mut precision = 8;
    loop {
        let mut lo_sum = BigRational::zero();
        let mut hi_sum = BigRational::zero();
        for v in &irrational {
            let (lo, hi) = sqrt_bracket(v, precision);
            lo_sum += lo;
            hi_sum += hi;
        }
        if hi_sum <= target {
            return true;
        }
        if lo_sum > target {
            return false;
        }
        precision *= 2;
        assert!(
            precision <= 1 << 20,
            "sqrt bracket failed to resolve a strict comparison"
        );
    }
}

/// Convenience: rational from an integer pair.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Convenience: rational from an integer.
pub fn ratio_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}
