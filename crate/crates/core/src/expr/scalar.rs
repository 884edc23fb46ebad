//! Exact rational scalars.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational coefficient.
pub type Q = BigRational;

/// Exponent of a generator inside a monomial.
pub type Exp = Rational64;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn exp_int(n: i64) -> Exp {
    Exp::from_integer(n)
}

pub fn exp_to_q(e: Exp) -> Q {
    Q::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()))
}

/// Converts a rational to a machine exponent, failing on overflow.
pub fn q_to_exp(q: &Q) -> Option<Exp> {
    let n = q.numer().to_i64()?;
    let d = q.denom().to_i64()?;
    Some(Exp::new(n, d))
}

/// Floor of an exponent as an integer.
pub fn exp_floor(e: Exp) -> i64 {
    e.floor().to_integer()
}

/// `base^n` for an integer (possibly negative) `n`; `base` must be nonzero when `n < 0`.
pub fn q_powi(base: &Q, n: i64) -> Q {
    if n >= 0 {
        num_traits::pow(base.clone(), n as usize)
    } else {
        num_traits::pow(base.recip(), (-n) as usize)
    }
}

/// Exact `k`-th root of a nonnegative integer, if it exists.
pub fn int_root(n: &BigInt, k: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *n {
        Some(r)
    } else {
        None
    }
}

/// Splits a positive integer `n` as `a^k * b` where `b` has no `k`-th power
/// factors among small primes. Large cofactors are kept in `b` unchanged.
pub fn extract_power(n: &BigInt, k: u32) -> (BigInt, BigInt) {
    let mut outside = BigInt::one();
    let mut rest = n.clone();
    if let Some(r) = int_root(&rest, k) {
        return (r, BigInt::one());
    }
    let mut p = BigInt::from(2u32);
    let limit = BigInt::from(2000u32);
    let pk = |p: &BigInt| num_traits::pow(p.clone(), k as usize);
    while p < limit && !rest.is_one() {
        let ppow = pk(&p);
        while (&rest % &ppow).is_zero() {
            rest /= &ppow;
            outside *= &p;
        }
        p += 1;
    }
    (outside, rest)
}

pub fn q_gcd_content<'a>(coefs: impl Iterator<Item = &'a Q>) -> Q {
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for c in coefs {
        num = num.gcd(c.numer());
        den = den.lcm(c.denom());
    }
    if num.is_zero() {
        Q::one()
    } else {
        Q::new(num, den)
    }
}

pub fn q_to_f64(q: &Q) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // scale down huge numerators and denominators together
            let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(900);
            let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}
