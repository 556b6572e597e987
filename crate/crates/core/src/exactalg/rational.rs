//! Helpers for `BigRational`: construction, parsing, printing, rounding.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `p`, `-p`, `p/q`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    match s.split_once('/') {
        Some((a, b)) => {
            let n: BigInt = a.trim().parse().ok()?;
            let d: BigInt = b.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

/// Canonical text: `p` for integers, `p/q` otherwise.
pub fn fmt_rational(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Best f64 approximation; handles numerators and denominators beyond f64 range.
pub fn to_f64(x: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (x.numer().to_f64(), x.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift = nb - db - 60;
    let scaled = if shift >= 0 {
        x.numer() / (x.denom() << (shift as usize))
    } else {
        (x.numer() << ((-shift) as usize)) / x.denom()
    };
    scaled.to_f64().unwrap_or(0.0) * 2f64.powi(shift as i32)
}

/// Rounds `x` to the dyadic grid `2^{-bits}`, returning the rounded value and
/// an upper bound on the rounding error.
pub fn round_dyadic(x: &BigRational, bits: u32) -> (BigRational, BigRational) {
    if x.denom().is_one() {
        return (x.clone(), BigRational::zero());
    }
    let d_bits = x.denom().bits();
    if d_bits <= bits as u64 && x.denom().trailing_zeros() == Some(d_bits - 1) {
        return (x.clone(), BigRational::zero());
    }
    let scale = BigInt::one() << (bits as usize);
    let scaled = x.numer() * &scale;
    let (quo, _) = scaled.div_mod_floor(x.denom());
    let r = BigRational::new(quo, scale.clone());
    (r, BigRational::new(BigInt::one(), scale))
}

/// Floor of a rational.
pub fn floor(x: &BigRational) -> BigInt {
    x.numer().div_floor(x.denom())
}

pub fn sign(x: &BigRational) -> i32 {
    match x.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

pub fn abs(x: &BigRational) -> BigRational {
    x.abs()
}

/// Binomial coefficient as a rational.
pub fn binomial(n: u64, k: u64) -> BigRational {
    BigRational::from_integer(binomial_int(n, k))
}

pub fn binomial_int(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |a, i| a * BigInt::from(i))
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// via continued fractions.
pub fn approximate_f64(x: f64, max_den: i64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 == 0 {
        None
    } else {
        Some((h1, k1))
    }
}
