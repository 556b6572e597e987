//! Mid-radius interval arithmetic over dyadic rationals.
//!
//! Midpoints are rounded to `prec` significant bits after every operation
//! and the rounding error is folded into the radius, so radii only grow.

use super::rational::{fmt_rational, parse_rational, to_f64};
use super::Field;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Signed;
use std::fmt;

pub const DEFAULT_PREC: u32 = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ball {
    mid: BigRational,
    rad: BigRational,
    prec: u32,
}

/// Rounds to `prec` significant bits; returns value and error bound.
fn round_rel(x: &BigRational, prec: u32) -> (BigRational, BigRational) {
    if x.is_zero() {
        return (x.clone(), BigRational::zero());
    }
    let e = x.numer().bits() as i64 - x.denom().bits() as i64;
    let shift = prec as i64 - e;
    // grid 2^{-shift}
    let (num, den) = if shift >= 0 {
        (x.numer() << (shift as usize), x.denom().clone())
    } else {
        (x.numer().clone(), x.denom() << ((-shift) as usize))
    };
    let (qt, r) = num.div_mod_floor(&den);
    if num_traits::Zero::is_zero(&r) {
        return (x.clone(), BigRational::zero());
    }
    let grid = |v: BigInt| {
        if shift >= 0 {
            BigRational::new(v, BigInt::from(1) << (shift as usize))
        } else {
            BigRational::from_integer(v << ((-shift) as usize))
        }
    };
    (grid(qt), grid(BigInt::from(1)))
}

impl Ball {
    pub fn new(mid: BigRational, rad: BigRational, prec: u32) -> Self {
        let (m, err) = round_rel(&mid, prec);
        let rad = round_up(&(rad.abs() + err), prec);
        Ball { mid: m, rad, prec }
    }

    pub fn exact(mid: BigRational, prec: u32) -> Self {
        Ball::new(mid, BigRational::zero(), prec)
    }

    pub fn mid(&self) -> &BigRational {
        &self.mid
    }

    pub fn rad(&self) -> &BigRational {
        &self.rad
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        Ball::new(self.mid.clone(), self.rad.clone(), prec)
    }

    /// `Some(sign)` when the ball excludes zero.
    pub fn sign(&self) -> Option<i32> {
        if self.mid.abs() > self.rad {
            Some(if self.mid.is_positive() { 1 } else { -1 })
        } else if self.mid.is_zero() && self.rad.is_zero() {
            Some(0)
        } else {
            None
        }
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        (&self.mid - x).abs() <= self.rad
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.mid)
    }

    /// Radius relative to the midpoint magnitude (infinite if the ball contains 0).
    pub fn rel_radius(&self) -> f64 {
        if self.mid.is_zero() {
            if self.rad.is_zero() {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            to_f64(&(&self.rad / self.mid.abs()))
        }
    }

    pub fn abs(&self) -> Ball {
        Ball {
            mid: self.mid.abs(),
            rad: self.rad.clone(),
            prec: self.prec,
        }
    }

    /// Square root of a ball with positive lower bound.
    pub fn sqrt(&self) -> Option<Ball> {
        let lo = &self.mid - &self.rad;
        if !lo.is_positive() {
            if self.mid.is_zero() && self.rad.is_zero() {
                return Some(self.clone());
            }
            return None;
        }
        let bits = self.prec as usize + 8;
        let s_mid = sqrt_rational(&self.mid, bits);
        // |sqrt(a) - sqrt(b)| <= |a-b| / (2 sqrt(lo))
        let s_lo = sqrt_rational(&lo, bits);
        let slack = BigRational::new(BigInt::from(1), BigInt::from(1) << bits) * BigRational::from_integer(4.into());
        let denom = BigRational::from_integer(2.into()) * (&s_lo - &slack);
        if !denom.is_positive() {
            return None;
        }
        let rad = &self.rad / denom + slack * (BigRational::one() + s_mid.abs());
        Some(Ball::new(s_mid, rad, self.prec))
    }

    /// π via Machin's formula, enclosed to about `prec` bits.
    pub fn pi(prec: u32) -> Ball {
        let bits = prec as usize + 16;
        let scale = BigInt::from(1) << bits;
        let atan_inv = |x: i64| -> BigInt {
            // atan(1/x) * 2^bits with truncated alternating series
            let x2 = BigInt::from(x * x);
            let mut term = &scale / BigInt::from(x);
            let mut sum = BigInt::from(0);
            let mut k = 0i64;
            while !num_traits::Zero::is_zero(&term) {
                let t = &term / BigInt::from(2 * k + 1);
                if k % 2 == 0 {
                    sum += t;
                } else {
                    sum -= t;
                }
                term /= &x2;
                k += 1;
            }
            sum
        };
        let v = BigInt::from(16) * atan_inv(5) - BigInt::from(4) * atan_inv(239);
        let mid = BigRational::new(v, scale.clone());
        // truncated divisions lose at most two units per series term
        let rad = BigRational::new(BigInt::from(10 * bits as i64 + 200), scale);
        Ball::new(mid, rad, prec)
    }

    pub fn parse(s: &str) -> Option<Ball> {
        let inner = s.trim().strip_prefix("ball(")?.strip_suffix(')')?;
        let (m, r) = inner.split_once(',')?;
        let mid = parse_rational(m)?;
        let rad = parse_rational(r)?;
        Some(Ball {
            mid,
            rad,
            prec: DEFAULT_PREC,
        })
    }

    fn prec_with(&self, other: &Ball) -> u32 {
        self.prec.max(other.prec)
    }
}

fn round_up(x: &BigRational, prec: u32) -> BigRational {
    let (r, e) = round_rel(x, prec.min(64).max(32));
    if e.is_zero() {
        r
    } else {
        r + e
    }
}

/// floor(sqrt(x) * 2^bits) / 2^bits
fn sqrt_rational(x: &BigRational, bits: usize) -> BigRational {
    let scaled = (x.numer() << (2 * bits)) / x.denom();
    BigRational::new(scaled.sqrt(), BigInt::from(1) << bits)
}

impl fmt::Display for Ball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ball({},{})", fmt_rational(&self.mid), fmt_rational(&self.rad))
    }
}

impl Field for Ball {
    fn zero() -> Self {
        Ball::exact(BigRational::zero(), DEFAULT_PREC)
    }
    fn one() -> Self {
        Ball::exact(BigRational::one(), DEFAULT_PREC)
    }
    fn is_zero(&self) -> bool {
        self.mid.is_zero() && self.rad.is_zero()
    }
    fn add(&self, other: &Self) -> Self {
        Ball::new(&self.mid + &other.mid, &self.rad + &other.rad, self.prec_with(other))
    }
    fn sub(&self, other: &Self) -> Self {
        Ball::new(&self.mid - &other.mid, &self.rad + &other.rad, self.prec_with(other))
    }
    fn mul(&self, other: &Self) -> Self {
        let rad = self.mid.abs() * &other.rad + other.mid.abs() * &self.rad + &self.rad * &other.rad;
        Ball::new(&self.mid * &other.mid, rad, self.prec_with(other))
    }
    fn neg(&self) -> Self {
        Ball {
            mid: -&self.mid,
            rad: self.rad.clone(),
            prec: self.prec,
        }
    }
    fn inv(&self) -> Option<Self> {
        let m = self.mid.abs();
        if m <= self.rad {
            return None;
        }
        let rad = &self.rad / (&m * (&m - &self.rad));
        Some(Ball::new(num_traits::Inv::inv(&self.mid), rad, self.prec))
    }
    fn from_rational(q: &BigRational) -> Self {
        Ball::exact(q.clone(), DEFAULT_PREC)
    }
    fn to_rational(&self) -> Option<BigRational> {
        if self.rad.is_zero() {
            Some(self.mid.clone())
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rational::{q, qi};
    use proptest::prelude::*;

    #[test]
    fn pi_encloses() {
        let p = Ball::pi(200);
        assert!((p.to_f64() - std::f64::consts::PI).abs() < 1e-15);
        assert!(p.rel_radius() < 1e-55);
        // 355/113 is outside, the truncated value 3.14159265358979323846 is inside-ish
        assert!(!p.contains(&q(355, 113)));
    }

    #[test]
    fn sqrt_two() {
        let s = Ball::exact(qi(2), 128).sqrt().unwrap();
        let sq = s.mul(&s);
        assert!(sq.contains(&qi(2)));
        assert!(s.rel_radius() < 1e-30);
    }

    #[test]
    fn inverse_excludes_zero() {
        let b = Ball::new(qi(0), q(1, 10), 64);
        assert!(b.inv().is_none());
        let c = Ball::exact(q(1, 3), 64);
        assert!(c.mul(&c.inv().unwrap()).contains(&qi(1)));
    }

    proptest! {
        #[test]
        fn radii_monotone(a in -1000i64..1000, b in 1i64..1000, r in 0i64..50) {
            let x = Ball::new(q(a, b), q(r, 1000), 80);
            let y = Ball::new(q(b, 7), q(r + 1, 1000), 80);
            let s = x.add(&y);
            prop_assert!(s.rad() >= &(x.rad() + y.rad()));
            let p = x.mul(&y);
            prop_assert!(p.contains(&(x.mid() * y.mid())));
            prop_assert!(p.rad() >= &(x.mid().abs() * y.rad()));
        }
    }
}
