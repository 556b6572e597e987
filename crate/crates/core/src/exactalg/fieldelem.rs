//! Coefficients that are exact radicals when possible and balls otherwise.

use super::ball::Ball;
use super::radical::Radical;
use super::Field;
use num_rational::BigRational;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum FieldElem {
    Exact(Radical),
    Approx(Ball),
}

impl FieldElem {
    pub fn rational(q: BigRational) -> Self {
        FieldElem::Exact(Radical::rational(q))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, FieldElem::Exact(_))
    }

    pub fn as_radical(&self) -> Option<&Radical> {
        match self {
            FieldElem::Exact(r) => Some(r),
            FieldElem::Approx(_) => None,
        }
    }

    pub fn to_ball(&self, prec: u32) -> Ball {
        match self {
            FieldElem::Exact(r) => r.to_ball(prec),
            FieldElem::Approx(b) => b.with_prec(prec.max(b.prec())),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            FieldElem::Exact(r) => r.to_f64(),
            FieldElem::Approx(b) => b.to_f64(),
        }
    }

    /// Sign when decidable (always for exact values).
    pub fn signum(&self) -> Option<i32> {
        match self {
            FieldElem::Exact(r) => Some(r.signum()),
            FieldElem::Approx(b) => b.sign(),
        }
    }

    pub fn sqrt(&self) -> Option<FieldElem> {
        match self {
            FieldElem::Exact(r) => match r.sqrt() {
                Some(s) => Some(FieldElem::Exact(s)),
                None => r.to_ball(super::ball::DEFAULT_PREC).sqrt().map(FieldElem::Approx),
            },
            FieldElem::Approx(b) => b.sqrt().map(FieldElem::Approx),
        }
    }

    /// Parses either the radical display form or `ball(mid,rad)`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.starts_with("ball(") {
            Ball::parse(s).map(FieldElem::Approx)
        } else {
            Radical::parse(s).map(FieldElem::Exact)
        }
    }

    fn lift(&self, prec: u32) -> Ball {
        self.to_ball(prec)
    }

    fn binop(
        &self,
        other: &Self,
        exact: impl Fn(&Radical, &Radical) -> Radical,
        approx: impl Fn(&Ball, &Ball) -> Ball,
    ) -> Self {
        match (self, other) {
            (FieldElem::Exact(a), FieldElem::Exact(b)) => FieldElem::Exact(exact(a, b)),
            (FieldElem::Approx(a), b) => FieldElem::Approx(approx(a, &b.lift(a.prec()))),
            (a, FieldElem::Approx(b)) => FieldElem::Approx(approx(&a.lift(b.prec()), b)),
        }
    }
}

impl From<Radical> for FieldElem {
    fn from(r: Radical) -> Self {
        FieldElem::Exact(r)
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElem::Exact(r) => write!(f, "{}", r),
            FieldElem::Approx(b) => write!(f, "{}", b),
        }
    }
}

impl Field for FieldElem {
    fn zero() -> Self {
        FieldElem::Exact(Radical::zero())
    }
    fn one() -> Self {
        FieldElem::Exact(Radical::one())
    }
    fn is_zero(&self) -> bool {
        match self {
            FieldElem::Exact(r) => r.is_zero(),
            FieldElem::Approx(b) => b.is_zero(),
        }
    }
    fn add(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a.add(b), |a, b| a.add(b))
    }
    fn sub(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a.sub(b), |a, b| a.sub(b))
    }
    fn mul(&self, other: &Self) -> Self {
        self.binop(other, |a, b| a.mul(b), |a, b| a.mul(b))
    }
    fn neg(&self) -> Self {
        match self {
            FieldElem::Exact(r) => FieldElem::Exact(r.neg()),
            FieldElem::Approx(b) => FieldElem::Approx(b.neg()),
        }
    }
    fn inv(&self) -> Option<Self> {
        match self {
            FieldElem::Exact(r) => r.inv().map(FieldElem::Exact),
            FieldElem::Approx(b) => b.inv().map(FieldElem::Approx),
        }
    }
    fn from_rational(q: &BigRational) -> Self {
        FieldElem::Exact(Radical::rational(q.clone()))
    }
    fn to_rational(&self) -> Option<BigRational> {
        match self {
            FieldElem::Exact(r) => r.as_rational(),
            FieldElem::Approx(b) => b.to_rational(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rational::qi;

    #[test]
    fn mixed_arithmetic_degrades_to_balls() {
        let s3 = FieldElem::Exact(Radical::root(&qi(3), 1, 2).unwrap());
        assert!(s3.mul(&s3).is_exact());
        assert_eq!(s3.mul(&s3), FieldElem::from_int(3));
        let b = FieldElem::Approx(Ball::exact(qi(2), 128));
        let p = s3.mul(&b);
        assert!(!p.is_exact());
        assert!((p.to_f64() - 2.0 * 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(FieldElem::parse(&s3.to_string()), Some(s3));
    }
}
