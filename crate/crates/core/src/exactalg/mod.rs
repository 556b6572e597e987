//! Exact arithmetic substrate.
//!
//! Every coefficient type implements [`Field`]; polynomials, rational
//! functions and graded series are generic over it.

pub mod ball;
pub mod cyclo;
pub mod fieldelem;
pub mod linalg;
pub mod poly;
pub mod radical;
pub mod ratfunc;
pub mod rational;
pub mod root_of_unity;
pub mod scaled;
pub mod series;
pub mod snf;

use num_bigint::BigInt;
use num_rational::BigRational;
use std::fmt;

pub use ball::Ball;
pub use cyclo::Cyclo;
pub use fieldelem::FieldElem;
pub use poly::{Exp, LaurentPoly};
pub use radical::Radical;
pub use ratfunc::RatFunc;
pub use root_of_unity::RootOfUnity;
pub use scaled::ScaledCoefficient;
pub use series::GradedSeries;

/// A commutative field (or, for [`Ball`], an interval approximation of one).
///
/// Methods take references so that big-number types are never moved.
pub trait Field: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    /// Exact zero test. Balls are zero only when they are the point 0.
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    /// Multiplicative inverse, `None` for zero (or a ball containing zero).
    fn inv(&self) -> Option<Self>;
    fn from_rational(q: &BigRational) -> Self;
    /// The rational value if the element is known to be rational.
    fn to_rational(&self) -> Option<BigRational>;

    fn from_int(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }

    fn is_one(&self) -> bool {
        self.sub(&Self::one()).is_zero()
    }

    fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|i| self.mul(&i))
    }

    fn scale(&self, q: &BigRational) -> Self {
        self.mul(&Self::from_rational(q))
    }

    fn pow(&self, e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Integer power, negative exponents through the inverse.
    fn powi(&self, e: i64) -> Option<Self> {
        if e >= 0 {
            Some(self.pow(e as u32))
        } else {
            self.inv().map(|i| i.pow((-e) as u32))
        }
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        <BigRational as num_traits::Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as num_traits::One>::one()
    }
    fn is_zero(&self) -> bool {
        num_traits::Zero::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if num_traits::Zero::is_zero(self) {
            None
        } else {
            Some(num_traits::Inv::inv(self))
        }
    }
    fn from_rational(q: &BigRational) -> Self {
        q.clone()
    }
    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
    fn is_one(&self) -> bool {
        num_traits::One::is_one(self)
    }
}
