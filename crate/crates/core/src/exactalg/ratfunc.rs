//! Quotients of Laurent polynomials in a light canonical form.
//!
//! The denominator is a polynomial with no monomial factor and unit
//! graded-lex leading coefficient; exact divisions are taken when they
//! exist. Equality is decided by cross-multiplication.

use super::poly::LaurentPoly;
use super::Field;
use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

#[derive(Clone)]
pub struct RatFunc<C> {
    num: LaurentPoly<C>,
    den: LaurentPoly<C>,
}

impl<C: Field> RatFunc<C> {
    pub fn new(num: LaurentPoly<C>, den: LaurentPoly<C>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RatFunc { num, den }.canonical())
    }

    pub fn from_poly(p: LaurentPoly<C>) -> Self {
        let one = LaurentPoly::constant_in(p.vars().clone(), C::one());
        RatFunc { num: p, den: one }
    }

    pub fn var_in(vars: Arc<Vec<String>>, i: usize) -> Self {
        Self::from_poly(LaurentPoly::var_in(vars, i))
    }

    pub fn num(&self) -> &LaurentPoly<C> {
        &self.num
    }

    pub fn den(&self) -> &LaurentPoly<C> {
        &self.den
    }

    pub fn vars(&self) -> &Arc<Vec<String>> {
        self.num.vars()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The polynomial value when the denominator is 1.
    pub fn as_poly(&self) -> Option<&LaurentPoly<C>> {
        if self.den.is_constant() && self.den.constant_term().is_one() {
            Some(&self.num)
        } else {
            None
        }
    }

    fn canonical(self) -> Self {
        let RatFunc { mut num, mut den } = self;
        let vars = num.vars().clone();
        if num.is_zero() {
            return RatFunc {
                num,
                den: LaurentPoly::constant_in(vars, C::one()),
            };
        }
        if let Some(inv) = den.monomial_inverse() {
            return RatFunc {
                num: num.mul(&inv),
                den: LaurentPoly::constant_in(vars, C::one()),
            };
        }
        if let Some(q) = num.try_div(&den) {
            return RatFunc {
                num: q,
                den: LaurentPoly::constant_in(vars, C::one()),
            };
        }
        let m: Vec<i32> = den.min_exponents().unwrap().iter().map(|x| -x).collect();
        den = den.shift(&m);
        num = num.shift(&m);
        let lead = den.leading_grlex().unwrap().1.clone();
        if !lead.is_one() {
            let li = lead.inv().expect("nonzero leading coefficient");
            den = den.scale(&li);
            num = num.scale(&li);
        }
        RatFunc { num, den }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return RatFunc {
                num: self.num.add(&other.num),
                den: self.den.clone(),
            }
            .canonical();
        }
        if let Some(f) = self.den.try_div(&other.den) {
            return RatFunc {
                num: self.num.add(&other.num.mul(&f)),
                den: self.den.clone(),
            }
            .canonical();
        }
        if let Some(f) = other.den.try_div(&self.den) {
            return RatFunc {
                num: self.num.mul(&f).add(&other.num),
                den: other.den.clone(),
            }
            .canonical();
        }
        RatFunc {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
        .canonical()
    }

    pub fn neg(&self) -> Self {
        RatFunc {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        // cancel cross factors when they divide exactly
        let (mut a, mut b) = (self.num.clone(), self.den.clone());
        let (mut c, mut d) = (other.num.clone(), other.den.clone());
        if let Some(q) = a.try_div(&d) {
            a = q;
            d = LaurentPoly::constant_in(d.vars().clone(), C::one());
        }
        if let Some(q) = c.try_div(&b) {
            c = q;
            b = LaurentPoly::constant_in(b.vars().clone(), C::one());
        }
        RatFunc {
            num: a.mul(&c),
            den: b.mul(&d),
        }
        .canonical()
    }

    pub fn inv(&self) -> Result<Self> {
        RatFunc::new(self.den.clone(), self.num.clone())
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn powi(&self, e: i32) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let n = e.unsigned_abs();
        Ok(RatFunc {
            num: base.num.pow(n),
            den: base.den.pow(n),
        }
        .canonical())
    }

    pub fn scale(&self, c: &C) -> Self {
        RatFunc {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
        .canonical()
    }

    /// Substitutes a rational function for each variable of `self`.
    pub fn compose(&self, images: &[RatFunc<C>]) -> Result<Self> {
        let n = compose_poly(&self.num, images)?;
        let d = compose_poly(&self.den, images)?;
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        n.div(&d)
    }

    pub fn eval(&self, point: &[C]) -> Result<C> {
        let d = self.den.eval(point)?;
        let n = self.num.eval(point)?;
        n.div(&d).ok_or(Error::PoleAtPoint)
    }

    pub fn map_coeffs<D: Field>(&self, f: impl Fn(&C) -> D) -> RatFunc<D> {
        RatFunc {
            num: self.num.map_coeffs(&f),
            den: self.den.map_coeffs(&f),
        }
        .canonical()
    }
}

/// `p(images)` for a Laurent polynomial `p`, as a rational function.
pub fn compose_poly<C: Field>(p: &LaurentPoly<C>, images: &[RatFunc<C>]) -> Result<RatFunc<C>> {
    let vars = images
        .first()
        .map(|r| r.vars().clone())
        .unwrap_or_else(|| p.vars().clone());
    let mut acc = RatFunc::from_poly(LaurentPoly::zero_in(vars.clone()));
    let mut cache: Vec<std::collections::BTreeMap<i32, RatFunc<C>>> = vec![Default::default(); images.len()];
    for (e, c) in p.terms() {
        let mut t = RatFunc::from_poly(LaurentPoly::constant_in(vars.clone(), c.clone()));
        for (i, &k) in e.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let v = match cache[i].get(&k) {
                Some(v) => v.clone(),
                None => {
                    let v = images[i].powi(k)?;
                    cache[i].insert(k, v.clone());
                    v
                }
            };
            t = t.mul(&v);
        }
        acc = acc.add(&t);
    }
    Ok(acc)
}

impl<C: Field> PartialEq for RatFunc<C> {
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl<C: Field> fmt::Display for RatFunc<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_poly() {
            Some(p) => write!(f, "{}", p),
            None => write!(f, "({}) / ({})", self.num, self.den),
        }
    }
}

impl<C: Field> fmt::Debug for RatFunc<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::poly::vars;
    use crate::exactalg::rational::qi;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use smallvec::SmallVec;

    type R = RatFunc<BigRational>;

    fn poly(v: &Arc<Vec<String>>, terms: &[(i64, [i32; 2])]) -> LaurentPoly<BigRational> {
        LaurentPoly::from_terms(v.clone(), terms.iter().map(|(c, e)| (SmallVec::from_slice(e), qi(*c))))
    }

    #[test]
    fn compose_with_involution() {
        let v = vars(&["x", "y"]);
        let x = R::var_in(v.clone(), 0);
        let y = R::var_in(v.clone(), 1);
        // Φ(x, y) = (x, x/y) composed twice is the identity
        let phi = vec![x.clone(), x.div(&y).unwrap()];
        let twice: Vec<R> = phi.iter().map(|f| f.compose(&phi).unwrap()).collect();
        assert_eq!(twice, vec![x.clone(), y.clone()]);
        let f = x.mul(&y);
        assert_eq!(f.compose(&[x.clone(), y.clone()]).unwrap(), f);
    }

    #[test]
    fn canonical_denominator() {
        let v = vars(&["x", "y"]);
        let n = poly(&v, &[(2, [1, 0])]);
        let d = poly(&v, &[(4, [2, 1]), (2, [1, 1])]);
        let r = R::new(n, d).unwrap();
        // 2x / (4x^2 y + 2xy) = 1 / (2xy + y) -> den normalized to x + 1/2 after removing y
        assert_eq!(r.den().min_exponents().unwrap().as_slice(), &[0, 0]);
        assert!(r.den().leading_grlex().unwrap().1.is_one());
        assert!(R::new(poly(&v, &[(1, [0, 0])]), LaurentPoly::zero_in(v.clone())).is_err());
    }

    fn arb() -> impl Strategy<Value = R> {
        let v = vars(&["x", "y"]);
        (
            proptest::collection::vec((-4i64..4, -2i32..3, -2i32..3), 1..4),
            proptest::collection::vec((1i64..4, 0i32..2, 0i32..2), 1..3),
        )
            .prop_filter_map("nonzero den", move |(a, b)| {
                let n = LaurentPoly::from_terms(
                    v.clone(),
                    a.into_iter().map(|(c, i, j)| (SmallVec::from_slice(&[i, j]), qi(c))),
                );
                let d = LaurentPoly::from_terms(
                    v.clone(),
                    b.into_iter().map(|(c, i, j)| (SmallVec::from_slice(&[i, j]), qi(c))),
                );
                R::new(n, d).ok()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn field_axioms(f in arb(), g in arb(), h in arb()) {
            prop_assert_eq!(f.add(&g).mul(&h), f.mul(&h).add(&g.mul(&h)));
            prop_assert_eq!(f.mul(&g), g.mul(&f));
            if !g.is_zero() {
                prop_assert_eq!(f.mul(&g).div(&g).unwrap(), f.clone());
            }
            prop_assert!(f.sub(&f).is_zero());
        }
    }
}
