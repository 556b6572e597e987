//! Truncated power series in one grading variable `ε` whose coefficients are
//! polynomials. In the saddle-point engine `ε = n^{-1/2}`.

use super::poly::LaurentPoly;
use super::rational::qi;
use super::Field;
use crate::error::{Error, Result};
use std::sync::Arc;

#[derive(Clone, PartialEq)]
pub struct GradedSeries<C> {
    comps: Vec<LaurentPoly<C>>,
}

impl<C: Field> std::fmt::Debug for GradedSeries<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.comps.iter()).finish()
    }
}

impl<C: Field> GradedSeries<C> {
    /// Builds a series from its components; grade `r` is `comps[r]`.
    pub fn new(comps: Vec<LaurentPoly<C>>) -> Self {
        assert!(!comps.is_empty(), "a series needs at least its grade-0 component");
        GradedSeries { comps }
    }

    pub fn zero(vars: Arc<Vec<String>>, truncation: usize) -> Self {
        GradedSeries {
            comps: vec![LaurentPoly::zero_in(vars); truncation + 1],
        }
    }

    pub fn one(vars: Arc<Vec<String>>, truncation: usize) -> Self {
        let mut s = Self::zero(vars.clone(), truncation);
        s.comps[0] = LaurentPoly::constant_in(vars, C::one());
        s
    }

    pub fn truncation(&self) -> usize {
        self.comps.len() - 1
    }

    pub fn vars(&self) -> &Arc<Vec<String>> {
        self.comps[0].vars()
    }

    pub fn grade(&self, r: usize) -> &LaurentPoly<C> {
        &self.comps[r]
    }

    pub fn components(&self) -> &[LaurentPoly<C>] {
        &self.comps
    }

    pub fn truncate(&self, t: usize) -> Self {
        GradedSeries {
            comps: self.comps[..=t.min(self.truncation())].to_vec(),
        }
    }

    /// Lowest grade with a nonzero component.
    pub fn valuation(&self) -> Option<usize> {
        self.comps.iter().position(|c| !c.is_zero())
    }

    pub fn add(&self, other: &Self) -> Self {
        let t = self.truncation().min(other.truncation());
        GradedSeries {
            comps: (0..=t).map(|r| self.comps[r].add(&other.comps[r])).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let t = self.truncation().min(other.truncation());
        GradedSeries {
            comps: (0..=t).map(|r| self.comps[r].sub(&other.comps[r])).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let t = self.truncation().min(other.truncation());
        let comps = (0..=t)
            .map(|r| {
                let mut acc = LaurentPoly::zero_in(self.vars().clone());
                for j in 0..=r {
                    if self.comps[j].is_zero() || other.comps[r - j].is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.comps[j].mul(&other.comps[r - j]));
                }
                acc
            })
            .collect();
        GradedSeries { comps }
    }

    pub fn scale(&self, c: &C) -> Self {
        GradedSeries {
            comps: self.comps.iter().map(|p| p.scale(c)).collect(),
        }
    }

    /// `exp(self)`; the grade-0 component must vanish.
    pub fn exp(&self) -> Result<Self> {
        if !self.comps[0].is_zero() {
            return Err(Error::NonUnitConstantTerm("exp needs a zero grade-0 component".into()));
        }
        let t = self.truncation();
        let vars = self.vars().clone();
        let mut e = vec![LaurentPoly::constant_in(vars.clone(), C::one())];
        for r in 1..=t {
            // r E_r = Σ_{j=1}^{r} j B_j E_{r-j}
            let mut acc = LaurentPoly::zero_in(vars.clone());
            for j in 1..=r {
                if self.comps[j].is_zero() || e[r - j].is_zero() {
                    continue;
                }
                acc = acc.add(&self.comps[j].mul(&e[r - j]).scale(&C::from_int(j as i64)));
            }
            e.push(acc.scale(&C::from_rational(&(qi(1) / qi(r as i64)))));
        }
        Ok(GradedSeries { comps: e })
    }

    /// `log(self)`; the grade-0 component must be the constant 1.
    pub fn log(&self) -> Result<Self> {
        let c0 = &self.comps[0];
        if !(c0.is_constant() && c0.constant_term().is_one()) {
            return Err(Error::NonUnitConstantTerm("log needs grade-0 component 1".into()));
        }
        let t = self.truncation();
        let vars = self.vars().clone();
        let mut l: Vec<LaurentPoly<C>> = vec![LaurentPoly::zero_in(vars.clone())];
        for r in 1..=t {
            // r L_r = r F_r - Σ_{j=1}^{r-1} j L_j F_{r-j}
            let mut acc = self.comps[r].scale(&C::from_int(r as i64));
            for j in 1..r {
                if l[j].is_zero() || self.comps[r - j].is_zero() {
                    continue;
                }
                acc = acc.sub(&l[j].mul(&self.comps[r - j]).scale(&C::from_int(j as i64)));
            }
            l.push(acc.scale(&C::from_rational(&(qi(1) / qi(r as i64)))));
        }
        Ok(GradedSeries { comps: l })
    }

    /// `log(1 + self)`.
    pub fn log1p(&self) -> Result<Self> {
        let one = Self::one(self.vars().clone(), self.truncation());
        one.add(self).log()
    }

    /// Multiplicative inverse; grade 0 must be an invertible constant.
    pub fn inv(&self) -> Result<Self> {
        let c0 = &self.comps[0];
        if !c0.is_constant() || c0.is_zero() {
            return Err(Error::NonUnitConstantTerm(
                "inverse needs a nonzero constant grade-0 component".into(),
            ));
        }
        let a = c0.constant_term().inv().ok_or(Error::DivisionByZero)?;
        let t = self.truncation();
        let vars = self.vars().clone();
        let mut g = vec![LaurentPoly::constant_in(vars.clone(), a.clone())];
        for r in 1..=t {
            let mut acc = LaurentPoly::zero_in(vars.clone());
            for j in 1..=r {
                if self.comps[j].is_zero() || g[r - j].is_zero() {
                    continue;
                }
                acc = acc.add(&self.comps[j].mul(&g[r - j]));
            }
            g.push(acc.scale(&a.neg()));
        }
        Ok(GradedSeries { comps: g })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn map_coeffs<D: Field>(&self, f: impl Fn(&C) -> D) -> GradedSeries<D> {
        GradedSeries {
            comps: self.comps.iter().map(|p| p.map_coeffs(&f)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::poly::vars;
    use crate::exactalg::rational::q;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use smallvec::SmallVec;

    type S = GradedSeries<BigRational>;

    fn arb_series() -> impl Strategy<Value = S> {
        proptest::collection::vec(proptest::collection::vec((-3i64..4, 0i32..3), 0..3), 5).prop_map(|grades| {
            let v = vars(&["s"]);
            let mut comps = vec![LaurentPoly::zero_in(v.clone())];
            for g in grades.into_iter().skip(1) {
                comps.push(LaurentPoly::from_terms(
                    v.clone(),
                    g.into_iter().map(|(c, e)| (SmallVec::from_slice(&[e]), qi(c))),
                ));
            }
            GradedSeries::new(comps)
        })
    }

    #[test]
    fn exp_of_linear() {
        let v = vars(&["s"]);
        let mut b = S::zero(v.clone(), 4);
        b.comps[1] = LaurentPoly::var_in(v.clone(), 0);
        let e = b.exp().unwrap();
        for r in 0..=4i64 {
            let fact: i64 = (1..=r).product();
            let expected = LaurentPoly::monomial_in(v.clone(), &[r as i32], q(1, fact));
            assert_eq!(e.grade(r as usize), &expected);
        }
        assert!(S::one(v.clone(), 3).exp().is_err());
        assert!(b.log().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn exp_log_round_trip(g in arb_series()) {
            let e = g.exp().unwrap();
            prop_assert_eq!(e.log().unwrap(), g.clone());
            let l = g.log1p().unwrap();
            let back = l.exp().unwrap();
            prop_assert_eq!(back.sub(&S::one(g.vars().clone(), g.truncation())), g.clone());
            let u = S::one(g.vars().clone(), g.truncation()).add(&g);
            prop_assert_eq!(u.mul(&u.inv().unwrap()), S::one(g.vars().clone(), g.truncation()));
        }
    }
}
