//! Sparse multivariate Laurent polynomials.

use super::Field;
use crate::error::{Error, Result};
use smallvec::SmallVec;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Exponent vector.
pub type Exp = SmallVec<[i32; 4]>;

/// Graded lexicographic comparison: total degree first, then lex.
pub fn grlex_cmp(a: &[i32], b: &[i32]) -> Ordering {
    let da: i64 = a.iter().map(|&x| x as i64).sum();
    let db: i64 = b.iter().map(|&x| x as i64).sum();
    da.cmp(&db).then_with(|| a.cmp(b))
}

pub fn exp_add(a: &[i32], b: &[i32]) -> Exp {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn exp_sub(a: &[i32], b: &[i32]) -> Exp {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Clone, PartialEq)]
pub struct LaurentPoly<C> {
    vars: Arc<Vec<String>>,
    terms: BTreeMap<Exp, C>,
}

impl<C: Field> LaurentPoly<C> {
    pub fn zero_in(vars: Arc<Vec<String>>) -> Self {
        LaurentPoly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn zero(vars: &[&str]) -> Self {
        Self::zero_in(Arc::new(vars.iter().map(|s| s.to_string()).collect()))
    }

    pub fn constant(vars: &[&str], c: C) -> Self {
        let mut p = Self::zero(vars);
        let e: Exp = SmallVec::from_elem(0, vars.len());
        p.add_term(e, c);
        p
    }

    pub fn constant_in(vars: Arc<Vec<String>>, c: C) -> Self {
        let n = vars.len();
        let mut p = Self::zero_in(vars);
        p.add_term(SmallVec::from_elem(0, n), c);
        p
    }

    pub fn monomial_in(vars: Arc<Vec<String>>, e: &[i32], c: C) -> Self {
        let mut p = Self::zero_in(vars);
        p.add_term(e.iter().copied().collect(), c);
        p
    }

    pub fn var_in(vars: Arc<Vec<String>>, i: usize) -> Self {
        let mut e: Exp = SmallVec::from_elem(0, vars.len());
        e[i] = 1;
        Self::monomial_in(vars, &e, C::one())
    }

    pub fn from_terms(vars: Arc<Vec<String>>, terms: impl IntoIterator<Item = (Exp, C)>) -> Self {
        let mut p = Self::zero_in(vars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn vars(&self) -> &Arc<Vec<String>> {
        &self.vars
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, &C)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<Exp, C> {
        self.terms
    }

    /// Terms in ascending graded-lex order.
    pub fn terms_grlex(&self) -> Vec<(&Exp, &C)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| grlex_cmp(a.0, b.0));
        v
    }

    pub fn coeff(&self, e: &[i32]) -> C {
        self.terms.get(e).cloned().unwrap_or_else(C::zero)
    }

    pub fn add_term(&mut self, e: Exp, c: C) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(e.len(), self.vars.len());
        match self.terms.get_mut(&e) {
            Some(x) => {
                let s = x.add(&c);
                if s.is_zero() {
                    self.terms.remove(&e);
                } else {
                    *x = s;
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.neg());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero_in(self.vars.clone());
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(exp_add(e1, e2), c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero_in(self.vars.clone());
        }
        let mut out = Self::zero_in(self.vars.clone());
        for (e, x) in &self.terms {
            out.add_term(e.clone(), x.mul(c));
        }
        out
    }

    /// Multiplies by the monomial `x^e`.
    pub fn shift(&self, e: &[i32]) -> Self {
        LaurentPoly {
            vars: self.vars.clone(),
            terms: self.terms.iter().map(|(k, c)| (exp_add(k, e), c.clone())).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::constant_in(self.vars.clone(), C::one());
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn map_coeffs<D: Field>(&self, f: impl Fn(&C) -> D) -> LaurentPoly<D> {
        let mut out = LaurentPoly::zero_in(self.vars.clone());
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    /// Maps each term to a new exponent and coefficient (terms may merge).
    pub fn map_terms<D: Field>(&self, vars: Arc<Vec<String>>, f: impl Fn(&Exp, &C) -> (Exp, D)) -> LaurentPoly<D> {
        let mut out = LaurentPoly::zero_in(vars);
        for (e, c) in &self.terms {
            let (e2, c2) = f(e, c);
            out.add_term(e2, c2);
        }
        out
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().next().unwrap().iter().all(|&x| x == 0))
    }

    pub fn constant_term(&self) -> C {
        let z: Exp = SmallVec::from_elem(0, self.nvars());
        self.coeff(&z)
    }

    pub fn total_degree(&self) -> Option<i64> {
        self.terms.keys().map(|e| e.iter().map(|&x| x as i64).sum()).max()
    }

    pub fn min_total_degree(&self) -> Option<i64> {
        self.terms.keys().map(|e| e.iter().map(|&x| x as i64).sum()).min()
    }

    pub fn degree_in(&self, i: usize) -> Option<i32> {
        self.terms.keys().map(|e| e[i]).max()
    }

    pub fn min_exponents(&self) -> Option<Exp> {
        let mut it = self.terms.keys();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, e| acc.iter().zip(e).map(|(a, b)| *a.min(b)).collect()))
    }

    /// Sum of the terms whose total degree is `d`.
    pub fn homogeneous_part(&self, d: i64) -> Self {
        LaurentPoly {
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().map(|&x| x as i64).sum::<i64>() == d)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Total degree restricted to a subset of variables.
    pub fn partial_degree(&self, idx: &[usize]) -> Option<i64> {
        self.terms.keys().map(|e| idx.iter().map(|&i| e[i] as i64).sum()).max()
    }

    pub fn leading_grlex(&self) -> Option<(&Exp, &C)> {
        self.terms.iter().max_by(|a, b| grlex_cmp(a.0, b.0))
    }

    pub fn eval(&self, point: &[C]) -> Result<C> {
        let mut acc = C::zero();
        let mut cache: Vec<BTreeMap<i32, C>> = vec![BTreeMap::new(); point.len()];
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let v = match cache[i].get(&k) {
                    Some(v) => v.clone(),
                    None => {
                        let v = point[i].powi(k as i64).ok_or(Error::PoleAtPoint)?;
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

    /// Substitutes polynomial images for the variables (nonnegative exponents only,
    /// unless the image is a monomial).
    pub fn compose(&self, images: &[LaurentPoly<C>]) -> Result<LaurentPoly<C>> {
        let vars = images
            .first()
            .map(|p| p.vars.clone())
            .unwrap_or_else(|| self.vars.clone());
        let mut out = LaurentPoly::zero_in(vars.clone());
        let mut cache: Vec<BTreeMap<i32, LaurentPoly<C>>> = vec![BTreeMap::new(); images.len()];
        for (e, c) in &self.terms {
            let mut t = LaurentPoly::constant_in(vars.clone(), c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let v = match cache[i].get(&k) {
                    Some(v) => v.clone(),
                    None => {
                        let v = if k > 0 {
                            images[i].pow(k as u32)
                        } else {
                            images[i]
                                .monomial_inverse()
                                .ok_or(Error::DivisionByZero)?
                                .pow((-k) as u32)
                        };
                        cache[i].insert(k, v.clone());
                        v
                    }
                };
                t = t.mul(&v);
            }
            out = out.add(&t);
        }
        Ok(out)
    }

    /// `p(x + a)` for a polynomial `p`.
    pub fn translate(&self, a: &[C]) -> Result<LaurentPoly<C>> {
        let images: Vec<_> = (0..self.nvars())
            .map(|i| {
                LaurentPoly::var_in(self.vars.clone(), i)
                    .add(&LaurentPoly::constant_in(self.vars.clone(), a[i].clone()))
            })
            .collect();
        if self.terms.keys().any(|e| e.iter().any(|&x| x < 0)) {
            return Err(Error::Unsupported("translation of a Laurent polynomial".into()));
        }
        self.compose(&images)
    }

    pub fn monomial_inverse(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next().unwrap();
        let e2: Exp = e.iter().map(|x| -x).collect();
        Some(Self::monomial_in(self.vars.clone(), &e2, c.inv()?))
    }

    /// Exact quotient in the Laurent ring, if `d` divides `self`.
    pub fn try_div(&self, d: &Self) -> Option<Self> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Self::zero_in(self.vars.clone()));
        }
        if let Some(inv) = d.monomial_inverse() {
            return Some(self.mul(&inv));
        }
        let (dl, dc) = {
            let (e, c) = d.terms.iter().next_back().unwrap();
            (e.clone(), c.clone())
        };
        let dt = d.terms.keys().next().unwrap().clone();
        let st = self.terms.keys().next().unwrap().clone();
        // lowest quotient term in lex order
        let q_low = exp_sub(&st, &dt);
        let dci = dc.inv()?;
        // Newton polytopes add, so quotient exponents live in a finite box
        let n = self.nvars();
        let (amin, bmin) = (self.min_exponents()?, d.min_exponents()?);
        let amax: Vec<i32> = (0..n).map(|i| self.degree_in(i).unwrap()).collect();
        let bmax: Vec<i32> = (0..n).map(|i| d.degree_in(i).unwrap()).collect();
        let in_box = |e: &Exp| (0..n).all(|i| e[i] >= amin[i] - bmin[i] && e[i] <= amax[i] - bmax[i]);
        let mut rem = self.clone();
        let mut q = Self::zero_in(self.vars.clone());
        while let Some((re, rc)) = rem.terms.iter().next_back() {
            let qe = exp_sub(re, &dl);
            if qe < q_low || !in_box(&qe) {
                return None;
            }
            let qc = rc.mul(&dci);
            let term = Self::monomial_in(self.vars.clone(), &qe, qc);
            rem = rem.sub(&term.mul(d));
            q = q.add(&term);
        }
        Some(q)
    }

    /// Re-embeds into a larger variable list: variable `i` becomes `map[i]`.
    pub fn embed(&self, vars: Arc<Vec<String>>, map: &[usize]) -> Self {
        let n = vars.len();
        self.map_terms(vars, |e, c| {
            let mut e2: Exp = SmallVec::from_elem(0, n);
            for (i, &k) in e.iter().enumerate() {
                e2[map[i]] += k;
            }
            (e2, c.clone())
        })
    }

    /// Splits by the exponents of the given variable: `Σ_j x_i^j · p_j`.
    pub fn slices(&self, i: usize) -> BTreeMap<i32, LaurentPoly<C>> {
        let mut out: BTreeMap<i32, LaurentPoly<C>> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let k = e2[i];
            e2[i] = 0;
            out.entry(k)
                .or_insert_with(|| LaurentPoly::zero_in(self.vars.clone()))
                .add_term(e2, c.clone());
        }
        out
    }
}

impl<C: Field> fmt::Display for LaurentPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (e, c) in self.terms_grlex().into_iter().rev() {
            let mut mono = Vec::new();
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => mono.push(self.vars[i].clone()),
                    _ => mono.push(format!("{}^{}", self.vars[i], k)),
                }
            }
            if mono.is_empty() {
                parts.push(format!("({})", c));
            } else {
                parts.push(format!("({})*{}", c, mono.join("*")));
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl<C: Field> fmt::Debug for LaurentPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Shorthand for a shared variable list.
pub fn vars(names: &[&str]) -> Arc<Vec<String>> {
    Arc::new(names.iter().map(|s| s.to_string()).collect())
}
