//! Real radical extensions of the rationals.
//!
//! An element is a rational combination of monomials `Π p^(a/b)` over
//! distinct primes `p` with exponents in `(0, 1)`. Such monomials are
//! linearly independent over Q, so the sparse representation is canonical
//! and equality is structural.

use super::ball::Ball;
use super::linalg;
use super::rational::{fmt_rational, parse_rational};
use super::Field;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use std::collections::BTreeMap;
use std::fmt;

/// `Π p^(num/den)` with `0 < num < den`, sorted by prime.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct RadMono(Vec<(u64, u32, u32)>);

impl RadMono {
    pub fn unit() -> Self {
        RadMono(Vec::new())
    }

    pub fn is_unit(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(u64, u32, u32)] {
        &self.0
    }

    /// Product of monomials, with the integer factor split off.
    fn mul(&self, other: &RadMono) -> (RadMono, BigInt) {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let mut factor = BigInt::from(1);
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            if j == other.0.len() || (i < self.0.len() && self.0[i].0 < other.0[j].0) {
                out.push(self.0[i]);
                i += 1;
            } else if i == self.0.len() || other.0[j].0 < self.0[i].0 {
                out.push(other.0[j]);
                j += 1;
            } else {
                let (p, n1, d1) = self.0[i];
                let (_, n2, d2) = other.0[j];
                let mut n = (n1 as u64) * (d2 as u64) + (n2 as u64) * (d1 as u64);
                let d = (d1 as u64) * (d2 as u64);
                if n >= d {
                    n -= d;
                    factor *= BigInt::from(p);
                }
                if n > 0 {
                    let g = n.gcd(&d);
                    out.push((p, (n / g) as u32, (d / g) as u32));
                }
                i += 1;
                j += 1;
            }
        }
        (RadMono(out), factor)
    }

    /// Inverse monomial as `(mono, rational factor)`.
    fn inv(&self) -> (RadMono, BigRational) {
        let mut out = Vec::with_capacity(self.0.len());
        let mut den = BigInt::from(1);
        for &(p, n, d) in &self.0 {
            out.push((p, d - n, d));
            den *= BigInt::from(p);
        }
        (RadMono(out), BigRational::new(BigInt::from(1), den))
    }

    /// Lower and upper rational bounds at `bits` of precision.
    fn enclose(&self, bits: u32) -> (BigRational, BigRational) {
        let mut lo = BigRational::one();
        let mut hi = BigRational::one();
        for &(p, n, d) in &self.0 {
            let scale = BigInt::from(1) << ((bits as usize) * d as usize);
            let v = num_traits::pow(BigInt::from(p), n as usize) * scale;
            let r = v.nth_root(d);
            let den = BigInt::from(1) << bits as usize;
            lo *= BigRational::new(r.clone(), den.clone());
            hi *= BigRational::new(r + 1, den);
        }
        (lo, hi)
    }

    fn to_f64(&self) -> f64 {
        self.0
            .iter()
            .map(|&(p, n, d)| (p as f64).powf(n as f64 / d as f64))
            .product()
    }
}

impl fmt::Display for RadMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(p, n, d)| format!("rad({},{}/{})", p, n, d))
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Element of a real radical extension of Q.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Radical {
    terms: Vec<(RadMono, BigRational)>,
}

fn factor_small(n: &BigInt) -> Option<Vec<(u64, i64)>> {
    let mut n = n.abs();
    let mut out = Vec::new();
    if num_traits::Zero::is_zero(&n) {
        return None;
    }
    let mut p: u64 = 2;
    while n > BigInt::from(1) {
        let pb = BigInt::from(p);
        if &pb * &pb > n {
            let last = n.to_u64()?;
            out.push((last, 1));
            break;
        }
        let mut e = 0;
        while num_traits::Zero::is_zero(&(&n % &pb)) {
            n /= &pb;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
        if p > 2_000_000 {
            return None;
        }
    }
    Some(out)
}

impl Radical {
    pub fn rational(q: BigRational) -> Self {
        if q.is_zero() {
            Radical { terms: Vec::new() }
        } else {
            Radical {
                terms: vec![(RadMono::unit(), q)],
            }
        }
    }

    pub fn int(n: i64) -> Self {
        Self::rational(BigRational::from_integer(n.into()))
    }

    fn from_map(map: BTreeMap<RadMono, BigRational>) -> Self {
        Radical {
            terms: map.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn terms(&self) -> &[(RadMono, BigRational)] {
        &self.terms
    }

    pub fn is_rational(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_unit())
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 if self.terms[0].0.is_unit() => Some(self.terms[0].1.clone()),
            _ => None,
        }
    }

    /// `r^(num/den)` for a positive rational `r`.
    pub fn root(r: &BigRational, num: i64, den: u32) -> Option<Self> {
        if !r.is_positive() || den == 0 {
            return None;
        }
        let mut coeff = BigRational::one();
        let mut mono = RadMono::unit();
        let mut parts = factor_small(r.numer())?;
        parts.extend(factor_small(r.denom())?.into_iter().map(|(p, e)| (p, -e)));
        for (p, e) in parts {
            let total = e * num;
            let d = den as i64;
            let whole = Integer::div_floor(&total, &d);
            let frac = total - whole * d;
            let pb = BigRational::from_integer(BigInt::from(p));
            let pw = num_traits::pow::pow(pb, whole.unsigned_abs() as usize);
            if whole >= 0 {
                coeff *= pw;
            } else {
                coeff /= pw;
            }
            if frac != 0 {
                let g = frac.gcd(&d);
                let (m, f) = mono.mul(&RadMono(vec![(p, (frac / g) as u32, (d / g) as u32)]));
                mono = m;
                coeff *= BigRational::from_integer(f);
            }
        }
        Some(Radical {
            terms: vec![(mono, coeff)],
        })
    }

    /// Square root of a single-term positive element.
    pub fn sqrt(&self) -> Option<Self> {
        if self.terms.is_empty() {
            return Some(self.clone());
        }
        if self.terms.len() != 1 {
            return None;
        }
        let (mono, c) = &self.terms[0];
        let mut out = Radical::root(c, 1, 2)?;
        for &(p, n, d) in &mono.0 {
            let pr = BigRational::from_integer(BigInt::from(p));
            out = Field::mul(&out, &Radical::root(&pr, n as i64, 2 * d)?);
        }
        Some(out)
    }

    /// Rational power of a single-term positive element.
    pub fn pow_frac(&self, num: i64, den: u32) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (mono, c) = &self.terms[0];
        let mut out = Radical::root(c, num, den)?;
        for &(p, n, d) in &mono.0 {
            let pr = BigRational::from_integer(BigInt::from(p));
            out = Field::mul(&out, &Radical::root(&pr, n as i64 * num, d * den)?);
        }
        Some(out)
    }

    pub fn to_ball(&self, prec: u32) -> Ball {
        let bits = prec + 16;
        let mut acc = Ball::exact(BigRational::zero(), prec);
        for (mono, c) in &self.terms {
            let (lo, hi) = mono.enclose(bits);
            let mid = (&lo + &hi) / BigRational::from_integer(2.into());
            let rad = (&hi - &lo) / BigRational::from_integer(2.into());
            let b = Ball::new(mid * c, rad * c.abs(), prec);
            acc = acc.add(&b);
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| super::rational::to_f64(c) * m.to_f64())
            .sum()
    }

    /// Sign, decided by successive refinement (exact because the
    /// representation is canonical, so nonzero elements are nonzero reals).
    pub fn signum(&self) -> i32 {
        if let Some(q) = self.as_rational() {
            return super::rational::sign(&q);
        }
        let mut prec = 64;
        loop {
            let b = self.to_ball(prec);
            if let Some(s) = b.sign() {
                return s;
            }
            prec *= 2;
            assert!(prec <= 1 << 16, "radical sign refinement diverged");
        }
    }

    /// Distinct primes and exponent denominators used by this element.
    fn prime_dens(&self, into: &mut BTreeMap<u64, u32>) {
        for (m, _) in &self.terms {
            for &(p, _, d) in &m.0 {
                let e = into.entry(p).or_insert(1);
                *e = e.lcm(&d);
            }
        }
    }

    /// Parses the display form: terms `c`, `c*rad(r,a/b)*...` joined by ` + `.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s.is_empty() {
            return None;
        }
        let mut acc = Radical::zero();
        for term in s.split(" + ") {
            acc = Field::add(&acc, &parse_term(term.trim())?);
        }
        Some(acc)
    }
}

fn parse_term(t: &str) -> Option<Radical> {
    let mut acc = Radical::one();
    for (i, factor) in split_factors(t).into_iter().enumerate() {
        let f = factor.trim();
        if let Some(inner) = f.strip_prefix("rad(").and_then(|x| x.strip_suffix(')')) {
            let (r, e) = inner.split_once(',')?;
            let r = parse_rational(r)?;
            let e = parse_rational(e)?;
            let den = e.denom().to_u32()?;
            let num = e.numer().to_i64()?;
            acc = Field::mul(&acc, &Radical::root(&r, num, den)?);
        } else if i == 0 || !f.is_empty() {
            acc = Field::mul(&acc, &Radical::rational(parse_rational(f)?));
        }
    }
    Some(acc)
}

/// Splits on `*` outside parentheses.
pub(crate) fn split_factors(t: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in t.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '*' if depth == 0 => {
                out.push(&t[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&t[start..]);
    out
}

impl fmt::Display for Radical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if m.is_unit() {
                    fmt_rational(c)
                } else {
                    format!("{}*{}", fmt_rational(c), m)
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Field for Radical {
    fn zero() -> Self {
        Radical { terms: Vec::new() }
    }
    fn one() -> Self {
        Radical::int(1)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn add(&self, other: &Self) -> Self {
        if self.terms.is_empty() {
            return other.clone();
        }
        if other.terms.is_empty() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return Radical::rational(a + b);
        }
        let mut map: BTreeMap<RadMono, BigRational> = self.terms.iter().cloned().collect();
        for (m, c) in &other.terms {
            let e = map.entry(m.clone()).or_insert_with(BigRational::zero);
            *e += c;
        }
        Radical::from_map(map)
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn mul(&self, other: &Self) -> Self {
        if self.terms.is_empty() || other.terms.is_empty() {
            return Radical::zero();
        }
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return Radical::rational(a * b);
        }
        let mut map: BTreeMap<RadMono, BigRational> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let (m, f) = m1.mul(m2);
                let e = map.entry(m).or_insert_with(BigRational::zero);
                *e += c1 * c2 * BigRational::from_integer(f);
            }
        }
        Radical::from_map(map)
    }
    fn neg(&self) -> Self {
        Radical {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
    fn inv(&self) -> Option<Self> {
        match self.terms.len() {
            0 => None,
            1 => {
                let (m, c) = &self.terms[0];
                let (mi, f) = m.inv();
                Some(Radical {
                    terms: vec![(mi, f / c)],
                })
            }
            _ => {
                // Solve self * x = 1 in the span of the monomial basis of the
                // smallest radical field containing self.
                let mut dens = BTreeMap::new();
                self.prime_dens(&mut dens);
                let mut basis = vec![RadMono::unit()];
                for (&p, &d) in &dens {
                    let mut next = Vec::new();
                    for b in &basis {
                        for j in 0..d {
                            if j == 0 {
                                next.push(b.clone());
                            } else {
                                let g = (j as u64).gcd(&(d as u64)) as u32;
                                let (m, _) = b.mul(&RadMono(vec![(p, j / g, d / g)]));
                                next.push(m);
                            }
                        }
                    }
                    basis = next;
                }
                let index: BTreeMap<RadMono, usize> = basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
                let n = basis.len();
                let mut mat = vec![vec![BigRational::zero(); n]; n];
                for (j, b) in basis.iter().enumerate() {
                    let prod = self.mul(&Radical {
                        terms: vec![(b.clone(), BigRational::one())],
                    });
                    for (m, c) in &prod.terms {
                        let i = *index.get(m)?;
                        mat[i][j] = c.clone();
                    }
                }
                let mut rhs = vec![BigRational::zero(); n];
                rhs[0] = BigRational::one();
                let x = linalg::solve(&mat, &rhs)?;
                let mut map = BTreeMap::new();
                for (b, c) in basis.into_iter().zip(x) {
                    map.insert(b, c);
                }
                Some(Radical::from_map(map))
            }
        }
    }
    fn from_rational(q: &BigRational) -> Self {
        Radical::rational(q.clone())
    }
    fn to_rational(&self) -> Option<BigRational> {
        self.as_rational()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rational::{q, qi};
    use proptest::prelude::*;

    fn sqrt3() -> Radical {
        Radical::root(&qi(3), 1, 2).unwrap()
    }

    #[test]
    fn sqrt3_squared() {
        let s = sqrt3();
        assert_eq!(s.mul(&s), Radical::int(3));
        assert_eq!(s.to_string(), "1*rad(3,1/2)");
    }

    #[test]
    fn roots_normalize() {
        // 12^(1/2) = 2*3^(1/2)
        let r = Radical::root(&qi(12), 1, 2).unwrap();
        assert_eq!(r, Radical::int(2).mul(&sqrt3()));
        // 2^(3/4) * 2^(3/4) = 2 * 2^(1/2)
        let a = Radical::root(&qi(2), 3, 4).unwrap();
        let b = Radical::root(&qi(2), 1, 2).unwrap();
        assert_eq!(a.mul(&a), Radical::int(2).mul(&b));
        // (1/3)^(1/2) = 3^(1/2)/3
        let c = Radical::root(&q(1, 3), 1, 2).unwrap();
        assert_eq!(c, sqrt3().scale(&q(1, 3)));
        let d = Radical::root(&qi(3), -3, 2).unwrap();
        assert_eq!(d.mul(&sqrt3().pow(3)), Radical::one());
    }

    #[test]
    fn inverse_of_sum() {
        let x = Radical::one().add(&sqrt3());
        let y = x.inv().unwrap();
        assert_eq!(x.mul(&y), Radical::one());
        let f = Radical::root(&qi(2), 1, 4).unwrap();
        let z = Radical::int(3).sub(&f).add(&f.mul(&f).mul(&f));
        assert_eq!(z.mul(&z.inv().unwrap()), Radical::one());
    }

    #[test]
    fn signs_and_sqrt() {
        let x = sqrt3().sub(&Radical::rational(q(17, 10)));
        assert_eq!(x.signum(), 1);
        assert_eq!(x.neg().signum(), -1);
        let s = Radical::root(&qi(2), 3, 2).unwrap().sqrt().unwrap();
        assert_eq!(s, Radical::root(&qi(2), 3, 4).unwrap());
    }

    #[test]
    fn parse_round_trip() {
        let x = Radical::one().add(&sqrt3().scale(&q(-2, 5)));
        assert_eq!(Radical::parse(&x.to_string()).unwrap(), x);
        assert_eq!(Radical::parse("rad(12,1/2)").unwrap(), sqrt3().scale(&qi(2)));
    }

    proptest! {
        #[test]
        fn field_axioms(a in -20i64..20, b in -20i64..20, c in 1i64..20, e in 1u32..4) {
            let r = Radical::root(&qi(2), 1, 4).unwrap().pow(e);
            let x = Radical::int(a).add(&r);
            let y = Radical::int(b).mul(&r).add(&Radical::int(c));
            let z = sqrt3().add(&Radical::int(a));
            prop_assert_eq!(x.add(&y).mul(&z), x.mul(&z).add(&y.mul(&z)));
            prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
            if !y.is_zero() {
                prop_assert_eq!(x.mul(&y).div(&y).unwrap(), x.clone());
            }
            let f = x.to_f64() * y.to_f64();
            prop_assert!((x.mul(&y).to_f64() - f).abs() < 1e-9 * (1.0 + f.abs()));
        }
    }
}
