//! The group of a small-step planar model, orbit sums, and the empirical
//! orbit-summability certificate.

use crate::error::{Error, Result};
use crate::exactalg::poly::{vars, Exp};
use crate::exactalg::ratfunc::compose_poly;
use crate::exactalg::rational::{fmt_rational, q};
use crate::exactalg::{Cyclo, Field, LaurentPoly, Radical, RatFunc};
use crate::model::Model;
use crate::oracle;
use crate::saddle::Twist;
use num_rational::BigRational;
use smallvec::smallvec;
use std::fmt;

type Poly = LaurentPoly<BigRational>;
type Rf = RatFunc<BigRational>;

/// `K = a(x) y² + b(x) y + c(x) = ã(y) x² + b̃(y) x + c̃(y)`.
///
/// The untilded triple lives in variables `(x, t)`, the tilded one in `(y, t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDecomposition {
    pub a: Poly,
    pub b: Poly,
    pub c: Poly,
    pub a_tilde: Poly,
    pub b_tilde: Poly,
    pub c_tilde: Poly,
}

impl KernelDecomposition {
    /// Reassembles `K` in `(x, y, t)` from either triple.
    pub fn reassemble(&self, tilde: bool) -> Poly {
        let v = vars(&["x", "y", "t"]);
        let (triple, map, other) = if tilde {
            ([&self.a_tilde, &self.b_tilde, &self.c_tilde], [1usize, 2], 0usize)
        } else {
            ([&self.a, &self.b, &self.c], [0usize, 2], 1usize)
        };
        let mut out = LaurentPoly::zero_in(v.clone());
        for (p, e) in triple.into_iter().zip([2, 1, 0]) {
            let mut m: Exp = smallvec![0; 3];
            m[other] = e;
            out = out.add(
                &p.embed(v.clone(), &map)
                    .mul(&LaurentPoly::monomial_in(v.clone(), &m, q(1, 1))),
            );
        }
        out
    }
}

fn require_planar_small(model: &Model) -> Result<Vec<BigRational>> {
    if model.dim() != 2 || !model.is_small_steps() {
        return Err(Error::NotSmallSteps);
    }
    model
        .rational_weights()
        .ok_or_else(|| Error::Unsupported("group construction needs rational weights".into()))
}

/// `K(x,y) = xy(1 − tS(x,y))` and its coefficient triples.
pub fn kernel(model: &Model) -> Result<(Poly, KernelDecomposition)> {
    let w = require_planar_small(model)?;
    let v3 = vars(&["x", "y", "t"]);
    let mut k = LaurentPoly::monomial_in(v3.clone(), &[1, 1, 0], q(1, 1));
    let vx = vars(&["x", "t"]);
    let vy = vars(&["y", "t"]);
    let mut tri = [
        LaurentPoly::zero_in(vx.clone()),
        LaurentPoly::zero_in(vx.clone()),
        LaurentPoly::zero_in(vx.clone()),
    ];
    let mut tri_t = [
        LaurentPoly::zero_in(vy.clone()),
        LaurentPoly::zero_in(vy.clone()),
        LaurentPoly::zero_in(vy.clone()),
    ];
    tri[1].add_term(smallvec![1, 0], q(1, 1));
    tri_t[1].add_term(smallvec![1, 0], q(1, 1));
    for (s, ws) in model.steps().iter().zip(&w) {
        let (i, j) = (s.offsets[0] + 1, s.offsets[1] + 1);
        k.add_term(smallvec![i, j, 1], -ws.clone());
        tri[(2 - j) as usize].add_term(smallvec![i, 1], -ws.clone());
        tri_t[(2 - i) as usize].add_term(smallvec![j, 1], -ws.clone());
    }
    let [a, b, c] = tri;
    let [a_tilde, b_tilde, c_tilde] = tri_t;
    Ok((
        k,
        KernelDecomposition {
            a,
            b,
            c,
            a_tilde,
            b_tilde,
            c_tilde,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Phi,
    Psi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    pub images: Vec<Rf>,
    /// Generators in order of application.
    pub word: Vec<Generator>,
    pub sign: i32,
}

impl GroupElement {
    pub fn identity(v: &std::sync::Arc<Vec<String>>) -> Self {
        GroupElement {
            images: (0..v.len()).map(|i| RatFunc::var_in(v.clone(), i)).collect(),
            word: Vec::new(),
            sign: 1,
        }
    }

    /// `self ∘ inner`: apply `inner`, then `self`.
    pub fn after(&self, inner: &GroupElement) -> Result<GroupElement> {
        let images = self
            .images
            .iter()
            .map(|im| im.compose(&inner.images))
            .collect::<Result<Vec<_>>>()?;
        let mut word = inner.word.clone();
        word.extend(&self.word);
        let sign = if word.len().is_multiple_of(2) { 1 } else { -1 };
        Ok(GroupElement { images, word, sign })
    }

    /// `f ∘ g` for a rational function `f`.
    pub fn act(&self, f: &Rf) -> Result<Rf> {
        f.compose(&self.images)
    }

    /// Largest total degree of any numerator or denominator.
    pub fn degree(&self) -> i64 {
        self.images
            .iter()
            .flat_map(|r| [r.num(), r.den()])
            .filter_map(|p| {
                let hi = p.total_degree()?;
                let lo = p.min_total_degree()?;
                Some(hi.abs().max(lo.abs()))
            })
            .max()
            .unwrap_or(0)
    }

    /// Exact comparison, after a cheap rejection by evaluation at a fixed
    /// generic point.
    pub fn same_map(&self, other: &GroupElement) -> bool {
        let probe: Vec<BigRational> = [q(3, 7), q(5, 11), q(13, 17)][..self.images.len()].to_vec();
        for (a, b) in self.images.iter().zip(&other.images) {
            if let (Ok(va), Ok(vb)) = (a.eval(&probe), b.eval(&probe)) {
                if va != vb {
                    return false;
                }
            }
        }
        self.images == other.images
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: String = self
            .word
            .iter()
            .map(|g| match g {
                Generator::Phi => "Φ",
                Generator::Psi => "Ψ",
            })
            .collect();
        write!(
            f,
            "[{}] ({}, {})",
            if w.is_empty() { "id" } else { &w },
            self.images[0],
            self.images[1]
        )
    }
}

/// `Φ(x,y) = (x, c(x)/(a(x) y))` and `Ψ(x,y) = (c̃(y)/(ã(y) x), y)`.
///
/// The factor `t` cancels in both quotients.
pub fn generators(model: &Model) -> Result<(GroupElement, GroupElement)> {
    let w = require_planar_small(model)?;
    let v = vars(&["x", "y"]);
    let mut top = [LaurentPoly::zero_in(v.clone()), LaurentPoly::zero_in(v.clone())];
    let mut bottom = [LaurentPoly::zero_in(v.clone()), LaurentPoly::zero_in(v.clone())];
    for (s, ws) in model.steps().iter().zip(&w) {
        let (i, j) = (s.offsets[0], s.offsets[1]);
        match j {
            1 => top[0].add_term(smallvec![i, 0], ws.clone()),
            -1 => bottom[0].add_term(smallvec![i, 0], ws.clone()),
            _ => {}
        }
        match i {
            1 => top[1].add_term(smallvec![0, j], ws.clone()),
            -1 => bottom[1].add_term(smallvec![0, j], ws.clone()),
            _ => {}
        }
    }
    if top.iter().chain(&bottom).any(|p| p.is_zero()) {
        return Err(Error::DegenerateModel);
    }
    let x = RatFunc::var_in(v.clone(), 0);
    let y = RatFunc::var_in(v.clone(), 1);
    let y_img = RatFunc::new(bottom[0].clone(), top[0].mul(&LaurentPoly::var_in(v.clone(), 1)))?;
    let x_img = RatFunc::new(bottom[1].clone(), top[1].mul(&LaurentPoly::var_in(v.clone(), 0)))?;
    Ok((
        GroupElement {
            images: vec![x.clone(), y_img],
            word: vec![Generator::Phi],
            sign: -1,
        },
        GroupElement {
            images: vec![x_img, y],
            word: vec![Generator::Psi],
            sign: -1,
        },
    ))
}

/// All elements generated by `Φ` and `Ψ`, identity first.
pub fn group_closure(model: &Model, max_order: usize) -> Result<Vec<GroupElement>> {
    let (phi, psi) = generators(model)?;
    let v = model.vars();
    let mut elements = vec![GroupElement::identity(&v)];
    let mut frontier = 0;
    while frontier < elements.len() {
        let g = elements[frontier].clone();
        frontier += 1;
        for gen in [&phi, &psi] {
            if g.word.last() == gen.word.last() {
                continue;
            }
            let h = gen.after(&g)?;
            if h.degree() > DEGREE_CAP {
                return Err(Error::GroupInfinite(max_order));
            }
            if !elements.iter().any(|e| e.same_map(&h)) {
                if elements.len() == max_order {
                    return Err(Error::GroupInfinite(max_order));
                }
                elements.push(h);
            }
        }
    }
    Ok(elements)
}

pub const DEFAULT_MAX_ORDER: usize = 24;

/// Image degrees of finite groups stay small; unbounded growth means the
/// closure cannot terminate.
const DEGREE_CAP: i64 = 32;

/// Alternating orbit sum of `x^{u+1} y^{v+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSum {
    pub numerator: Rf,
    pub monomial: Vec<i32>,
}

pub fn orbit_sum(model: &Model, u: u32, v: u32) -> Result<OrbitSum> {
    let group = group_closure(model, DEFAULT_MAX_ORDER)?;
    orbit_sum_over(&group, u, v)
}

pub fn orbit_sum_over(group: &[GroupElement], u: u32, v: u32) -> Result<OrbitSum> {
    let vv = group[0].images[0].vars().clone();
    let mut acc = RatFunc::from_poly(LaurentPoly::zero_in(vv));
    for g in group {
        let t = g.images[0].powi(u as i32 + 1)?.mul(&g.images[1].powi(v as i32 + 1)?);
        acc = if g.sign > 0 { acc.add(&t) } else { acc.sub(&t) };
    }
    Ok(OrbitSum {
        numerator: acc,
        monomial: vec![u as i32 + 1, v as i32 + 1],
    })
}

/// `S ∘ g = S` as rational functions.
pub fn fixes_step_polynomial(model: &Model, g: &GroupElement) -> Result<bool> {
    let s = model.step_polynomial_q()?;
    Ok(compose_poly(&s, &g.images)? == RatFunc::from_poly(s))
}

fn twisted(f: &Rf, twist: &Twist) -> Result<RatFunc<Cyclo>> {
    let tw = |p: &Poly| {
        p.map_terms(p.vars().clone(), |e, c| {
            let e64: Vec<i64> = e.iter().map(|&k| k as i64).collect();
            (
                e.clone(),
                Cyclo::from_radical(Radical::rational(c.clone())).mul(&Cyclo::from_root(&twist.character(&e64))),
            )
        })
    };
    RatFunc::new(tw(f.num()), tw(f.den()))
}

/// `g_i(α·x) = α_i g_i(x)` for every coordinate image of `g`.
pub fn twist_equivariant(g: &GroupElement, twist: &Twist) -> Result<bool> {
    for (i, im) in g.images.iter().enumerate() {
        let lhs = twisted(im, twist)?;
        let rhs = im
            .map_coeffs(|c| Cyclo::from_radical(Radical::rational(c.clone())))
            .scale(&Cyclo::from_root(&twist.alphas[i]));
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateFailure {
    pub end: Vec<i64>,
    pub n: usize,
    pub oracle: BigRational,
    pub extracted: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub passed: bool,
    pub checked: usize,
    pub failure: Option<CertificateFailure>,
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "pass ({} coefficients)", self.checked),
            Some(c) => write!(
                f,
                "fail at end {:?}, n = {}: oracle {} vs extracted {}",
                c.end,
                c.n,
                fmt_rational(&c.oracle),
                fmt_rational(&c.extracted)
            ),
        }
    }
}

/// Terms of a polynomial with total degree at most `t`.
fn truncate_degree(p: &Poly, t: i64) -> Poly {
    LaurentPoly::from_terms(
        p.vars().clone(),
        p.terms()
            .filter(|(e, _)| e.iter().map(|&x| x as i64).sum::<i64>() <= t)
            .map(|(e, c)| (e.clone(), c.clone())),
    )
}

/// Expansion of `1/den` at the origin up to total degree `t`, as a monomial
/// shift times a power series.
fn inverse_series(den: &Poly, t: i64) -> Result<(Exp, Poly)> {
    let m = den.min_exponents().ok_or(Error::DivisionByZero)?;
    let neg: Vec<i32> = m.iter().map(|x| -x).collect();
    let d = den.shift(&neg);
    let d0 = d.constant_term();
    let inv0 = d0
        .inv()
        .ok_or_else(|| Error::Unsupported("denominator vanishes at the origin".into()))?;
    let one = LaurentPoly::constant_in(den.vars().clone(), q(1, 1));
    let e = one.sub(&d.scale(&inv0));
    let mut acc = one.clone();
    let mut power = one;
    for _ in 0..t.max(0) {
        power = truncate_degree(&power.mul(&e), t);
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power);
    }
    Ok((neg.into_iter().collect(), acc.scale(&inv0)))
}

/// `[x^{b+1}] Sⁿ N` for every `b` in `ends` (exponents shifted by one in each
/// coordinate), with `N` expanded at the origin.
pub fn extract_coefficients(s: &Poly, n: usize, numerator: &Rf, ends: &[Vec<i64>]) -> Result<Vec<BigRational>> {
    let (shift, _) = inverse_series(numerator.den(), 0)?;
    let a = s.pow(n as u32).mul(numerator.num()).shift(&shift);
    let top = ends
        .iter()
        .map(|b| b.iter().map(|x| x + 1).sum::<i64>())
        .max()
        .unwrap_or(0);
    let low = a.min_total_degree().unwrap_or(0);
    let (_, series) = inverse_series(numerator.den(), top - low)?;
    let full = a.mul(&series);
    Ok(ends
        .iter()
        .map(|b| {
            let e: Vec<i32> = b.iter().map(|&x| x as i32 + 1).collect();
            full.coeff(&e)
        })
        .collect())
}

/// Compares coefficient extraction from `Sⁿ N` against oracle counts from
/// `start` for all ends with coordinate sum at most `depth` and `n ≤ depth`.
pub fn certify_with_numerator(model: &Model, numerator: &Rf, start: &[i64], depth: usize) -> Result<Certificate> {
    let s = model.step_polynomial_q()?;
    let table = oracle::count_paths(model, start, depth)?;
    let ends = endpoints_up_to(model.dim(), depth as i64);
    let mut checked = 0;
    for n in 0..=depth {
        let got = extract_coefficients(&s, n, numerator, &ends)?;
        for (b, g) in ends.iter().zip(got) {
            let want = table.get(b, n);
            if want != g {
                return Ok(Certificate {
                    passed: false,
                    checked,
                    failure: Some(CertificateFailure {
                        end: b.clone(),
                        n,
                        oracle: want,
                        extracted: g,
                    }),
                });
            }
            checked += 1;
        }
    }
    Ok(Certificate {
        passed: true,
        checked,
        failure: None,
    })
}

/// Orbit-sum certificate from the starting point `(u, v)`.
pub fn certify_orbit_summable(model: &Model, u: u32, v: u32, depth: usize) -> Result<Certificate> {
    let n = orbit_sum(model, u, v)?;
    certify_with_numerator(model, &n.numerator, &[u as i64, v as i64], depth)
}

/// Lattice points of the orthant with coordinate sum at most `depth`.
pub fn endpoints_up_to(d: usize, depth: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                let used: i64 = p.iter().sum();
                (0..=depth - used).map(move |k| {
                    let mut q = p.clone();
                    q.push(k);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rational::qi;
    use crate::saddle::associated_saddles;

    fn sw() -> Model {
        Model::unweighted("SW", &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]).unwrap()
    }
    fn gb() -> Model {
        Model::unweighted("GB", &[&[-1, 1], &[1, -1], &[-1, 0], &[1, 0]]).unwrap()
    }
    fn tandem() -> Model {
        Model::unweighted("Tandem", &[&[-1, 0], &[0, 1], &[1, -1]]).unwrap()
    }
    fn kreweras() -> Model {
        Model::unweighted("Kreweras", &[&[-1, 0], &[0, -1], &[1, 1]]).unwrap()
    }

    fn poly(terms: &[(i64, i32, i32)]) -> Poly {
        LaurentPoly::from_terms(
            vars(&["x", "y"]),
            terms.iter().map(|&(c, i, j)| (smallvec![i, j], qi(c))),
        )
    }

    #[test]
    fn kernel_reassembles() {
        for m in [sw(), gb(), tandem()] {
            let (k, dec) = kernel(&m).unwrap();
            assert_eq!(dec.reassemble(false), k);
            assert_eq!(dec.reassemble(true), k);
            for p in [&dec.a, &dec.b, &dec.c, &dec.a_tilde, &dec.b_tilde, &dec.c_tilde] {
                assert!(!p.is_zero());
            }
        }
        let (_, dec) = kernel(&sw()).unwrap();
        // a(x) = -t x, c(x) = -t x
        assert_eq!(dec.a, LaurentPoly::monomial_in(vars(&["x", "t"]), &[1, 1], qi(-1)));
        assert_eq!(dec.c, dec.a);
        let app_a = Model::unweighted("A", &[&[1, 0], &[-1, 0], &[0, -1], &[-2, 1]]).unwrap();
        assert_eq!(kernel(&app_a).unwrap_err(), Error::NotSmallSteps);
    }

    #[test]
    fn generators_are_involutions_fixing_s() {
        for m in [sw(), gb(), tandem(), kreweras()] {
            let (phi, psi) = generators(&m).unwrap();
            for g in [&phi, &psi] {
                let sq = g.after(g).unwrap();
                assert!(sq.same_map(&GroupElement::identity(&m.vars())));
                assert!(fixes_step_polynomial(&m, g).unwrap());
            }
        }
        let (phi, _) = generators(&sw()).unwrap();
        assert_eq!(
            phi.images[1],
            RatFunc::new(poly(&[(1, 0, 0)]), poly(&[(1, 0, 1)])).unwrap()
        );
    }

    #[test]
    fn orders() {
        assert_eq!(group_closure(&sw(), 24).unwrap().len(), 4);
        assert_eq!(group_closure(&gb(), 24).unwrap().len(), 8);
        assert_eq!(group_closure(&tandem(), 24).unwrap().len(), 6);
        assert_eq!(group_closure(&kreweras(), 24).unwrap().len(), 6);
        for g in group_closure(&gb(), 24).unwrap() {
            assert!(fixes_step_polynomial(&gb(), &g).unwrap());
        }
        // steps {N, E, SW-ish} with an infinite group
        let inf = Model::unweighted("inf", &[&[0, 1], &[1, 0], &[-1, -1], &[-1, 0]]).unwrap();
        assert_eq!(group_closure(&inf, 24).unwrap_err(), Error::GroupInfinite(24));
    }

    #[test]
    fn orbit_sums() {
        let n = orbit_sum(&gb(), 0, 0).unwrap().numerator;
        let expect = poly(&[
            (1, 1, 1),
            (-1, 3, -1),
            (-1, -1, 2),
            (1, -3, 2),
            (1, 3, -2),
            (-1, 1, -2),
            (-1, -3, 1),
            (1, -1, -1),
        ]);
        assert_eq!(n, RatFunc::from_poly(expect));
        let s = orbit_sum(&sw(), 0, 0).unwrap().numerator;
        let xm = poly(&[(1, 1, 0), (-1, -1, 0)]);
        let ym = poly(&[(1, 0, 1), (-1, 0, -1)]);
        assert_eq!(s, RatFunc::from_poly(xm.mul(&ym)));
        assert!(orbit_sum(&kreweras(), 0, 0).unwrap().numerator.is_zero());
    }

    #[test]
    fn twist_equivariance() {
        for m in [sw(), gb(), tandem()] {
            let (phi, psi) = generators(&m).unwrap();
            for t in associated_saddles(&m).unwrap() {
                assert!(twist_equivariant(&phi, &t).unwrap());
                assert!(twist_equivariant(&psi, &t).unwrap());
            }
        }
    }

    #[test]
    fn certificates() {
        assert!(certify_orbit_summable(&gb(), 0, 0, 8).unwrap().passed);
        assert!(certify_orbit_summable(&sw(), 2, 0, 8).unwrap().passed);
        assert!(certify_orbit_summable(&tandem(), 0, 0, 6).unwrap().passed);
        assert!(certify_orbit_summable(&tandem().reverse(), 1, 0, 6).unwrap().passed);
        // flip one sign of the GB numerator
        let n = orbit_sum(&gb(), 0, 0).unwrap().numerator;
        let bad = n.sub(&RatFunc::from_poly(poly(&[(2, 1, 1)])));
        let c = certify_with_numerator(&gb(), &bad, &[0, 0], 8).unwrap();
        assert!(!c.passed);
        assert!(c.failure.unwrap().n <= 2);
    }

    #[test]
    fn rational_numerators_expand_at_origin() {
        // N, NE, NW, S, E, W: y ↦ 1/(y (x + 1 + 1/x))
        let m = Model::unweighted("VS", &[&[0, 1], &[1, 1], &[-1, 1], &[0, -1], &[1, 0], &[-1, 0]]).unwrap();
        let n = orbit_sum(&m, 0, 0).unwrap().numerator;
        assert!(n.as_poly().is_none());
        assert!(certify_orbit_summable(&m, 0, 0, 6).unwrap().passed);
    }
}
