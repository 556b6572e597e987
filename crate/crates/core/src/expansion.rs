//! Saddle-point engine.
//!
//! Counts are `q(A → B; n) = [x^{B+1}] S(x)ⁿ N(x)`. Substituting
//! `x = x₀ e^{i s/√n}` into the Cauchy integral turns every factor into a
//! graded series in `ε = n^{-1/2}`. All series here are kept in *real form*:
//! they are built from `x₀ e^{u}` with real `u`, and a monomial of total
//! degree `D` in the `s` variables carries an implicit `i^D`. That factor is
//! applied only when integrating against the Gaussian, where odd degrees
//! vanish and even ones contribute `(−1)^{D/2}`.

use crate::error::{Error, Result};
use crate::exactalg::ball::DEFAULT_PREC;
use crate::exactalg::poly::Exp;
use crate::exactalg::rational::{factorial, q, qi};
use crate::exactalg::{
    linalg, Ball, Cyclo, Field, FieldElem, GradedSeries, LaurentPoly, Radical, RatFunc, RootOfUnity, ScaledCoefficient,
};
use crate::group::{self, GroupElement};
use crate::model::{correlation_from_moments, Model};
use crate::saddle::{self, QForm, Twist};
use num_rational::BigRational;
use rayon::prelude::*;
use smallvec::SmallVec;
use std::collections::HashMap;
use std::sync::Arc;

/// Largest series truncation the exponent search will try.
pub const MAX_TRUNCATION: usize = 64;

/// Names of the integration variables.
pub fn s_vars(d: usize) -> Arc<Vec<String>> {
    Arc::new((1..=d).map(|i| format!("s{}", i)).collect())
}

/// Names of the endpoint variables: `k, l, m` up to three dimensions.
pub fn endpoint_vars(d: usize) -> Arc<Vec<String>> {
    if d <= 3 {
        Arc::new(["k", "l", "m"][..d].iter().map(|s| s.to_string()).collect())
    } else {
        Arc::new((1..=d).map(|i| format!("k{}", i)).collect())
    }
}

/// Endpoint variables followed by start variables (`k, l, u, v` in the plane).
pub fn endpoint_start_vars(d: usize) -> Arc<Vec<String>> {
    let mut v: Vec<String> = endpoint_vars(d).iter().cloned().collect();
    if d == 2 {
        v.extend(["u".to_string(), "v".to_string()]);
    } else {
        v.extend((1..=d).map(|i| format!("a{}", i)));
    }
    Arc::new(v)
}

fn inv_factorial<C: Field>(j: usize) -> C {
    C::from_rational(&BigRational::new(1.into(), factorial(j as u64)))
}

/// `Σ_k e_k s_k` as a polynomial.
fn linear_form<C: Field>(v: &Arc<Vec<String>>, e: &[i32]) -> LaurentPoly<C> {
    let mut p = LaurentPoly::zero_in(v.clone());
    for (k, &ek) in e.iter().enumerate() {
        if ek != 0 {
            let mut x: Exp = SmallVec::from_elem(0, v.len());
            x[k] = 1;
            p.add_term(x, C::from_int(ek as i64));
        }
    }
    p
}

/// `P(x₀ e^{u})` in real form: grade `j` is `Σ_e c x₀^e (e·u)^j / j!`.
pub fn laurent_at_point<C: Field>(p: &LaurentPoly<C>, point: &[C], t: usize) -> Result<GradedSeries<C>> {
    let d = point.len();
    let sv = s_vars(d);
    let mut comps = vec![LaurentPoly::zero_in(sv.clone()); t + 1];
    for (e, c) in p.terms() {
        let mut base = c.clone();
        for (x, &k) in point.iter().zip(e.iter()) {
            if k != 0 {
                base = base.mul(&x.powi(k as i64).ok_or(Error::PoleAtPoint)?);
            }
        }
        let lin = linear_form::<C>(&sv, e);
        let mut pw = LaurentPoly::constant_in(sv.clone(), C::one());
        for (j, comp) in comps.iter_mut().enumerate() {
            if j > 0 {
                if lin.is_zero() {
                    break;
                }
                pw = pw.mul(&lin);
            }
            *comp = comp.add(&pw.scale(&base.mul(&inv_factorial(j))));
        }
    }
    Ok(GradedSeries::new(comps))
}

/// Local data of `S` at a saddle: `γ`, the form `A` and `exp(nB)`.
#[derive(Clone)]
pub struct LocalPower<C> {
    pub gamma: C,
    /// Matrix of `Q(s) = sᵀ A s`.
    pub a: Vec<Vec<C>>,
    /// Real form of `exp(nB)`; grade `r` has degrees `r + 2j`, `j ≥ 1`.
    pub tail: GradedSeries<C>,
}

/// Expands `S(x₀ e^{i s/√n})ⁿ / γⁿ = exp(−Q(s)) · exp(nB)` to grade `t`.
pub fn local_power<C: Field>(offsets: &[Vec<i32>], weights: &[C], point: &[C], t: usize) -> Result<LocalPower<C>> {
    let d = point.len();
    let sv = s_vars(d);
    let mut s = LaurentPoly::zero_in(crate::model::var_names(d));
    for (o, w) in offsets.iter().zip(weights) {
        s.add_term(o.iter().copied().collect(), w.clone());
    }
    let gamma = s.eval(point)?;
    let inv = gamma.inv().ok_or(Error::DivisionByZero)?;
    let x = laurent_at_point(&s.scale(&inv), point, t + 2)?;
    // grade 0 is Σ p_s = 1 by construction
    let mut comps = x.components().to_vec();
    comps[0] = LaurentPoly::constant_in(sv.clone(), C::one());
    let l = GradedSeries::new(comps).log()?;
    for (_, c) in l.grade(1).terms() {
        if c.to_rational().is_some_and(|r| !Field::is_zero(&r)) {
            return Err(Error::Inexact(
                "point is not a critical point of the step polynomial".into(),
            ));
        }
    }
    let mut a = vec![vec![C::zero(); d]; d];
    for (e, c) in l.grade(2).terms() {
        let idx: Vec<usize> = (0..d).filter(|&k| e[k] != 0).collect();
        match idx.as_slice() {
            [i] => a[*i][*i] = c.clone(),
            [i, j] => {
                let h = c.scale(&q(1, 2));
                a[*i][*j] = h.clone();
                a[*j][*i] = h;
            }
            _ => unreachable!("grade 2 is quadratic"),
        }
    }
    let mut b = vec![LaurentPoly::zero_in(sv.clone())];
    b.extend((1..=t).map(|r| l.grade(r + 2).clone()));
    let tail = GradedSeries::new(b).exp()?;
    Ok(LocalPower { gamma, a, tail })
}

/// Real-form series of `N(x₀ e^{u})`.
pub fn local_numerator<C: Field>(n: &RatFunc<C>, point: &[C], t: usize) -> Result<GradedSeries<C>> {
    let num = laurent_at_point(n.num(), point, t)?;
    let den = laurent_at_point(n.den(), point, t)?;
    if den.grade(0).is_zero() {
        return Err(Error::NumeratorSingularAtSaddle);
    }
    num.div(&den)
}

/// Real form of `exp(−i (k+1)·s/√n)` in the variables `(s, k)`.
pub fn endpoint_series<C: Field>(d: usize, t: usize) -> GradedSeries<C> {
    let mut names: Vec<String> = s_vars(d).iter().cloned().collect();
    names.extend(endpoint_vars(d).iter().cloned());
    let cv = Arc::new(names);
    let mut lin = LaurentPoly::zero_in(cv.clone());
    for j in 0..d {
        let mut e: Exp = SmallVec::from_elem(0, 2 * d);
        e[j] = 1;
        lin.add_term(e.clone(), C::from_int(-1));
        e[d + j] = 1;
        lin.add_term(e, C::from_int(-1));
    }
    let mut comps = vec![LaurentPoly::constant_in(cv.clone(), C::one())];
    for j in 1..=t {
        comps.push(comps[j - 1].mul(&lin).scale(&C::from_rational(&q(1, j as i64))));
    }
    GradedSeries::new(comps)
}

/// Normalized Gaussian moments `E[s^α]` for the density `∝ exp(−sᵀAs)`.
pub struct Moments<C> {
    cov: Vec<Vec<C>>,
    memo: HashMap<Vec<u32>, C>,
}

impl<C: Field> Moments<C> {
    pub fn new(a: &[Vec<C>]) -> Result<Self> {
        let two_a: Vec<Vec<C>> = a.iter().map(|r| r.iter().map(|x| x.add(x)).collect()).collect();
        let cov = linalg::inverse(&two_a).ok_or(Error::NotPositiveDefinite)?;
        Ok(Moments {
            cov,
            memo: HashMap::new(),
        })
    }

    pub fn get(&mut self, alpha: &[u32]) -> C {
        let total: u32 = alpha.iter().sum();
        if total % 2 == 1 {
            return C::zero();
        }
        if total == 0 {
            return C::one();
        }
        if let Some(v) = self.memo.get(alpha) {
            return v.clone();
        }
        // Isserlis: E[s_i s^β] = Σ_j C_ij β_j E[s^{β − e_j}]
        let i = alpha.iter().position(|&x| x > 0).unwrap();
        let mut beta = alpha.to_vec();
        beta[i] -= 1;
        let mut acc = C::zero();
        for j in 0..beta.len() {
            if beta[j] == 0 || self.cov[i][j].is_zero() {
                continue;
            }
            let mut g = beta.clone();
            g[j] -= 1;
            let m = self.get(&g);
            acc = acc.add(&self.cov[i][j].mul(&m).mul(&C::from_int(beta[j] as i64)));
        }
        self.memo.insert(alpha.to_vec(), acc.clone());
        acc
    }
}

/// `∫ exp(−sᵀAs) s^α ds` as `value · π^{d/2}`.
pub fn gaussian_moment(form: &QForm, exponents: &[u32]) -> Result<ScaledCoefficient> {
    let mut m = Moments::new(&form.matrix)?;
    let w = m.get(exponents);
    let root = form.det().sqrt().ok_or(Error::NotPositiveDefinite)?;
    let value = w.mul(&root.inv().ok_or(Error::NotPositiveDefinite)?);
    Ok(ScaledCoefficient::new(value, form.dim() as i32))
}

/// Every monomial of every component has degree of the component's parity.
fn parity_consistent<C: Field>(s: &GradedSeries<C>, ndeg: usize) -> bool {
    s.components().iter().enumerate().all(|(r, p)| {
        p.terms()
            .all(|(e, _)| (e[..ndeg].iter().map(|&k| k as i64).sum::<i64>() - r as i64).rem_euclid(2) == 0)
    })
}

/// Raw integrals `I_g(k)` for `g = 0..=t`, with odd grades certified zero.
///
/// `I_g` is the coefficient of `n^{-g/2}` in
/// `∫ e^{−Q} tail · N · endpoint ds / (π^{d/2} det(A)^{-1/2})`.
fn grade_integrals<C: Field>(
    power: &LocalPower<C>,
    numer: &GradedSeries<C>,
    t: usize,
    from_grade: usize,
) -> Result<Vec<LaurentPoly<C>>> {
    let d = power.a.len();
    let g = power.tail.truncate(t).mul(&numer.truncate(t));
    let ep = endpoint_series::<C>(d, t);
    if !parity_consistent(&g, d) || !parity_consistent(&ep, d) {
        return Err(Error::Inexact(
            "odd grades do not have odd parity; odd integrals would not vanish".into(),
        ));
    }
    let cv = ep.vars().clone();
    let map: Vec<usize> = (0..d).collect();
    let gc: Vec<LaurentPoly<C>> = g.components().iter().map(|p| p.embed(cv.clone(), &map)).collect();
    let kv = endpoint_vars(d);
    let mut moments = Moments::new(&power.a)?;
    let mut out = vec![LaurentPoly::zero_in(kv.clone()); t + 1];
    for (gr, slot) in out.iter_mut().enumerate().skip(from_grade) {
        if gr % 2 == 1 {
            continue;
        }
        let mut acc: HashMap<Exp, C> = HashMap::new();
        for c in 0..=gr {
            if gc[gr - c].is_zero() {
                continue;
            }
            let prod = gc[gr - c].mul(ep.grade(c));
            for (e, coef) in prod.terms() {
                let alpha: Vec<u32> = e[..d].iter().map(|&k| k as u32).collect();
                let deg: u32 = alpha.iter().sum();
                let w = moments.get(&alpha);
                if w.is_zero() {
                    continue;
                }
                let w = if (deg / 2) % 2 == 1 { w.neg() } else { w };
                let ke: Exp = e[d..].iter().copied().collect();
                let v = coef.mul(&w);
                acc.entry(ke).and_modify(|x| *x = x.add(&v)).or_insert(v);
            }
        }
        *slot = LaurentPoly::from_terms(kv.clone(), acc.into_iter().filter(|(_, c)| !c.is_zero()));
    }
    Ok(out)
}

/// Integrals of the expansion at `point` (generic over the coefficient field).
pub fn local_integrals<C: Field>(
    offsets: &[Vec<i32>],
    weights: &[C],
    point: &[C],
    numerator: &RatFunc<C>,
    t: usize,
) -> Result<(LocalPower<C>, Vec<LaurentPoly<C>>)> {
    let power = local_power(offsets, weights, point, t)?;
    let numer = local_numerator(numerator, point, t)?;
    let ints = grade_integrals(&power, &numer, t, 0)?;
    Ok((power, ints))
}

/// Checks that grade `g` integrates to zero by evaluating it.
pub fn odd_grade_integral<C: Field>(
    offsets: &[Vec<i32>],
    weights: &[C],
    point: &[C],
    numerator: &RatFunc<C>,
    g: usize,
) -> Result<bool> {
    let power = local_power(offsets, weights, point, g)?;
    let numer = local_numerator(numerator, point, g)?;
    let d = point.len();
    let series = power.tail.mul(&numer);
    let ep = endpoint_series::<C>(d, g);
    let cv = ep.vars().clone();
    let map: Vec<usize> = (0..d).collect();
    let mut moments = Moments::new(&power.a)?;
    let mut total = LaurentPoly::zero_in(endpoint_vars(d));
    for c in 0..=g {
        let prod = series.grade(g - c).embed(cv.clone(), &map).mul(ep.grade(c));
        for (e, coef) in prod.terms() {
            let alpha: Vec<u32> = e[..d].iter().map(|&k| k as u32).collect();
            let ke: Exp = e[d..].iter().copied().collect();
            total.add_term(ke, coef.mul(&moments.get(&alpha)));
        }
    }
    Ok(total.is_zero())
}

/// `q(A → B; n) ~ γⁿ/n^c Σ_p v_p(B) · T(n, B) / n^p`.
///
/// `v_p(B) = π^{pi_half/2} · Π_j exp_prefactor_j^{B_j} · terms[p−1](B)` and the
/// twist sum is `T(n, B) = Σ_i χ_i ζ_i^n α_i^{−(B+1)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticExpansion {
    pub dim: usize,
    pub gamma: FieldElem,
    pub c: BigRational,
    pub pi_half: i32,
    pub exp_prefactor: Vec<FieldElem>,
    pub terms: Vec<LaurentPoly<FieldElem>>,
    pub twists: Vec<Twist>,
    /// Numerator character `N(α_i x) = χ_i N(x)` for each twist.
    pub characters: Vec<RootOfUnity>,
    /// Starting point when the numerator is an orbit sum.
    pub start: Option<Vec<i64>>,
}

impl AsymptoticExpansion {
    pub fn order(&self) -> usize {
        self.terms.len()
    }

    pub fn v(&self, p: usize) -> &LaurentPoly<FieldElem> {
        &self.terms[p - 1]
    }

    /// `v_p` with explicit π powers on its coefficients.
    pub fn scaled_terms(&self, p: usize) -> Vec<(Exp, ScaledCoefficient)> {
        self.v(p)
            .terms_grlex()
            .into_iter()
            .map(|(e, c)| (e.clone(), ScaledCoefficient::new(c.clone(), self.pi_half)))
            .collect()
    }

    /// Exact twist sum `Σ_i χ_i ζ_i^n α_i^{−(B+1)}`.
    pub fn twist_sum(&self, n: usize, end: &[i64]) -> Result<BigRational> {
        let shifted: Vec<i64> = end.iter().map(|&b| -(b + 1)).collect();
        let mut acc = Cyclo::from_radical(Radical::zero());
        for (t, chi) in self.twists.iter().zip(&self.characters) {
            let r = chi.mul(&t.zeta.pow(n as i64)).mul(&t.character(&shifted));
            acc = acc.add(&Cyclo::from_root(&r));
        }
        acc.as_radical()
            .and_then(|r| r.as_rational())
            .ok_or_else(|| Error::Inexact("twist sum is not rational".into()))
    }

    /// `v_p(B)` as a ball, including π and the exponential prefactor.
    pub fn eval_v(&self, p: usize, end: &[i64], prec: u32) -> Result<Ball> {
        let pt: Vec<FieldElem> = end.iter().map(|&b| FieldElem::from_int(b)).collect();
        let mut val = self.v(p).eval(&pt)?.to_ball(prec);
        for (base, &b) in self.exp_prefactor.iter().zip(end) {
            if !base.is_one() {
                val = val.mul(&base.powi(b).ok_or(Error::DivisionByZero)?.to_ball(prec));
            }
        }
        Ok(val.mul(&pi_power(self.pi_half, prec)))
    }

    /// Truncated prediction `γⁿ n^{−c} Σ_{p ≤ m} v_p(B) T(n,B) n^{−p}`.
    pub fn predict(&self, n: usize, end: &[i64], m: usize, prec: u32) -> Result<Ball> {
        let tw = self.twist_sum(n, end)?;
        let nb = Ball::exact(qi(n as i64), prec);
        let mut acc = Ball::exact(qi(0), prec);
        let mut npow = Ball::exact(qi(1), prec);
        for p in 1..=m.min(self.order()) {
            npow = npow.div(&nb).ok_or(Error::DivisionByZero)?;
            acc = acc.add(&self.eval_v(p, end, prec)?.mul(&npow));
        }
        Ok(acc.mul(&self.scale(n, prec)?).mul(&Ball::exact(tw, prec)))
    }

    /// `γⁿ / n^c`.
    pub fn scale(&self, n: usize, prec: u32) -> Result<Ball> {
        let g = self.gamma.pow(n as u32).to_ball(prec);
        Ok(g.mul(&n_power(n, &(-self.c.clone()), prec)?))
    }
}

/// `π^{h/2}`.
pub fn pi_power(h: i32, prec: u32) -> Ball {
    let pi = Ball::pi(prec + 32);
    let half = if h % 2 != 0 {
        pi.sqrt().expect("π > 0")
    } else {
        Ball::exact(qi(1), prec)
    };
    let whole = pi.powi((h.div_euclid(2)) as i64).expect("π ≠ 0");
    whole
        .mul(&if h.rem_euclid(2) == 1 {
            half
        } else {
            Ball::exact(qi(1), prec)
        })
        .with_prec(prec)
}

/// `n^e` for rational `e`.
pub fn n_power(n: usize, e: &BigRational, prec: u32) -> Result<Ball> {
    let num: i64 = e
        .numer()
        .try_into()
        .map_err(|_| Error::Unsupported("exponent too large".into()))?;
    let den: u32 = e
        .denom()
        .try_into()
        .map_err(|_| Error::Unsupported("exponent too large".into()))?;
    let r = Radical::root(&qi(n as i64), num, den).ok_or(Error::DivisionByZero)?;
    Ok(r.to_ball(prec))
}

/// Character `χ` with `N(α x) = χ N(x)`, read off the monomials.
pub fn numerator_character(n: &RatFunc<BigRational>, twist: &Twist) -> Result<RootOfUnity> {
    let uniform = |p: &LaurentPoly<BigRational>| -> Result<RootOfUnity> {
        let mut it = p.terms().map(|(e, _)| {
            let e: Vec<i64> = e.iter().map(|&k| k as i64).collect();
            twist.character(&e)
        });
        let first = it.next().unwrap_or_else(RootOfUnity::one);
        if it.all(|r| r == first) {
            Ok(first)
        } else {
            Err(Error::NumeratorNotTwistHomogeneous(twist.to_string()))
        }
    };
    Ok(uniform(n.num())?.mul(&uniform(n.den())?.inv()))
}

/// Settings for [`assemble_expansion`].
#[derive(Clone, Debug)]
pub struct ExpansionOptions {
    /// Number of terms `v_1 … v_M`.
    pub order: usize,
    /// Compare `c` with `π/θ` in two dimensions and fail on mismatch.
    pub check_exponent: bool,
}

impl ExpansionOptions {
    pub fn order(order: usize) -> Self {
        ExpansionOptions {
            order,
            check_exponent: true,
        }
    }
}

fn all_rational(v: &[FieldElem]) -> Option<Vec<BigRational>> {
    v.iter().map(|x| x.to_rational()).collect()
}

/// Integrals up to grade `t`, in the cheapest exact field that holds the data.
fn integrals_fe(
    offsets: &[Vec<i32>],
    weights: &[FieldElem],
    point: &[FieldElem],
    numerator: &RatFunc<BigRational>,
    t: usize,
) -> Result<(Vec<Vec<FieldElem>>, Vec<LaurentPoly<FieldElem>>)> {
    let lift = |c: &BigRational| FieldElem::rational(c.clone());
    if let (Some(w), Some(p)) = (all_rational(weights), all_rational(point)) {
        let (pw, ints) = local_integrals(offsets, &w, &p, numerator, t)?;
        let a = pw.a.iter().map(|r| r.iter().map(lift).collect()).collect();
        return Ok((a, ints.iter().map(|p| p.map_coeffs(lift)).collect()));
    }
    let num = numerator.map_coeffs(lift);
    let (pw, ints) = local_integrals(offsets, weights, point, &num, t)?;
    Ok((pw.a, ints))
}

/// Step probabilities `p_s = ω_s x₀^s / γ` of the Cramer-transformed walk.
fn step_probabilities(model: &Model, x0: &[FieldElem], gamma: &FieldElem) -> Result<Vec<FieldElem>> {
    let inv = gamma.inv().ok_or(Error::DivisionByZero)?;
    model
        .steps()
        .iter()
        .map(|s| {
            let mut v = s.weight.mul(&inv);
            for (x, &k) in x0.iter().zip(&s.offsets) {
                v = v.mul(&x.powi(k as i64).ok_or(Error::PoleAtPoint)?);
            }
            Ok(v)
        })
        .collect()
}

/// Expected decay exponent `π/θ` of a planar model, when recognizable.
pub fn expected_exponent(model: &Model) -> Result<Option<BigRational>> {
    if model.dim() != 2 {
        return Ok(None);
    }
    let sd = saddle::find_dominant(model)?;
    let p = step_probabilities(model, &sd.coords, &sd.gamma)?;
    let offs: Vec<Vec<i32>> = model.steps().iter().map(|s| s.offsets.clone()).collect();
    Ok(correlation_from_moments(&offs, &p).pi_over_theta)
}

/// Full expansion of `[x^{B+1}] Sⁿ N` for a given numerator.
///
/// `c` is the first grade whose Gaussian integral is nonzero; in two
/// dimensions it must agree with `π/θ` unless the check is disabled.
pub fn assemble_expansion(
    model: &Model,
    numerator: &RatFunc<BigRational>,
    start: Option<Vec<i64>>,
    opts: &ExpansionOptions,
) -> Result<AsymptoticExpansion> {
    if opts.order == 0 {
        return Err(Error::Unsupported("order must be positive".into()));
    }
    let d = model.dim();
    let sys = saddle::saddle_system(model)?;
    let fe_num = numerator.map_coeffs(|c| FieldElem::rational(c.clone()));
    let reg = saddle::numerator_regular_at(&sys.dominant, &fe_num);
    if !reg.regular {
        return Err(Error::NumeratorSingularAtSaddle);
    }
    let characters = sys
        .twists
        .iter()
        .map(|t| numerator_character(numerator, t))
        .collect::<Result<Vec<_>>>()?;
    let offsets: Vec<Vec<i32>> = model.steps().iter().map(|s| s.offsets.clone()).collect();
    let weights: Vec<FieldElem> = model.steps().iter().map(|s| s.weight.clone()).collect();

    let expected = if opts.check_exponent {
        expected_exponent(model)?
    } else {
        None
    };
    let extra = 2 * (opts.order - 1);
    // c = d/2 + g0/2 − 1
    let expected_g0 = expected.as_ref().map(|c| (c + qi(1)) * qi(2) - qi(d as i64));
    let mut t = match &expected_g0 {
        Some(g) if g.is_integer() && *g >= qi(0) => {
            let g: i64 = g.to_integer().try_into().unwrap_or(0);
            g as usize + extra
        }
        _ => 2 + extra,
    };
    loop {
        if t > MAX_TRUNCATION {
            return Err(Error::Unsupported(format!(
                "no nonzero Gaussian integral up to grade {}",
                MAX_TRUNCATION
            )));
        }
        let (a, ints) = integrals_fe(&offsets, &weights, &sys.dominant, numerator, t)?;
        let g0 = ints.iter().position(|p| !p.is_zero());
        if let Some(eg) = &expected_g0 {
            let found = g0.map(|g| qi(g as i64));
            if found.as_ref() != Some(eg) {
                return Err(Error::ExponentMismatch(format!(
                    "first nonzero grade {:?}, π/θ predicts {}",
                    g0,
                    crate::exactalg::rational::fmt_rational(eg)
                )));
            }
        }
        let Some(g0) = g0 else {
            t += 2;
            continue;
        };
        if g0 + extra > t {
            t = g0 + extra;
            continue;
        }
        let form = QForm { matrix: a };
        let det = form.det();
        let root = det.sqrt().ok_or(Error::NotPositiveDefinite)?;
        let mut kappa = root.inv().ok_or(Error::NotPositiveDefinite)?.scale(&q(1, 1i64 << d));
        let mut bases = Vec::with_capacity(d);
        for x in &sys.dominant {
            let xi = x.inv().ok_or(Error::DivisionByZero)?;
            kappa = kappa.mul(&xi);
            bases.push(xi);
        }
        let terms = (0..opts.order)
            .map(|p| ints[g0 + 2 * p].scale(&kappa))
            .collect::<Vec<_>>();
        let c = BigRational::new((d as i64 + g0 as i64 - 2).into(), 2.into());
        return Ok(AsymptoticExpansion {
            dim: d,
            gamma: sys.gamma.clone(),
            c,
            pi_half: -(d as i32),
            exp_prefactor: bases,
            terms,
            twists: sys.twists.clone(),
            characters,
            start,
        });
    }
}

/// Expansion of walks from the origin, with the orbit-sum numerator.
pub fn expand(model: &Model, order: usize) -> Result<AsymptoticExpansion> {
    expand_from_start(model, &[0, 0], order)
}

/// Expansion of walks from `(u, v)` using the orbit sum of `x^{u+1} y^{v+1}`.
pub fn expand_from_start(model: &Model, start: &[i64], order: usize) -> Result<AsymptoticExpansion> {
    let g = group::group_closure(model, group::DEFAULT_MAX_ORDER)?;
    expand_with_group(model, &g, start, order)
}

fn expand_with_group(model: &Model, g: &[GroupElement], start: &[i64], order: usize) -> Result<AsymptoticExpansion> {
    if start.len() != 2 || start.iter().any(|&a| a < 0) {
        return Err(Error::Unsupported("start must be a point of the quadrant".into()));
    }
    let os = group::orbit_sum_over(g, start[0] as u32, start[1] as u32)?;
    assemble_expansion(
        model,
        &os.numerator,
        Some(start.to_vec()),
        &ExpansionOptions::order(order),
    )
}

/// Same expansion recomputed at an associated saddle over the cyclotomic
/// field, compared with `χ · I_g` from the dominant one for `g ≤ t`.
pub fn twist_consistent(model: &Model, numerator: &RatFunc<BigRational>, twist: &Twist, t: usize) -> Result<bool> {
    let sys = saddle::saddle_system(model)?;
    let to_cyclo = |x: &FieldElem| -> Result<Cyclo> {
        x.as_radical()
            .map(|r| Cyclo::from_radical(r.clone()))
            .ok_or_else(|| Error::Inexact("twist check needs exact saddle".into()))
    };
    let offsets: Vec<Vec<i32>> = model.steps().iter().map(|s| s.offsets.clone()).collect();
    let weights: Vec<Cyclo> = model
        .steps()
        .iter()
        .map(|s| to_cyclo(&s.weight))
        .collect::<Result<_>>()?;
    let x0: Vec<Cyclo> = sys.dominant.iter().map(to_cyclo).collect::<Result<_>>()?;
    let x1: Vec<Cyclo> = x0
        .iter()
        .zip(&twist.alphas)
        .map(|(x, a)| x.mul(&Cyclo::from_root(a)))
        .collect();
    let num = numerator.map_coeffs(|c| Cyclo::from_radical(Radical::rational(c.clone())));
    let (p0, i0) = local_integrals(&offsets, &weights, &x0, &num, t)?;
    let (p1, i1) = local_integrals(&offsets, &weights, &x1, &num, t)?;
    let chi = Cyclo::from_root(&numerator_character(numerator, twist)?);
    let zeta = Cyclo::from_root(&twist.zeta);
    Ok(p1.gamma == p0.gamma.mul(&zeta) && p1.a == p0.a && i0.iter().zip(&i1).all(|(a, b)| a.scale(&chi) == *b))
}

/// `v_p(k, l, u, v)` for `p = 1..=order`, interpolated over starting points.
///
/// Each `v_p` is interpolated from the tensor grid `{0..=D_p}²` of starts
/// with `D_p = c + 2p − 1`, then checked exactly on every other grid point
/// (the grid extends one row and column beyond the largest `D_p`).
pub fn interpolate_vp(model: &Model, order: usize) -> Result<Vec<LaurentPoly<FieldElem>>> {
    if !model.has_zero_drift() {
        return Err(Error::NonzeroDrift);
    }
    let g = group::group_closure(model, group::DEFAULT_MAX_ORDER)?;
    let base = expand_with_group(model, &g, &[0, 0], order)?;
    let c: i64 = base
        .c
        .to_integer()
        .try_into()
        .map_err(|_| Error::Unsupported("exponent too large".into()))?;
    let bound = |p: usize| (c + 2 * p as i64 - 1).max(0) as usize;
    let side = bound(order) + 2;
    let starts: Vec<(usize, usize)> = (0..side).flat_map(|u| (0..side).map(move |v| (u, v))).collect();
    let exps: Vec<AsymptoticExpansion> = starts
        .par_iter()
        .map(|&(u, v)| expand_with_group(model, &g, &[u as i64, v as i64], order))
        .collect::<Result<_>>()?;
    let at = |u: usize, v: usize| &exps[u * side + v];
    let out_vars = endpoint_start_vars(2);
    let mut result = Vec::with_capacity(order);
    for p in 1..=order {
        let dp = bound(p);
        // collect all (k,l) monomials seen anywhere on the grid
        let mut monos: Vec<Exp> = exps
            .iter()
            .flat_map(|e| e.v(p).terms().map(|(m, _)| m.clone()))
            .collect();
        monos.sort();
        monos.dedup();
        let mut poly = LaurentPoly::zero_in(out_vars.clone());
        for m in &monos {
            let vals: Vec<Vec<FieldElem>> = (0..=dp)
                .map(|u| (0..=dp).map(|v| at(u, v).v(p).coeff(m)).collect())
                .collect();
            let coeffs = tensor_interpolate(&vals)?;
            for (i, row) in coeffs.iter().enumerate() {
                for (j, cij) in row.iter().enumerate() {
                    if !cij.is_zero() {
                        poly.add_term(SmallVec::from_slice(&[m[0], m[1], i as i32, j as i32]), cij.clone());
                    }
                }
            }
        }
        for &(u, v) in &starts {
            let spec = specialize_start(&poly, u as i64, v as i64)?;
            if spec != *at(u, v).v(p) {
                return Err(Error::DegreeBoundViolated(format!(
                    "v_{} interpolated with degree {} disagrees at start ({}, {})",
                    p, dp, u, v
                )));
            }
        }
        result.push(poly);
    }
    Ok(result)
}

/// `f(k, l, u₀, v₀)` as a polynomial in `(k, l)`.
pub fn specialize_start(f: &LaurentPoly<FieldElem>, u: i64, v: i64) -> Result<LaurentPoly<FieldElem>> {
    let kv = endpoint_vars(2);
    let mut out = LaurentPoly::zero_in(kv);
    for (e, c) in f.terms() {
        let w = FieldElem::from_int(u)
            .powi(e[2] as i64)
            .and_then(|a| FieldElem::from_int(v).powi(e[3] as i64).map(|b| a.mul(&b)))
            .ok_or(Error::PoleAtPoint)?;
        out.add_term(SmallVec::from_slice(&e[..2]), c.mul(&w));
    }
    Ok(out)
}

/// Power-basis coefficients of the polynomial through `(i, vals[i])`.
fn interpolate_1d(vals: &[FieldElem]) -> Result<Vec<FieldElem>> {
    let n = vals.len();
    let m: Vec<Vec<FieldElem>> = (0..n)
        .map(|i| (0..n).map(|j| FieldElem::from_int(i as i64).pow(j as u32)).collect())
        .collect();
    linalg::solve(&m, vals).ok_or_else(|| Error::DegreeBoundViolated("singular interpolation grid".into()))
}

fn tensor_interpolate(vals: &[Vec<FieldElem>]) -> Result<Vec<Vec<FieldElem>>> {
    let rows: Vec<Vec<FieldElem>> = vals.iter().map(|r| interpolate_1d(r)).collect::<Result<_>>()?;
    let n = rows[0].len();
    let mut out = vec![vec![FieldElem::zero(); n]; rows.len()];
    for j in 0..n {
        let col: Vec<FieldElem> = rows.iter().map(|r| r[j].clone()).collect();
        for (i, c) in interpolate_1d(&col)?.into_iter().enumerate() {
            out[i][j] = c;
        }
    }
    Ok(out)
}

/// Expansion rendered with the default ball precision, for quick checks.
pub fn eval_f64(e: &AsymptoticExpansion, p: usize, end: &[i64]) -> Result<f64> {
    Ok(e.eval_v(p, end, DEFAULT_PREC)?.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::poly::vars;

    fn gb() -> Model {
        Model::unweighted("GB", &[&[-1, 1], &[1, -1], &[-1, 0], &[1, 0]]).unwrap()
    }
    fn sw() -> Model {
        Model::unweighted("SW", &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]).unwrap()
    }

    fn kl(terms: &[(i64, i64, i32, i32)]) -> LaurentPoly<FieldElem> {
        LaurentPoly::from_terms(
            endpoint_vars(2),
            terms
                .iter()
                .map(|&(a, b, i, j)| (SmallVec::from_slice(&[i, j]), FieldElem::rational(q(a, b)))),
        )
    }

    #[test]
    fn gaussian_moments() {
        let id = QForm {
            matrix: vec![
                vec![FieldElem::one(), FieldElem::zero()],
                vec![FieldElem::zero(), FieldElem::one()],
            ],
        };
        let m = gaussian_moment(&id, &[0, 0]).unwrap();
        assert_eq!(m, ScaledCoefficient::new(FieldElem::one(), 2));
        assert!(gaussian_moment(&id, &[1, 1]).unwrap().value.is_zero());
        // E[s²] = 1/2 for exp(−s²)
        assert_eq!(
            gaussian_moment(&id, &[2, 0]).unwrap().value,
            FieldElem::rational(q(1, 2))
        );
        let gbq = saddle::saddle_system(&gb()).unwrap().qform;
        assert_eq!(gaussian_moment(&gbq, &[0, 0]).unwrap().value, FieldElem::from_int(4));
    }

    #[test]
    fn sw_quadratic_form_and_tail() {
        let offs = vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]];
        let w = vec![qi(1); 4];
        let lp = local_power(&offs, &w, &[qi(1), qi(1)], 0).unwrap();
        assert_eq!(lp.a, vec![vec![q(1, 4), qi(0)], vec![qi(0), q(1, 4)]]);
        assert_eq!(lp.tail.truncation(), 0);
        assert!(lp.tail.grade(0).is_one_poly());
    }

    trait OnePoly {
        fn is_one_poly(&self) -> bool;
    }
    impl OnePoly for LaurentPoly<BigRational> {
        fn is_one_poly(&self) -> bool {
            self.is_constant() && self.constant_term().is_one()
        }
    }

    #[test]
    fn sw_numerator_grade_two() {
        let v = vars(&["x", "y"]);
        let x = LaurentPoly::<BigRational>::var_in(v.clone(), 0);
        let y = LaurentPoly::<BigRational>::var_in(v.clone(), 1);
        let n = x
            .sub(&x.monomial_inverse().unwrap())
            .mul(&y.sub(&y.monomial_inverse().unwrap()));
        let s = local_numerator(&RatFunc::from_poly(n), &[qi(1), qi(1)], 3).unwrap();
        assert!(s.grade(0).is_zero() && s.grade(1).is_zero());
        // real form 4 s1 s2, i.e. (2is)(2it) = −4st after the i² factor
        let want = LaurentPoly::monomial_in(s_vars(2), &[1, 1], qi(4));
        assert_eq!(*s.grade(2), want);
    }

    #[test]
    fn gb_from_origin() {
        let e = expand(&gb(), 3).unwrap();
        assert_eq!(e.c, qi(4));
        assert_eq!(e.gamma, FieldElem::from_int(4));
        assert_eq!(e.pi_half, -2);
        let f = kl(&[(1, 1, 0, 0), (1, 1, 1, 0)])
            .mul(&kl(&[(1, 1, 0, 0), (1, 1, 0, 1)]))
            .mul(&kl(&[(2, 1, 0, 0), (1, 1, 1, 0), (1, 1, 0, 1)]))
            .mul(&kl(&[(3, 1, 0, 0), (1, 1, 1, 0), (2, 1, 0, 1)]));
        assert_eq!(*e.v(1), f.scale(&FieldElem::from_int(64)));
        // 35 + 2k² + 4k(2+l) + 4l(3+l)
        let v2 = kl(&[
            (35, 1, 0, 0),
            (2, 1, 2, 0),
            (8, 1, 1, 0),
            (4, 1, 1, 1),
            (12, 1, 0, 1),
            (4, 1, 0, 2),
        ]);
        assert_eq!(*e.v(2), f.mul(&v2).scale(&FieldElem::from_int(-32)));
    }

    #[test]
    fn odd_grades_vanish_and_twists_agree() {
        let m = gb();
        let n = group::orbit_sum(&m, 0, 0).unwrap().numerator;
        let offs: Vec<Vec<i32>> = m.steps().iter().map(|s| s.offsets.clone()).collect();
        let w = vec![qi(1); 4];
        assert!(odd_grade_integral(&offs, &w, &[qi(1), qi(1)], &n, 9).unwrap());
        let sys = saddle::saddle_system(&m).unwrap();
        for t in &sys.twists {
            assert!(twist_consistent(&m, &n, t, 8).unwrap());
        }
    }

    #[test]
    fn sw_interpolation_first_term() {
        let v = interpolate_vp(&sw(), 1).unwrap();
        // (k+1)(l+1)(u+1)(v+1) up to a constant
        let ev = endpoint_start_vars(2);
        let lin =
            |i: usize| LaurentPoly::var_in(ev.clone(), i).add(&LaurentPoly::constant_in(ev.clone(), FieldElem::one()));
        let f = lin(0).mul(&lin(1)).mul(&lin(2)).mul(&lin(3));
        let (e, c) = v[0].leading_grlex().unwrap();
        let (_, fc) = f.leading_grlex().unwrap();
        let _ = e;
        assert_eq!(v[0], f.scale(&c.div(fc).unwrap()));
    }

    #[test]
    fn twist_sum_cancels_off_period() {
        let e = expand(&sw(), 1).unwrap();
        assert_eq!(e.twist_sum(4, &[0, 0]).unwrap(), qi(2));
        assert_eq!(e.twist_sum(5, &[0, 0]).unwrap(), qi(0));
        assert_eq!(e.twist_sum(5, &[1, 0]).unwrap(), qi(2));
    }
}
