//! Discrete Laplacians on the orthant, polyharmonicity checks, polyharmonic
//! bases and decompositions of the expansion coefficients.
//!
//! Functions live on the orthant `x ≥ 0` and are extended by zero outside.
//! `△f(x) = Σ_s ω_s f(x − s) − t f(x)` acts on endpoints; the adjoint
//! `△̃` uses the reversed steps and acts on starting points.

use crate::error::{Error, Result};
use crate::exactalg::poly::{grlex_cmp, Exp};
use crate::exactalg::rational::{binomial, qi};
use crate::exactalg::{linalg, Field, FieldElem, LaurentPoly};
use crate::expansion::{endpoint_start_vars, endpoint_vars, AsymptoticExpansion};
use crate::model::Model;
use num_rational::BigRational;
use rayon::prelude::*;
use smallvec::SmallVec;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// Evaluatable function on integer points (not yet zero-extended).
pub type PointFn<'a, C> = dyn Fn(&[i64]) -> C + Sync + 'a;

fn in_orthant(x: &[i64]) -> bool {
    x.iter().all(|&v| v >= 0)
}

fn offsets_of(model: &Model) -> Vec<Vec<i64>> {
    model
        .steps()
        .iter()
        .map(|s| s.offsets.iter().map(|&k| k as i64).collect())
        .collect()
}

/// A Laplacian stencil acting on the coordinates `block..block + d`.
#[derive(Clone, Debug)]
pub struct Stencil<C> {
    pub block: usize,
    /// Offsets `o` with `(Lf)(x) = Σ w f(x + o) − t f(x)`.
    pub shifts: Vec<Vec<i64>>,
    pub weights: Vec<C>,
    pub t: C,
}

impl<C: Field> Stencil<C> {
    /// `△` of the model (endpoint side).
    pub fn forward(model: &Model, t: C, block: usize, lift: impl Fn(&FieldElem) -> C) -> Self {
        Stencil {
            block,
            shifts: offsets_of(model)
                .into_iter()
                .map(|o| o.iter().map(|k| -k).collect())
                .collect(),
            weights: model.steps().iter().map(|s| lift(&s.weight)).collect(),
            t,
        }
    }

    /// `△̃`, the Laplacian of the reversed model (start side).
    pub fn adjoint(model: &Model, t: C, block: usize, lift: impl Fn(&FieldElem) -> C) -> Self {
        Stencil {
            block,
            shifts: offsets_of(model),
            weights: model.steps().iter().map(|s| lift(&s.weight)).collect(),
            t,
        }
    }
}

/// `L_1 ⋯ L_j f` with zero extension re-imposed after every stencil.
///
/// `ops` is applied right to left: `ops[0]` is outermost.
pub struct Nested<'a, C> {
    f: &'a PointFn<'a, C>,
    ops: Vec<Stencil<C>>,
    memo: Vec<HashMap<Vec<i64>, C>>,
}

impl<'a, C: Field> Nested<'a, C> {
    pub fn new(f: &'a PointFn<'a, C>, ops: Vec<Stencil<C>>) -> Self {
        let memo = vec![HashMap::new(); ops.len() + 1];
        Nested { f, ops, memo }
    }

    /// Value of `ops[level..]` applied to `f` at `x`.
    fn at(&mut self, level: usize, x: &[i64]) -> C {
        if !in_orthant(x) {
            return C::zero();
        }
        if let Some(v) = self.memo[level].get(x) {
            return v.clone();
        }
        let v = if level == self.ops.len() {
            (self.f)(x)
        } else {
            let op = self.ops[level].clone();
            let mut acc = self.at(level + 1, x).mul(&op.t).neg();
            let mut y = x.to_vec();
            for (sh, w) in op.shifts.iter().zip(&op.weights) {
                for (k, &o) in sh.iter().enumerate() {
                    y[op.block + k] = x[op.block + k] + o;
                }
                let inner = self.at(level + 1, &y);
                if !inner.is_zero() {
                    acc = acc.add(&w.mul(&inner));
                }
            }
            acc
        };
        self.memo[level].insert(x.to_vec(), v.clone());
        v
    }

    pub fn eval(&mut self, x: &[i64]) -> C {
        self.at(0, x)
    }
}

/// `Σ_s ω_s f(x − s) − t f(x)` with `f` zero outside the orthant.
pub fn apply_laplacian<C: Field>(
    model: &Model,
    f: &PointFn<'_, C>,
    point: &[i64],
    t: &C,
    lift: impl Fn(&FieldElem) -> C,
) -> C {
    Nested::new(f, vec![Stencil::forward(model, t.clone(), 0, lift)]).eval(point)
}

/// The same with the reversed steps.
pub fn apply_adjoint_laplacian<C: Field>(
    model: &Model,
    f: &PointFn<'_, C>,
    point: &[i64],
    t: &C,
    lift: impl Fn(&FieldElem) -> C,
) -> C {
    Nested::new(f, vec![Stencil::adjoint(model, t.clone(), 0, lift)]).eval(point)
}

/// Rational polynomial evaluated at integer points through `i128`
/// arithmetic with a common denominator.
pub struct IntEvaluator {
    terms: Vec<(Exp, i128)>,
    den: BigRational,
}

impl IntEvaluator {
    pub fn new(p: &LaurentPoly<FieldElem>) -> Option<Self> {
        let mut den = num_bigint::BigInt::from(1);
        let mut rat = Vec::new();
        for (e, c) in p.terms() {
            if e.iter().any(|&k| k < 0) {
                return None;
            }
            let r = c.to_rational()?;
            den = num_integer::Integer::lcm(&den, r.denom());
            rat.push((e.clone(), r));
        }
        let scale = BigRational::from_integer(den.clone());
        let terms = rat
            .into_iter()
            .map(|(e, r)| {
                let v = (r * &scale).to_integer();
                i128::try_from(v).ok().map(|c| (e, c))
            })
            .collect::<Option<Vec<_>>>()?;
        Some(IntEvaluator {
            terms,
            den: BigRational::new(1.into(), den),
        })
    }

    pub fn eval(&self, x: &[i64]) -> BigRational {
        let mut acc = num_bigint::BigInt::from(0);
        let mut small: i128 = 0;
        for (e, c) in &self.terms {
            let mut t = Some(*c);
            for (xi, &k) in x.iter().zip(e.iter()) {
                t = t
                    .and_then(|v| (xi.abs() as i128).checked_pow(k as u32).and_then(|p| v.checked_mul(p)))
                    .map(|v| if *xi < 0 && k % 2 == 1 { -v } else { v });
            }
            match t.and_then(|v| small.checked_add(v)) {
                Some(s) => small = s,
                None => {
                    let mut big = num_bigint::BigInt::from(*c);
                    for (xi, &k) in x.iter().zip(e.iter()) {
                        big *= num_traits::pow::pow(num_bigint::BigInt::from(*xi), k as usize);
                    }
                    acc += big;
                }
            }
        }
        acc += small;
        BigRational::from_integer(acc) * &self.den
    }
}

/// A coefficient function `x ↦ π^{pi_half/2} · Π base_j^{x_j} · poly(x + shift)`
/// on the orthant, zero outside.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyharmonicFn {
    pub poly: LaurentPoly<FieldElem>,
    pub pi_half: i32,
    pub exp_prefactor: Vec<FieldElem>,
    pub eigenvalue: FieldElem,
    pub claimed_order: usize,
    /// Origin offset; `(1, 1)` reads the polynomial in the shifted quadrant.
    pub shift: Vec<i64>,
}

impl PolyharmonicFn {
    pub fn polynomial(poly: LaurentPoly<FieldElem>, eigenvalue: FieldElem, claimed_order: usize) -> Self {
        let d = poly.nvars();
        PolyharmonicFn {
            poly,
            pi_half: 0,
            exp_prefactor: vec![FieldElem::one(); d],
            eigenvalue,
            claimed_order,
            shift: vec![0; d],
        }
    }

    /// `v_p` of an expansion as a `γ`-polyharmonic function of order `p`.
    pub fn from_expansion(e: &AsymptoticExpansion, p: usize) -> Self {
        PolyharmonicFn {
            poly: e.v(p).clone(),
            pi_half: e.pi_half,
            exp_prefactor: e.exp_prefactor.clone(),
            eigenvalue: e.gamma.clone(),
            claimed_order: p,
            shift: vec![0; e.dim],
        }
    }

    pub fn with_shift(mut self, shift: Vec<i64>) -> Self {
        self.shift = shift;
        self
    }

    fn has_prefactor(&self) -> bool {
        self.exp_prefactor.iter().any(|b| !b.is_one())
    }

    /// Value without the π power (which never affects polyharmonicity).
    pub fn value(&self, x: &[i64]) -> Result<FieldElem> {
        if !in_orthant(x) {
            return Ok(FieldElem::zero());
        }
        let pt: Vec<FieldElem> = x
            .iter()
            .zip(&self.shift)
            .map(|(&a, &s)| FieldElem::from_int(a + s))
            .collect();
        let mut v = self.poly.eval(&pt)?;
        for (b, &k) in self.exp_prefactor.iter().zip(x) {
            if !b.is_one() {
                v = v.mul(&b.powi(k).ok_or(Error::DivisionByZero)?);
            }
        }
        Ok(v)
    }

    pub fn shifted_poly(&self) -> Result<LaurentPoly<FieldElem>> {
        let a: Vec<FieldElem> = self.shift.iter().map(|&s| FieldElem::from_int(s)).collect();
        self.poly.translate(&a)
    }
}

/// Outcome of a window check.
#[derive(Clone, Debug, PartialEq)]
pub struct Verification {
    pub passed: bool,
    pub checked: usize,
    /// First point with a nonzero value, with that value.
    pub witness: Option<(Vec<i64>, String)>,
}

impl Verification {
    fn pass(checked: usize) -> Self {
        Verification {
            passed: true,
            checked,
            witness: None,
        }
    }
}

/// All lattice points of a box `Π [lo_j, hi_j]`.
pub fn window_points(window: &[(i64, i64)]) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for &(lo, hi) in window {
        out = out
            .into_iter()
            .flat_map(|p: Vec<i64>| {
                (lo..=hi).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

fn check_points<C: Field>(f: &PointFn<'_, C>, ops: Vec<Stencil<C>>, points: &[Vec<i64>]) -> Verification {
    let mut nest = Nested::new(f, ops);
    for (i, x) in points.iter().enumerate() {
        let v = nest.eval(x);
        if !v.is_zero() {
            return Verification {
                passed: false,
                checked: i,
                witness: Some((x.clone(), v.to_string())),
            };
        }
    }
    Verification::pass(points.len())
}

fn rational_lift(x: &FieldElem) -> BigRational {
    x.to_rational().expect("rational data")
}

/// Whether `△^p f` vanishes at every point of the window (nested stencils).
pub fn verify_polyharmonic(model: &Model, f: &PolyharmonicFn, p: usize, window: &[(i64, i64)]) -> Result<Verification> {
    let points = window_points(window);
    let rational = !f.has_prefactor() && f.eigenvalue.to_rational().is_some() && model.rational_weights().is_some();
    if rational {
        if let Some(ev) = IntEvaluator::new(&f.shifted_poly()?) {
            let t = rational_lift(&f.eigenvalue);
            let ops = (0..p)
                .map(|_| Stencil::forward(model, t.clone(), 0, rational_lift))
                .collect();
            let g = move |x: &[i64]| ev.eval(x);
            return Ok(check_points(&g, ops, &points));
        }
    }
    let ops = (0..p)
        .map(|_| Stencil::forward(model, f.eigenvalue.clone(), 0, |w| w.clone()))
        .collect();
    let g = |x: &[i64]| f.value(x).unwrap_or_else(|_| FieldElem::zero());
    Ok(check_points(&g, ops, &points))
}

/// `△^a △̃^b v = 0` for all `a + b = p` on the given points of `(k, l, u, v)`,
/// plus the commutation `△△̃ v = △̃△ v` on the same points.
pub fn verify_multivariate(
    model: &Model,
    v: &LaurentPoly<FieldElem>,
    gamma: &FieldElem,
    p: usize,
    points: &[Vec<i64>],
) -> Result<Verification> {
    let d = model.dim();
    let t = gamma
        .to_rational()
        .ok_or_else(|| Error::Inexact("multivariate check needs rational γ".into()))?;
    // a common irrational factor (such as a Hessian square root) is irrelevant here
    let unit = match v.leading_grlex() {
        Some((_, c)) => v.scale(&c.inv().ok_or(Error::DivisionByZero)?),
        None => v.clone(),
    };
    let ev = IntEvaluator::new(&unit)
        .ok_or_else(|| Error::Inexact("multivariate check needs a rational polynomial".into()))?;
    let g = |x: &[i64]| ev.eval(x);
    let fwd = || Stencil::forward(model, t.clone(), 0, rational_lift);
    let adj = || Stencil::adjoint(model, t.clone(), d, rational_lift);
    let results: Vec<Verification> = (0..=p)
        .into_par_iter()
        .map(|a| {
            let mut ops: Vec<Stencil<BigRational>> = (0..a).map(|_| fwd()).collect();
            ops.extend((0..p - a).map(|_| adj()));
            check_points(&g, ops, points)
        })
        .collect();
    let mut checked = 0;
    for r in results {
        if !r.passed {
            return Ok(r);
        }
        checked += r.checked;
    }
    let mut ab = Nested::new(&g, vec![fwd(), adj()]);
    let mut ba = Nested::new(&g, vec![adj(), fwd()]);
    for x in points {
        let (l, r) = (ab.eval(x), ba.eval(x));
        if l != r {
            return Ok(Verification {
                passed: false,
                checked,
                witness: Some((x.clone(), format!("commutator {}", l.sub(&r)))),
            });
        }
        checked += 1;
    }
    Ok(Verification::pass(checked))
}

/// `⟨△f, g⟩ − ⟨f, △̃g⟩` over a box containing both supports (exactly zero
/// when the box is large enough).
pub fn adjointness_defect(
    model: &Model,
    f: &PointFn<'_, BigRational>,
    g: &PointFn<'_, BigRational>,
    window: &[(i64, i64)],
) -> BigRational {
    let t = BigRational::from_integer(0.into());
    let mut lf = Nested::new(f, vec![Stencil::forward(model, t.clone(), 0, rational_lift)]);
    let mut lg = Nested::new(g, vec![Stencil::adjoint(model, t, 0, rational_lift)]);
    let mut acc = qi(0);
    for x in window_points(window) {
        acc += lf.eval(&x) * g(&x) - f(&x) * lg.eval(&x);
    }
    acc
}

/// Checks `△v_p = γ Σ_{j<p} C(−c−j, p−j) v_j` exactly on a window, the
/// recursive structure behind polyharmonicity of the coefficients.
pub fn recurrence_identity(
    model: &Model,
    e: &AsymptoticExpansion,
    p: usize,
    window: &[(i64, i64)],
) -> Result<Verification> {
    let fns: Vec<PolyharmonicFn> = (1..=p).map(|j| PolyharmonicFn::from_expansion(e, j)).collect();
    let coeff = |j: usize| -> FieldElem {
        // C(−c−j, p−j) = Π_{i<p−j} (−c−j−i)/(p−j)!
        let mut num = qi(1);
        for i in 0..(p - j) {
            num *= -e.c.clone() - qi((j + i) as i64);
        }
        num /= binomial((p - j) as u64, 0)
            * BigRational::from_integer(crate::exactalg::rational::factorial((p - j) as u64));
        FieldElem::rational(num).mul(&e.gamma)
    };
    let target = fns.last().unwrap().clone();
    let lap = |x: &[i64]| target.value(x).unwrap_or_else(|_| FieldElem::zero());
    let mut nest = Nested::new(&lap, vec![Stencil::forward(model, e.gamma.clone(), 0, |w| w.clone())]);
    let pts = window_points(window);
    for (i, x) in pts.iter().enumerate() {
        let mut rhs = FieldElem::zero();
        for j in 1..p {
            rhs = rhs.add(&coeff(j).mul(&fns[j - 1].value(x)?));
        }
        let lhs = nest.eval(x);
        if lhs != rhs {
            return Ok(Verification {
                passed: false,
                checked: i,
                witness: Some((x.clone(), lhs.sub(&rhs).to_string())),
            });
        }
    }
    Ok(Verification::pass(pts.len()))
}

/// Top-total-degree homogeneous part.
pub fn leading_homogeneous<C: Field>(f: &LaurentPoly<C>) -> LaurentPoly<C> {
    match f.total_degree() {
        Some(d) => f.homogeneous_part(d),
        None => f.clone(),
    }
}

/// Multiplies the exponential prefactor by `α^{−x}`.
///
/// If `f` is polyharmonic for the Laplacian of a model, the result is
/// polyharmonic for the model reweighted by `α^s` with the same eigenvalue.
pub fn conjugate_by_cramer(f: &PolyharmonicFn, alpha: &[FieldElem]) -> Result<PolyharmonicFn> {
    let mut out = f.clone();
    for (b, a) in out.exp_prefactor.iter_mut().zip(alpha) {
        *b = b.mul(&a.inv().ok_or(Error::DivisionByZero)?);
    }
    Ok(out)
}

/// Polyharmonic basis `h_n^m` in the shifted orthant (domain `x ≥ 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct PolyBasis {
    pub entries: BTreeMap<(usize, usize), LaurentPoly<BigRational>>,
    pub gamma: BigRational,
    /// Whether `△h_{n+1}^m = h_n^m` was verified for every stored pair.
    pub ladder: bool,
}

impl PolyBasis {
    pub fn get(&self, n: usize, m: usize) -> Option<&LaurentPoly<BigRational>> {
        self.entries.get(&(n, m))
    }
}

fn monomials(d: usize, deg: usize) -> Vec<Exp> {
    let mut out: Vec<Exp> = vec![SmallVec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|e| {
                let used: i32 = e.iter().sum();
                (0..=(deg as i32 - used)).map(move |k| {
                    let mut f = e.clone();
                    f.push(k);
                    f
                })
            })
            .collect();
    }
    out.sort_by(|a, b| grlex_cmp(a, b));
    out
}

/// `Σ_s ω_s h(x − s) − t h(x)` as a polynomial identity.
fn poly_laplacian(model: &Model, h: &LaurentPoly<BigRational>, t: &BigRational) -> Result<LaurentPoly<BigRational>> {
    let mut acc = h.scale(&(-t.clone()));
    let w = model
        .rational_weights()
        .ok_or_else(|| Error::Inexact("basis construction needs rational weights".into()))?;
    for (s, ws) in model.steps().iter().zip(w) {
        let a: Vec<BigRational> = s.offsets.iter().map(|&k| qi(-(k as i64))).collect();
        acc = acc.add(&h.translate(&a)?.scale(&ws));
    }
    Ok(acc)
}

/// Points `(1 + a, 1 + b, …)` ordered by total degree of the offset, larger
/// leading coordinates first.
fn greedy_order(d: usize, reach: usize) -> Vec<Vec<i64>> {
    let mut pts = Vec::new();
    for tot in 0..=reach {
        let mut level: Vec<Vec<i64>> = monomials(d, tot)
            .into_iter()
            .filter(|e| e.iter().sum::<i32>() as usize == tot)
            .map(|e| e.iter().map(|&k| 1 + k as i64).collect())
            .collect();
        level.sort_by(|a, b| b.cmp(a));
        pts.extend(level);
    }
    pts
}

struct HarmonicSpace {
    /// Boundary factor times a generic polynomial of bounded degree.
    columns: Vec<LaurentPoly<BigRational>>,
    /// Images of the columns under the Laplacian.
    images: Vec<LaurentPoly<BigRational>>,
}

impl HarmonicSpace {
    fn new(model: &Model, t: &BigRational, deg: usize) -> Result<Self> {
        let d = model.dim();
        let v = endpoint_vars(d);
        let up: Vec<i32> = (0..d)
            .map(|j| model.steps().iter().map(|s| s.offsets[j]).max().unwrap_or(0).max(1))
            .collect();
        // vanish on x_j = 0, −1, …, 1 − up_j
        let mut boundary = LaurentPoly::constant_in(v.clone(), qi(1));
        for (j, &r) in up.iter().enumerate() {
            for c in 0..r {
                let lin = LaurentPoly::var_in(v.clone(), j).add(&LaurentPoly::constant_in(v.clone(), qi(c as i64)));
                boundary = boundary.mul(&lin);
            }
        }
        let bdeg = boundary.total_degree().unwrap_or(0) as usize;
        let mut columns = Vec::new();
        if deg >= bdeg {
            for e in monomials(d, deg - bdeg) {
                columns.push(boundary.mul(&LaurentPoly::monomial_in(v.clone(), &e, qi(1))));
            }
        }
        let images = columns
            .iter()
            .map(|c| poly_laplacian(model, c, t))
            .collect::<Result<_>>()?;
        Ok(HarmonicSpace { columns, images })
    }

    fn combine(&self, x: &[BigRational]) -> LaurentPoly<BigRational> {
        let v = endpoint_vars(self.columns.first().map_or(2, |c| c.nvars()));
        let mut acc = LaurentPoly::zero_in(v);
        for (c, xi) in self.columns.iter().zip(x) {
            if !Field::is_zero(xi) {
                acc = acc.add(&c.scale(xi));
            }
        }
        acc
    }

    /// Matrix of `Σ x_i image_i = rhs` by monomial rows.
    fn system(&self, rhs: &LaurentPoly<BigRational>) -> (Vec<Vec<BigRational>>, Vec<BigRational>) {
        let mut rows: Vec<Exp> = self
            .images
            .iter()
            .flat_map(|p| p.terms().map(|(e, _)| e.clone()))
            .collect();
        rows.extend(rhs.terms().map(|(e, _)| e.clone()));
        rows.sort();
        rows.dedup();
        let m = rows
            .iter()
            .map(|e| self.images.iter().map(|p| p.coeff(e)).collect())
            .collect();
        let b = rows.iter().map(|e| rhs.coeff(e)).collect();
        (m, b)
    }

    /// Harmonic polynomials in this space, as coefficient vectors.
    fn kernel(&self) -> Vec<Vec<BigRational>> {
        let zero = LaurentPoly::zero_in(endpoint_vars(self.columns.first().map_or(2, |c| c.nvars())));
        let (m, _) = self.system(&zero);
        if m.is_empty() {
            return (0..self.columns.len())
                .map(|i| (0..self.columns.len()).map(|j| qi((i == j) as i64)).collect())
                .collect();
        }
        linalg::nullspace(&m, self.columns.len())
    }
}

fn eval_at(p: &LaurentPoly<BigRational>, x: &[i64]) -> BigRational {
    let pt: Vec<BigRational> = x.iter().map(|&k| qi(k)).collect();
    p.eval(&pt).expect("polynomial")
}

/// Greedy vanishing points making the evaluation of `funcs` reach `rank`.
fn greedy_points(funcs: &[LaurentPoly<BigRational>], rank: usize, d: usize) -> Result<Vec<Vec<i64>>> {
    let mut chosen: Vec<Vec<i64>> = Vec::new();
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    if rank == 0 {
        return Ok(chosen);
    }
    for reach in 0.. {
        for x in greedy_order(d, reach) {
            if chosen.contains(&x) {
                continue;
            }
            let row: Vec<BigRational> = funcs.iter().map(|f| eval_at(f, &x)).collect();
            let mut trial = rows.clone();
            trial.push(row.clone());
            if linalg::rank(&trial) > rows.len() {
                rows.push(row);
                chosen.push(x);
                if rows.len() == rank {
                    return Ok(chosen);
                }
            }
        }
        if reach > 64 {
            break;
        }
    }
    Err(Error::NoSolutionWithinDegreeBound(rank))
}

fn unit_leading(p: LaurentPoly<BigRational>) -> LaurentPoly<BigRational> {
    match p.leading_grlex() {
        Some((_, c)) => {
            let inv = Field::inv(c).expect("nonzero");
            p.scale(&inv)
        }
        None => p,
    }
}

/// Builds `h_n^m` for `n ≤ max_n`, `m ≤ max_m` in shifted coordinates.
///
/// `h_1^m` is the `m`-th harmonic polynomial by degree, made unique by
/// vanishing at greedy points that separate the lower harmonics and scaled to
/// unit grlex-leading coefficient. `h_{n+1}^m` solves `△h = h_n^m` with the
/// least degree, made unique by vanishing at greedy points that separate all
/// harmonics of that degree.
pub fn build_basis(model: &Model, gamma: &FieldElem, max_n: usize, max_m: usize) -> Result<PolyBasis> {
    const MAX_DEGREE: usize = 40;
    let d = model.dim();
    let t = gamma
        .to_rational()
        .ok_or_else(|| Error::Inexact("basis construction needs rational γ".into()))?;
    let mut spaces: HashMap<usize, HarmonicSpace> = HashMap::new();
    let mut space = |deg: usize| -> Result<HarmonicSpace> {
        if let Some(s) = spaces.remove(&deg) {
            return Ok(s);
        }
        HarmonicSpace::new(model, &t, deg)
    };
    let harmonics =
        |sp: &HarmonicSpace| -> Vec<LaurentPoly<BigRational>> { sp.kernel().iter().map(|x| sp.combine(x)).collect() };

    let mut entries = BTreeMap::new();
    let mut deg = 0;
    let mut prev_dim = 0;
    let mut m = 1;
    while m <= max_m {
        if deg > MAX_DEGREE {
            return Err(Error::NoSolutionWithinDegreeBound(MAX_DEGREE));
        }
        let sp = space(deg)?;
        let hs = harmonics(&sp);
        if hs.len() < m {
            deg += 1;
            continue;
        }
        let new_here = hs.len() - prev_dim;
        for j in 0..new_here {
            if m > max_m {
                break;
            }
            let pts = greedy_points(&hs, hs.len() - 1, d)?;
            let mut sol: Vec<LaurentPoly<BigRational>> = {
                let mat: Vec<Vec<BigRational>> =
                    pts.iter().map(|x| hs.iter().map(|h| eval_at(h, x)).collect()).collect();
                let ker = if mat.is_empty() {
                    vec![vec![qi(1)]]
                } else {
                    linalg::nullspace(&mat, hs.len())
                };
                ker.iter()
                    .map(|c| {
                        hs.iter()
                            .zip(c)
                            .fold(LaurentPoly::zero_in(endpoint_vars(d)), |acc, (h, ci)| {
                                acc.add(&h.scale(ci))
                            })
                    })
                    .collect()
            };
            sol.sort_by(|a, b| grlex_cmp(a.leading_grlex().unwrap().0, b.leading_grlex().unwrap().0));
            let pick = sol
                .get(j)
                .or(sol.last())
                .cloned()
                .ok_or(Error::NoSolutionWithinDegreeBound(deg))?;
            entries.insert((1, m), unit_leading(pick));
            m += 1;
        }
        prev_dim = hs.len();
        deg += 1;
    }

    for m in 1..=max_m {
        for n in 1..max_n {
            let lower = entries[&(n, m)].clone();
            let start = lower.total_degree().unwrap_or(0) as usize + 1;
            let mut found = None;
            for deg in start..=MAX_DEGREE {
                let sp = space(deg)?;
                let (mat, rhs) = sp.system(&lower);
                let Some(x) = linalg::solve_any(&mat, &rhs) else {
                    continue;
                };
                let particular = sp.combine(&x);
                let hs = harmonics(&sp);
                let pts = greedy_points(&hs, hs.len(), d)?;
                // particular + Σ c_i h_i vanishing at the points
                let a: Vec<Vec<BigRational>> = pts.iter().map(|p| hs.iter().map(|h| eval_at(h, p)).collect()).collect();
                let b: Vec<BigRational> = pts.iter().map(|p| -eval_at(&particular, p)).collect();
                let c = if hs.is_empty() {
                    vec![]
                } else {
                    linalg::solve(&a, &b).ok_or(Error::NoSolutionWithinDegreeBound(deg))?
                };
                let h = hs.iter().zip(&c).fold(particular, |acc, (h, ci)| acc.add(&h.scale(ci)));
                found = Some(h);
                break;
            }
            let h = found.ok_or(Error::NoSolutionWithinDegreeBound(MAX_DEGREE))?;
            entries.insert((n + 1, m), h);
        }
    }
    let ladder = entries
        .iter()
        .all(|(&(n, m), h)| match entries.get(&(n.wrapping_sub(1), m)) {
            Some(lower) if n > 1 => poly_laplacian(model, h, &t).map(|l| l == *lower).unwrap_or(false),
            _ => true,
        });
    Ok(PolyBasis {
        entries,
        gamma: t,
        ladder,
    })
}

/// One product `a · h_i^j(k, l) · h̃_{i'}^{j'}(u, v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionTerm {
    pub end: (usize, usize),
    pub start: (usize, usize),
    pub coefficient: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub terms: Vec<DecompositionTerm>,
    /// Number of candidate products considered.
    pub candidates: usize,
}

impl Decomposition {
    pub fn coefficient(&self, end: (usize, usize), start: (usize, usize)) -> BigRational {
        self.terms
            .iter()
            .find(|t| t.end == end && t.start == start)
            .map_or_else(|| qi(0), |t| t.coefficient.clone())
    }
}

/// Bound `p(p+1)(p+2)(p+3)/24` on the number of summands.
pub fn summand_bound(p: usize) -> usize {
    p * (p + 1) * (p + 2) * (p + 3) / 24
}

/// Writes `v(K, L, U, V)` (shifted coordinates, rational coefficients) as
/// `Σ a · h_i^j(K, L) h̃_{i'}^{j'}(U, V)` with `i + i' ≤ p + 1`.
pub fn decompose(
    v: &LaurentPoly<BigRational>,
    basis: &PolyBasis,
    adjoint: &PolyBasis,
    p: usize,
) -> Result<Decomposition> {
    let vars4 = endpoint_start_vars(2);
    let deg_in = |f: &LaurentPoly<BigRational>, idx: &[usize]| f.partial_degree(idx).unwrap_or(-1);
    let dkl = deg_in(v, &[0, 1]);
    let duv = deg_in(v, &[2, 3]);
    let dtot = v.total_degree().unwrap_or(-1);
    let mut cands = Vec::new();
    for (&(i, j), h) in &basis.entries {
        for (&(i2, j2), g) in &adjoint.entries {
            let (dh, dg) = (h.total_degree().unwrap_or(0), g.total_degree().unwrap_or(0));
            if i + i2 <= p + 1 && dh <= dkl && dg <= duv && dh + dg <= dtot {
                let hh = h.embed(vars4.clone(), &[0, 1]);
                let gg = g.embed(vars4.clone(), &[2, 3]);
                cands.push(((i, j), (i2, j2), hh.mul(&gg)));
            }
        }
    }
    let mut rows: Vec<Exp> = cands.iter().flat_map(|c| c.2.terms().map(|(e, _)| e.clone())).collect();
    rows.extend(v.terms().map(|(e, _)| e.clone()));
    rows.sort();
    rows.dedup();
    let m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|e| cands.iter().map(|c| c.2.coeff(e)).collect())
        .collect();
    let b: Vec<BigRational> = rows.iter().map(|e| v.coeff(e)).collect();
    let x = linalg::solve_any(&m, &b).ok_or_else(|| {
        Error::DecompositionInfeasible(format!("v_{} is not in the span of {} products", p, cands.len()))
    })?;
    let terms: Vec<DecompositionTerm> = cands
        .iter()
        .zip(x)
        .filter(|(_, c)| !Field::is_zero(c))
        .map(|(c, a)| DecompositionTerm {
            end: c.0,
            start: c.1,
            coefficient: a,
        })
        .collect();
    if terms.len() > summand_bound(p) {
        return Err(Error::DecompositionInfeasible(format!(
            "{} summands exceed the bound {}",
            terms.len(),
            summand_bound(p)
        )));
    }
    Ok(Decomposition {
        terms,
        candidates: cands.len(),
    })
}

/// Writes `f = λ·g` with `g` having coprime integer coefficients and a
/// positive grlex-leading coefficient. Returns `(λ, g)`.
pub fn primitive_part(f: &LaurentPoly<BigRational>) -> (BigRational, LaurentPoly<BigRational>) {
    use num_integer::Integer;
    let mut den = num_bigint::BigInt::from(1);
    let mut num = num_bigint::BigInt::from(0);
    for (_, c) in f.terms() {
        den = den.lcm(c.denom());
        num = num.gcd(c.numer());
    }
    if num == num_bigint::BigInt::from(0) {
        return (qi(1), f.clone());
    }
    let mut lambda = BigRational::new(num, den);
    if f.leading_grlex().is_some_and(|(_, c)| c < &qi(0)) {
        lambda = -lambda;
    }
    let inv = Field::inv(&lambda).expect("nonzero");
    (lambda, f.scale(&inv))
}

/// `f(k−1, l−1, …)`: rewrites a polynomial in the shifted orthant coordinates.
pub fn to_shifted(f: &LaurentPoly<FieldElem>) -> Result<LaurentPoly<FieldElem>> {
    let a: Vec<FieldElem> = (0..f.nvars()).map(|_| FieldElem::from_int(-1)).collect();
    f.translate(&a)
}

/// Rational coefficients, or an error naming the first irrational one.
pub fn to_rational_poly(f: &LaurentPoly<FieldElem>) -> Result<LaurentPoly<BigRational>> {
    let terms = f
        .terms()
        .map(|(e, c)| {
            c.to_rational()
                .map(|r| (e.clone(), r))
                .ok_or_else(|| Error::Inexact(format!("coefficient {} is not rational", c)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LaurentPoly::from_terms(f.vars().clone(), terms))
}

/// Lifts a rational polynomial into the field.
pub fn from_rational_poly(f: &LaurentPoly<BigRational>) -> LaurentPoly<FieldElem> {
    f.map_coeffs(|c| FieldElem::rational(c.clone()))
}

/// Variables of a basis polynomial.
pub fn basis_vars() -> Arc<Vec<String>> {
    endpoint_vars(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rational::q;
    use crate::expansion;

    fn sw() -> Model {
        Model::unweighted("SW", &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]).unwrap()
    }
    fn gb() -> Model {
        Model::unweighted("GB", &[&[-1, 1], &[1, -1], &[-1, 0], &[1, 0]]).unwrap()
    }
    fn tandem() -> Model {
        Model::unweighted("Tandem", &[&[-1, 0], &[0, 1], &[1, -1]]).unwrap()
    }
    fn kl(terms: &[(i64, i32, i32)]) -> LaurentPoly<BigRational> {
        LaurentPoly::from_terms(
            basis_vars(),
            terms.iter().map(|&(c, i, j)| (SmallVec::from_slice(&[i, j]), qi(c))),
        )
    }

    #[test]
    fn sw_harmonic_function() {
        let f = |x: &[i64]| qi((x[0] + 1) * (x[1] + 1));
        for p in [[0, 0], [3, 0], [4, 7]] {
            assert_eq!(apply_laplacian(&sw(), &f, &p, &qi(4), rational_lift), qi(0));
        }
        let z = |_: &[i64]| qi(0);
        assert_eq!(apply_laplacian(&sw(), &z, &[2, 2], &qi(4), rational_lift), qi(0));
    }

    #[test]
    fn adjointness_on_finite_support() {
        let m = tandem();
        let f = |x: &[i64]| {
            if x[0] <= 3 && x[1] <= 2 {
                qi(x[0] * 7 - x[1] * x[1] + 2)
            } else {
                qi(0)
            }
        };
        let g = |x: &[i64]| {
            if x[0] <= 2 && x[1] <= 4 {
                qi(x[0] * x[1] + 1)
            } else {
                qi(0)
            }
        };
        assert_eq!(adjointness_defect(&m, &f, &g, &[(0, 8), (0, 8)]), qi(0));
        let r = m.reverse();
        let h = |x: &[i64]| qi(x[0] * x[0] + 3 * x[1]);
        for p in [[1, 1], [0, 3], [5, 2]] {
            assert_eq!(
                apply_adjoint_laplacian(&m, &h, &p, &qi(3), rational_lift),
                apply_laplacian(&r, &h, &p, &qi(3), rational_lift)
            );
        }
    }

    #[test]
    fn gb_coefficients_are_polyharmonic() {
        let e = expansion::expand(&gb(), 2).unwrap();
        let w = [(0, 30), (0, 30)];
        let v1 = PolyharmonicFn::from_expansion(&e, 1);
        assert!(verify_polyharmonic(&gb(), &v1, 1, &w).unwrap().passed);
        let v2 = PolyharmonicFn::from_expansion(&e, 2);
        assert!(verify_polyharmonic(&gb(), &v2, 2, &w).unwrap().passed);
        let fail = verify_polyharmonic(&gb(), &v2, 1, &w).unwrap();
        assert!(!fail.passed && fail.witness.is_some());
        assert!(recurrence_identity(&gb(), &e, 2, &[(0, 10), (0, 10)]).unwrap().passed);
    }

    #[test]
    fn sw_basis_matches_known_functions() {
        let b = build_basis(&sw(), &FieldElem::from_int(4), 3, 3).unwrap();
        assert!(b.ladder);
        assert_eq!(b.get(1, 1).unwrap(), &kl(&[(1, 1, 1)]));
        assert_eq!(b.get(1, 2).unwrap(), &kl(&[(1, 3, 1), (-1, 1, 3)]));
        // kl(l² − 1) up to the ladder scaling
        let h21 = kl(&[(1, 1, 3), (-1, 1, 1)]);
        let got = b.get(2, 1).unwrap();
        let (e, c) = got.leading_grlex().unwrap();
        assert_eq!(h21.coeff(e), qi(1));
        assert_eq!(*got, h21.scale(c));
    }

    #[test]
    fn leading_part_and_conjugation() {
        let f = kl(&[(3, 2, 1), (1, 0, 1), (-2, 1, 2)]);
        assert_eq!(leading_homogeneous(&f), kl(&[(3, 2, 1), (-2, 1, 2)]));
        let pf = PolyharmonicFn::polynomial(from_rational_poly(&f), FieldElem::from_int(4), 1);
        let one = vec![FieldElem::one(); 2];
        assert_eq!(conjugate_by_cramer(&pf, &one).unwrap(), pf);
        let a = vec![FieldElem::rational(q(2, 1)), FieldElem::rational(q(1, 3))];
        let back: Vec<FieldElem> = a.iter().map(|x| x.inv().unwrap()).collect();
        let c = conjugate_by_cramer(&conjugate_by_cramer(&pf, &a).unwrap(), &back).unwrap();
        assert_eq!(c, pf);
    }
}
