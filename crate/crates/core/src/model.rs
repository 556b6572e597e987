//! Weighted step sets and their structural diagnostics.

use crate::error::{Error, Result};
use crate::exactalg::linalg;
use crate::exactalg::poly::{vars, Exp, LaurentPoly};
use crate::exactalg::rational::{fmt_rational, qi, sign};
use crate::exactalg::snf::smith;
use crate::exactalg::{Field, FieldElem, Radical, RootOfUnity};
use num_integer::Integer;
use num_rational::BigRational;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub offsets: Vec<i32>,
    pub weight: FieldElem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    dim: usize,
    steps: Vec<Step>,
    name: String,
}

/// Variable names for a `d`-dimensional model.
pub fn var_names(d: usize) -> Arc<Vec<String>> {
    match d {
        1 => vars(&["x"]),
        2 => vars(&["x", "y"]),
        3 => vars(&["x", "y", "z"]),
        _ => Arc::new((1..=d).map(|i| format!("x{}", i)).collect()),
    }
}

/// Exact (or numeric) description of the correlation angle θ.
#[derive(Clone, Debug, PartialEq)]
pub struct Correlation {
    /// `cos θ = -Σ ij ω / sqrt(Σ i²ω · Σ j²ω)`.
    pub argument: FieldElem,
    pub pi_over_theta: Option<BigRational>,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelDiagnostics {
    pub drift: Vec<FieldElem>,
    pub nondegenerate: bool,
    /// `None` when the coset of the steps has infinite order.
    pub period: Option<u64>,
    pub correlation: Option<Correlation>,
}

/// The finite abelian group `Z^d / L` in Smith coordinates.
#[derive(Clone, Debug)]
pub struct QuotientLattice {
    /// Invariant factors (1 entries included).
    pub factors: Vec<i64>,
    /// Column transform: a character with Smith coordinates `a` has angles `V a/d`.
    pub v: Vec<Vec<i64>>,
}

impl Model {
    pub fn new(dim: usize, steps: Vec<Step>, name: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        if steps.len() < 2 {
            return Err(Error::InvalidModel("at least two steps are required".into()));
        }
        let mut seen = BTreeSet::new();
        for s in &steps {
            if s.offsets.len() != dim {
                return Err(Error::InvalidModel(format!("step {:?} has wrong dimension", s.offsets)));
            }
            if s.offsets.iter().all(|&x| x == 0) {
                return Err(Error::InvalidModel("zero step".into()));
            }
            if !seen.insert(s.offsets.clone()) {
                return Err(Error::InvalidModel(format!("duplicate step {:?}", s.offsets)));
            }
            if s.weight.signum() != Some(1) {
                return Err(Error::InvalidModel(format!(
                    "weight of {:?} is not positive",
                    s.offsets
                )));
            }
        }
        Ok(Model {
            dim,
            steps,
            name: name.into(),
        })
    }

    /// Unit-weight model from offsets.
    pub fn unweighted(name: &str, offsets: &[&[i32]]) -> Result<Self> {
        let dim = offsets.first().map_or(0, |o| o.len());
        let steps = offsets
            .iter()
            .map(|o| Step {
                offsets: o.to_vec(),
                weight: FieldElem::one(),
            })
            .collect();
        Model::new(dim, steps, name)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn vars(&self) -> Arc<Vec<String>> {
        var_names(self.dim)
    }

    pub fn is_small_steps(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.offsets.iter().all(|&x| (-1..=1).contains(&x)))
    }

    /// Largest positive and negative coordinate displacement per axis.
    pub fn reach(&self) -> (Vec<i32>, Vec<i32>) {
        let up = (0..self.dim)
            .map(|i| self.steps.iter().map(|s| s.offsets[i]).max().unwrap().max(0))
            .collect();
        let down = (0..self.dim)
            .map(|i| self.steps.iter().map(|s| -s.offsets[i]).max().unwrap().max(0))
            .collect();
        (up, down)
    }

    /// Weights as rationals, if all are rational.
    pub fn rational_weights(&self) -> Option<Vec<BigRational>> {
        self.steps.iter().map(|s| s.weight.to_rational()).collect()
    }

    pub fn step_polynomial(&self) -> LaurentPoly<FieldElem> {
        LaurentPoly::from_terms(
            self.vars(),
            self.steps
                .iter()
                .map(|s| (s.offsets.iter().copied().collect::<Exp>(), s.weight.clone())),
        )
    }

    /// Step polynomial over the rationals; fails for irrational weights.
    pub fn step_polynomial_q(&self) -> Result<LaurentPoly<BigRational>> {
        let w = self
            .rational_weights()
            .ok_or_else(|| Error::Unsupported("irrational weights".into()))?;
        Ok(LaurentPoly::from_terms(
            self.vars(),
            self.steps
                .iter()
                .zip(w)
                .map(|(s, w)| (s.offsets.iter().copied().collect::<Exp>(), w)),
        ))
    }

    pub fn drift(&self) -> Vec<FieldElem> {
        (0..self.dim)
            .map(|i| {
                self.steps.iter().fold(FieldElem::zero(), |acc, s| {
                    acc.add(&s.weight.mul(&FieldElem::from_int(s.offsets[i] as i64)))
                })
            })
            .collect()
    }

    /// True when the drift is exactly zero (balls count as nonzero unless
    /// they are the point zero).
    pub fn has_zero_drift(&self) -> bool {
        self.drift().iter().all(|x| x.is_zero())
    }

    /// Origin strictly inside the convex hull of the offsets.
    ///
    /// Equivalent to the offsets positively spanning `R^d`: they must span,
    /// and no facet normal of their cone may have all offsets on one side.
    pub fn check_nondegenerate(&self) -> bool {
        let d = self.dim;
        let rows: Vec<Vec<BigRational>> = self
            .steps
            .iter()
            .map(|s| s.offsets.iter().map(|&x| qi(x as i64)).collect())
            .collect();
        if linalg::rank(&rows) < d {
            return false;
        }
        if d == 1 {
            let has_pos = self.steps.iter().any(|s| s.offsets[0] > 0);
            let has_neg = self.steps.iter().any(|s| s.offsets[0] < 0);
            return has_pos && has_neg;
        }
        combinations(self.steps.len(), d - 1).into_iter().all(|subset| {
            let chosen: Vec<Vec<BigRational>> = subset.iter().map(|&i| rows[i].clone()).collect();
            if linalg::rank(&chosen) < d - 1 {
                return true;
            }
            let normal = generalized_cross(&chosen);
            let signs: Vec<i32> = rows
                .iter()
                .map(|r| {
                    let dot = r
                        .iter()
                        .zip(&normal)
                        .fold(<BigRational as Field>::zero(), |a, (x, y)| a + x * y);
                    sign(&dot)
                })
                .collect();
            !(signs.iter().all(|&s| s >= 0) || signs.iter().all(|&s| s <= 0))
        })
    }

    /// `Z^d / L` for the lattice `L` spanned by offset differences.
    pub fn quotient_lattice(&self) -> QuotientLattice {
        let s0 = &self.steps[0].offsets;
        let m: Vec<Vec<i64>> = self.steps[1..]
            .iter()
            .map(|s| s.offsets.iter().zip(s0).map(|(a, b)| (*a - *b) as i64).collect())
            .collect();
        let sm = smith(&m);
        let mut factors = sm.d.clone();
        factors.resize(self.dim, 0);
        QuotientLattice { factors, v: sm.v }
    }

    /// Order of the common coset of the offsets in `Z^d / L`.
    pub fn periodicity(&self) -> Option<u64> {
        let q = self.quotient_lattice();
        let s0: Vec<i64> = self.steps[0].offsets.iter().map(|&x| x as i64).collect();
        // Smith coordinates of s0: row vector s0 · V
        let mut order: i64 = 1;
        for (i, &di) in q.factors.iter().enumerate() {
            let w: i64 = (0..self.dim).map(|j| s0[j] * q.v[j][i]).sum();
            if di == 0 {
                if w != 0 {
                    return None;
                }
                continue;
            }
            let oi = di / w.gcd(&di);
            order = order.lcm(&oi);
        }
        Some(order as u64)
    }

    /// All characters of `Z^d / L` as root-of-unity vectors, trivial first.
    pub fn characters(&self) -> Result<Vec<Vec<RootOfUnity>>> {
        let q = self.quotient_lattice();
        if q.factors.contains(&0) {
            return Err(Error::DegenerateModel);
        }
        let big = q.factors.iter().fold(1i64, |a, &b| a.lcm(&b));
        let mut out = Vec::new();
        let mut idx = vec![0i64; self.dim];
        loop {
            let chi: Vec<RootOfUnity> = (0..self.dim)
                .map(|j| {
                    let num: i64 = (0..self.dim).map(|i| q.v[j][i] * idx[i] * (big / q.factors[i])).sum();
                    RootOfUnity::new(num, big)
                })
                .collect();
            out.push(chi);
            let mut k = 0;
            loop {
                if k == self.dim {
                    return Ok(out);
                }
                idx[k] += 1;
                if idx[k] < q.factors[k] {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Correlation angle of a zero-drift planar model.
    pub fn correlation_coefficient(&self) -> Result<Correlation> {
        if self.dim != 2 {
            return Err(Error::Unsupported("correlation needs two dimensions".into()));
        }
        if !self.has_zero_drift() {
            return Err(Error::NonzeroDrift);
        }
        let weights: Vec<FieldElem> = self.steps.iter().map(|s| s.weight.clone()).collect();
        let offsets: Vec<Vec<i32>> = self.steps.iter().map(|s| s.offsets.clone()).collect();
        Ok(correlation_from_moments(&offsets, &weights))
    }

    pub fn diagnostics(&self) -> ModelDiagnostics {
        ModelDiagnostics {
            drift: self.drift(),
            nondegenerate: self.check_nondegenerate(),
            period: self.periodicity(),
            correlation: self.correlation_coefficient().ok(),
        }
    }

    pub fn reverse(&self) -> Model {
        Model {
            dim: self.dim,
            steps: self
                .steps
                .iter()
                .map(|s| Step {
                    offsets: s.offsets.iter().map(|x| -x).collect(),
                    weight: s.weight.clone(),
                })
                .collect(),
            name: format!("{} (reversed)", self.name),
        }
    }

    /// Reweights `ω_s ↦ ω_s · α^s` with `α` the dominant saddle point, which
    /// removes the drift.
    pub fn cramer_transform(&self) -> Result<(Model, Vec<FieldElem>)> {
        if !self.check_nondegenerate() {
            return Err(Error::DegenerateModel);
        }
        let saddle = crate::saddle::find_dominant(self)?;
        let alpha = saddle.coords.clone();
        Ok((self.reweight(&alpha)?, alpha))
    }

    /// `ω_s ↦ ω_s · Π α_j^{s_j}`.
    pub fn reweight(&self, alpha: &[FieldElem]) -> Result<Model> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            let mut w = s.weight.clone();
            for (a, &k) in alpha.iter().zip(&s.offsets) {
                w = w.mul(&a.powi(k as i64).ok_or(Error::DivisionByZero)?);
            }
            steps.push(Step {
                offsets: s.offsets.clone(),
                weight: w,
            });
        }
        Model::new(self.dim, steps, format!("{} (Cramer)", self.name))
    }

    /// Parses the line-oriented model format.
    pub fn parse(text: &str) -> Result<Model> {
        let mut dim: Option<usize> = None;
        let mut name = String::new();
        let mut steps = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            match key {
                "dim" => dim = Some(rest.trim().parse().map_err(|_| err("bad dimension"))?),
                "name" => name = rest.trim().to_string(),
                "step" => {
                    let d = dim.ok_or_else(|| err("step before dim"))?;
                    let toks: Vec<&str> = rest.split_whitespace().collect();
                    if toks.len() < d + 1 {
                        return Err(err("step needs offsets and a weight"));
                    }
                    let offsets = toks[..d]
                        .iter()
                        .map(|t| t.parse::<i32>().map_err(|_| err("bad offset")))
                        .collect::<Result<Vec<_>>>()?;
                    let wtext = toks[d..].join(" ");
                    let weight = FieldElem::parse(&wtext).ok_or_else(|| err("bad weight"))?;
                    steps.push(Step { offsets, weight });
                }
                _ => return Err(err(&format!("unknown directive `{}`", key))),
            }
        }
        let dim = dim.ok_or(Error::Parse {
            line: 0,
            msg: "missing dim".into(),
        })?;
        Model::new(dim, steps, name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            writeln!(out, "name {}", self.name).unwrap();
        }
        writeln!(out, "dim {}", self.dim).unwrap();
        for s in &self.steps {
            let offs: Vec<String> = s.offsets.iter().map(|x| x.to_string()).collect();
            let w = match s.weight.to_rational() {
                Some(q) => fmt_rational(&q),
                None => s.weight.to_string(),
            };
            writeln!(out, "step {} {}", offs.join(" "), w).unwrap();
        }
        out
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `(-1)^i det(minor_i)` for `d-1` vectors in `d` dimensions.
fn generalized_cross(rows: &[Vec<BigRational>]) -> Vec<BigRational> {
    let d = rows.len() + 1;
    (0..d)
        .map(|i| {
            let minor: Vec<Vec<BigRational>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, x)| x.clone())
                        .collect()
                })
                .collect();
            let det = if minor.is_empty() {
                <BigRational as Field>::one()
            } else {
                linalg::det(&minor)
            };
            if i % 2 == 0 {
                det
            } else {
                -det
            }
        })
        .collect()
}

/// Correlation from second moments of (not necessarily normalized) weights.
pub fn correlation_from_moments(offsets: &[Vec<i32>], weights: &[FieldElem]) -> Correlation {
    let mut sxx = FieldElem::zero();
    let mut syy = FieldElem::zero();
    let mut sxy = FieldElem::zero();
    for (o, w) in offsets.iter().zip(weights) {
        let (i, j) = (o[0] as i64, o[1] as i64);
        sxx = sxx.add(&w.mul(&FieldElem::from_int(i * i)));
        syy = syy.add(&w.mul(&FieldElem::from_int(j * j)));
        sxy = sxy.add(&w.mul(&FieldElem::from_int(i * j)));
    }
    let prod = sxx.mul(&syy);
    let argument = match prod.sqrt().and_then(|s| s.inv()) {
        Some(inv) => sxy.neg().mul(&inv),
        None => FieldElem::zero(),
    };
    // r^2 decides membership in the recognized set
    let r2 = sxy.mul(&sxy).div(&prod).and_then(|x| x.to_rational());
    let sign = sxy.neg().signum().unwrap_or(0);
    let pi_over_theta = r2.and_then(|r2| recognize_angle(&r2, sign));
    let theta = argument.to_f64().clamp(-1.0, 1.0).acos();
    Correlation {
        argument,
        pi_over_theta,
        theta,
    }
}

/// `π/θ` for `cos θ = sign·sqrt(r2)` in the finite recognized set.
fn recognize_angle(r2: &BigRational, sign: i32) -> Option<BigRational> {
    use crate::exactalg::rational::q;
    let table = [
        (q(0, 1), q(2, 1), q(2, 1)),
        (q(1, 4), q(3, 1), q(3, 2)),
        (q(1, 2), q(4, 1), q(4, 3)),
        (q(3, 4), q(6, 1), q(6, 5)),
    ];
    for (v, pos, neg) in table {
        if *r2 == v {
            return Some(if sign >= 0 { pos } else { neg });
        }
    }
    if *r2 == q(1, 1) && sign < 0 {
        return Some(q(1, 1));
    }
    None
}

/// Convenience: a model from `(offsets, p/q)` pairs with rational weights.
pub fn weighted(name: &str, dim: usize, steps: &[(&[i32], BigRational)]) -> Result<Model> {
    Model::new(
        dim,
        steps
            .iter()
            .map(|(o, w)| Step {
                offsets: o.to_vec(),
                weight: FieldElem::Exact(Radical::rational(w.clone())),
            })
            .collect(),
        name,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rational::q;

    fn sw() -> Model {
        Model::unweighted("SW", &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]).unwrap()
    }
    fn gb() -> Model {
        Model::unweighted("GB", &[&[-1, 1], &[1, -1], &[-1, 0], &[1, 0]]).unwrap()
    }
    fn tandem() -> Model {
        Model::unweighted("Tandem", &[&[-1, 0], &[0, 1], &[1, -1]]).unwrap()
    }
    fn diagonal() -> Model {
        Model::unweighted("Diagonal", &[&[1, 1], &[1, -1], &[-1, 1], &[-1, -1]]).unwrap()
    }

    #[test]
    fn step_polynomials() {
        let s = gb().step_polynomial_q().unwrap();
        assert_eq!(s.eval(&[qi(1), qi(1)]).unwrap(), qi(4));
        let single = Model::new(
            1,
            vec![
                Step {
                    offsets: vec![1],
                    weight: FieldElem::one(),
                },
                Step {
                    offsets: vec![-1],
                    weight: FieldElem::one(),
                },
            ],
            "",
        )
        .unwrap();
        assert_eq!(single.step_polynomial().len(), 2);
        let a = Model::unweighted("A", &[&[1, 0], &[-1, 0], &[0, -1], &[-2, 1]]).unwrap();
        let p = a.step_polynomial_q().unwrap();
        assert_eq!(p.coeff(&[-2, 1]), qi(1));
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn drifts() {
        assert!(gb().has_zero_drift());
        assert!(sw().has_zero_drift());
        let m = weighted(
            "d",
            2,
            &[(&[1, 0], qi(2)), (&[-1, 0], qi(1)), (&[0, 1], qi(1)), (&[0, -1], qi(1))],
        )
        .unwrap();
        assert_eq!(m.drift(), vec![FieldElem::from_int(1), FieldElem::zero()]);
    }

    #[test]
    fn nondegeneracy() {
        assert!(sw().check_nondegenerate());
        assert!(tandem().check_nondegenerate());
        assert!(!Model::unweighted("q", &[&[1, 0], &[0, 1]])
            .unwrap()
            .check_nondegenerate());
        assert!(!Model::unweighted("h", &[&[1, 0], &[-1, 0], &[0, 1]])
            .unwrap()
            .check_nondegenerate());
        let b = Model::unweighted("B", &[&[-1, -1, -1], &[-1, -1, 1], &[-1, 1, 0], &[1, 0, 0]]).unwrap();
        assert!(b.check_nondegenerate());
    }

    #[test]
    fn periods() {
        assert_eq!(sw().periodicity(), Some(2));
        assert_eq!(tandem().periodicity(), Some(3));
        assert_eq!(diagonal().periodicity(), Some(2));
        assert_eq!(gb().periodicity(), Some(2));
        assert_eq!(diagonal().characters().unwrap().len(), 4);
        assert_eq!(tandem().characters().unwrap().len(), 3);
    }

    #[test]
    fn characters_respect_steps() {
        for m in [sw(), gb(), tandem(), diagonal()] {
            for chi in m.characters().unwrap() {
                let val = |o: &[i32]| {
                    chi.iter()
                        .zip(o)
                        .fold(RootOfUnity::one(), |acc, (r, &k)| acc.mul(&r.pow(k as i64)))
                };
                let z = val(&m.steps()[0].offsets);
                for s in m.steps() {
                    assert_eq!(val(&s.offsets), z);
                }
            }
        }
    }

    #[test]
    fn correlations() {
        assert_eq!(gb().correlation_coefficient().unwrap().pi_over_theta, Some(qi(4)));
        assert_eq!(sw().correlation_coefficient().unwrap().pi_over_theta, Some(qi(2)));
        let t = tandem().correlation_coefficient().unwrap();
        assert_eq!(t.pi_over_theta, Some(qi(3)));
        assert_eq!(t.argument, FieldElem::rational(q(1, 2)));
        let g = gb().correlation_coefficient().unwrap();
        assert_eq!(g.argument.mul(&g.argument), FieldElem::rational(q(1, 2)));
        let m = weighted(
            "d",
            2,
            &[(&[1, 0], qi(2)), (&[-1, 0], qi(1)), (&[0, 1], qi(1)), (&[0, -1], qi(1))],
        )
        .unwrap();
        assert_eq!(m.correlation_coefficient().unwrap_err(), Error::NonzeroDrift);
    }

    #[test]
    fn reversal() {
        let r = tandem().reverse();
        let offs: BTreeSet<Vec<i32>> = r.steps().iter().map(|s| s.offsets.clone()).collect();
        let expect: BTreeSet<Vec<i32>> = [vec![1, 0], vec![0, -1], vec![-1, 1]].into_iter().collect();
        assert_eq!(offs, expect);
    }

    #[test]
    fn file_round_trip() {
        let text = "# GB\nname Gouyou-Beauchamps\ndim 2\nstep -1 1 1\nstep 1 -1 1\nstep -1 0 3/2\nstep 1 0 1\n";
        let m = Model::parse(text).unwrap();
        assert_eq!(m.steps()[2].weight, FieldElem::rational(q(3, 2)));
        let again = Model::parse(&m.to_text()).unwrap();
        assert_eq!(again, m);
        assert!(matches!(Model::parse("dim 2\nstep 1 0\n"), Err(Error::Parse { .. })));
        assert!(Model::parse("dim 2\nstep 1 0 1\nstep 1 0 1\n").is_err());
        assert!(Model::parse("dim 2\nstep 1 0 -1\nstep 0 1 1\n").is_err());
    }
}
