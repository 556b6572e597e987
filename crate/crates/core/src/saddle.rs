//! Dominant and associated saddle points of the step polynomial.

use crate::error::{Error, Result};
use crate::exactalg::ball::DEFAULT_PREC;
use crate::exactalg::rational::{abs, approximate_f64, q, round_dyadic, to_f64};
use crate::exactalg::{linalg, Ball, Cyclo, Field, FieldElem, LaurentPoly, Radical, RatFunc, RootOfUnity};
use crate::model::Model;
use num_rational::BigRational;
use std::fmt;

/// Associated saddle `(α_1 x_1, …, α_d x_d)` with `S(α·x) = ζ S(x)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Twist {
    pub alphas: Vec<RootOfUnity>,
    pub zeta: RootOfUnity,
}

impl Twist {
    pub fn trivial(d: usize) -> Self {
        Twist {
            alphas: vec![RootOfUnity::one(); d],
            zeta: RootOfUnity::one(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.zeta.is_one() && self.alphas.iter().all(|a| a.is_one())
    }

    /// `Π α_j^{e_j}`.
    pub fn character(&self, e: &[i64]) -> RootOfUnity {
        self.alphas
            .iter()
            .zip(e)
            .fold(RootOfUnity::one(), |acc, (a, &k)| acc.mul(&a.pow(k)))
    }
}

impl fmt::Display for Twist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.alphas.iter().map(|r| r.to_string()).collect();
        write!(f, "({};{})", a.join(","), self.zeta)
    }
}

/// Matrix `A` of the quadratic form `Q(s) = sᵀ A s` with
/// `log S(x₀ e^{i s}) = log γ − Q(s) + O(|s|³)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QForm {
    pub matrix: Vec<Vec<FieldElem>>,
}

impl QForm {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    pub fn det(&self) -> FieldElem {
        linalg::det(&self.matrix)
    }

    pub fn is_positive_definite(&self) -> bool {
        (1..=self.dim()).all(|k| {
            let minor: Vec<Vec<FieldElem>> = self.matrix[..k].iter().map(|r| r[..k].to_vec()).collect();
            linalg::det(&minor).signum() == Some(1)
        })
    }

    pub fn eval(&self, s: &[FieldElem]) -> FieldElem {
        let mut acc = FieldElem::zero();
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                acc = acc.add(&a.mul(&s[i]).mul(&s[j]));
            }
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Saddle {
    pub coords: Vec<FieldElem>,
    pub gamma: FieldElem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SaddleSystem {
    pub dominant: Vec<FieldElem>,
    pub gamma: FieldElem,
    pub twists: Vec<Twist>,
    pub qform: QForm,
}

pub fn saddle_system(model: &Model) -> Result<SaddleSystem> {
    let saddle = find_dominant(model)?;
    let qform = local_qform(model, &saddle.coords)?;
    Ok(SaddleSystem {
        dominant: saddle.coords,
        gamma: saddle.gamma,
        twists: associated_saddles(model)?,
        qform,
    })
}

fn monomial_value(x: &[FieldElem], s: &[i32]) -> Result<FieldElem> {
    let mut acc = FieldElem::one();
    for (xi, &k) in x.iter().zip(s) {
        if k != 0 {
            acc = acc.mul(&xi.powi(k as i64).ok_or(Error::PoleAtPoint)?);
        }
    }
    Ok(acc)
}

/// `x_j ∂_j S` at `x`, one entry per coordinate.
fn log_gradient(model: &Model, x: &[FieldElem]) -> Result<Vec<FieldElem>> {
    let mut g = vec![FieldElem::zero(); model.dim()];
    for s in model.steps() {
        let t = s.weight.mul(&monomial_value(x, &s.offsets)?);
        for (j, gj) in g.iter_mut().enumerate() {
            if s.offsets[j] != 0 {
                *gj = gj.add(&t.mul(&FieldElem::from_int(s.offsets[j] as i64)));
            }
        }
    }
    Ok(g)
}

/// Minimizer of `S` over the positive orthant.
pub fn find_dominant(model: &Model) -> Result<Saddle> {
    if !model.check_nondegenerate() {
        return Err(Error::DegenerateModel);
    }
    let d = model.dim();
    let coords = if model.has_zero_drift() {
        vec![FieldElem::one(); d]
    } else {
        let z = newton_f64(model)?;
        match recognize_exact(model, &z) {
            Some(c) => c,
            None => refine_ball(model, &z)?,
        }
    };
    let gamma = model.step_polynomial().eval(&coords)?;
    if gamma.signum() != Some(1) {
        return Err(Error::Inexact("saddle value not certifiably positive".into()));
    }
    Ok(Saddle { coords, gamma })
}

/// Newton iteration on the convex function `log S(e^z)`.
fn newton_f64(model: &Model) -> Result<Vec<f64>> {
    let d = model.dim();
    let w: Vec<f64> = model.steps().iter().map(|s| s.weight.to_f64()).collect();
    let offs: Vec<Vec<f64>> = model
        .steps()
        .iter()
        .map(|s| s.offsets.iter().map(|&k| k as f64).collect())
        .collect();
    let value = |z: &[f64]| -> f64 {
        w.iter()
            .zip(&offs)
            .map(|(wi, o)| wi * o.iter().zip(z).map(|(a, b)| a * b).sum::<f64>().exp())
            .sum::<f64>()
            .ln()
    };
    let mut z = vec![0.0; d];
    for _ in 0..200 {
        let terms: Vec<f64> = w
            .iter()
            .zip(&offs)
            .map(|(wi, o)| wi * o.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().exp())
            .collect();
        let total: f64 = terms.iter().sum();
        let p: Vec<f64> = terms.iter().map(|t| t / total).collect();
        let grad: Vec<f64> = (0..d)
            .map(|j| p.iter().zip(&offs).map(|(pi, o)| pi * o[j]).sum())
            .collect();
        let mut hess = vec![vec![0.0; d]; d];
        for (pi, o) in p.iter().zip(&offs) {
            for a in 0..d {
                for b in 0..d {
                    hess[a][b] += pi * o[a] * o[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..d {
                hess[a][b] -= grad[a] * grad[b];
            }
        }
        let step = solve_f64(hess, grad.iter().map(|g| -g).collect()).ok_or(Error::NotPositiveDefinite)?;
        let f0 = value(&z);
        let mut t = 1.0;
        let mut next: Vec<f64>;
        loop {
            next = z.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            if value(&next) <= f0 + 1e-15 || t < 1e-8 {
                break;
            }
            t *= 0.5;
        }
        let moved = step.iter().map(|s| (s * t).abs()).fold(0.0, f64::max);
        z = next;
        if moved < 1e-14 {
            break;
        }
    }
    Ok(z)
}

fn solve_f64(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Tries `x_j = r_j^{1/q_j}` with small rational `r_j`, then checks the
/// critical-point equations exactly.
fn recognize_exact(model: &Model, z: &[f64]) -> Option<Vec<FieldElem>> {
    let coords: Vec<FieldElem> = z
        .iter()
        .map(|&zj| {
            (1..=12u32).find_map(|qd| {
                let v = (zj * qd as f64).exp();
                let (a, b) = approximate_f64(v, 10_000)?;
                if ((a as f64 / b as f64) - v).abs() > 1e-9 * v.max(1.0) {
                    return None;
                }
                Radical::root(&q(a, b), 1, qd).map(FieldElem::Exact)
            })
        })
        .collect::<Option<_>>()?;
    let g = log_gradient(model, &coords).ok()?;
    g.iter().all(|x| x.is_zero()).then_some(coords)
}

/// Newton in rational arithmetic from the floating-point start, returning
/// balls whose radius is twice the last correction.
fn refine_ball(model: &Model, z: &[f64]) -> Result<Vec<FieldElem>> {
    let w = model
        .rational_weights()
        .ok_or_else(|| Error::Unsupported("high-precision saddle needs rational weights".into()))?;
    let prec = DEFAULT_PREC;
    let d = model.dim();
    let mut x: Vec<BigRational> = z
        .iter()
        .map(|zj| {
            BigRational::from_float(zj.exp()).ok_or_else(|| Error::PrecisionInsufficient("saddle overflow".into()))
        })
        .collect::<Result<_>>()?;
    let tol = q(1, 1) / BigRational::from_integer(num_bigint::BigInt::from(2).pow(prec));
    let mut last = q(1, 1);
    for _ in 0..100 {
        let mut g = vec![q(0, 1); d];
        let mut jac = vec![vec![q(0, 1); d]; d];
        for (s, wi) in model.steps().iter().zip(&w) {
            let mut t = wi.clone();
            for (xi, &k) in x.iter().zip(&s.offsets) {
                t *= Field::powi(xi, k as i64).ok_or(Error::PoleAtPoint)?;
            }
            for j in 0..d {
                let sj = q(s.offsets[j] as i64, 1);
                g[j] += &t * &sj;
                for k in 0..d {
                    jac[j][k] += &t * &sj * q(s.offsets[k] as i64, 1) / &x[k];
                }
            }
        }
        let rhs: Vec<BigRational> = g.iter().map(|v| -v).collect();
        let delta = linalg::solve(&jac, &rhs).ok_or(Error::NotPositiveDefinite)?;
        last = delta.iter().map(abs).max().unwrap_or_else(|| q(0, 1));
        for (xi, di) in x.iter_mut().zip(&delta) {
            *xi = round_dyadic(&(&*xi + di), prec + 32).0;
        }
        if last < tol {
            break;
        }
    }
    if last >= tol {
        return Err(Error::PrecisionInsufficient(format!(
            "saddle Newton stalled at step {}",
            to_f64(&last)
        )));
    }
    let rad = q(2, 1) * last.max(tol);
    Ok(x.into_iter()
        .map(|m| FieldElem::Approx(Ball::new(m, rad.clone(), prec)))
        .collect())
}

/// All characters of `Z^d/L`, trivial twist first.
pub fn associated_saddles(model: &Model) -> Result<Vec<Twist>> {
    let s0: Vec<i64> = model.steps()[0].offsets.iter().map(|&k| k as i64).collect();
    Ok(model
        .characters()?
        .into_iter()
        .map(|alphas| {
            let t = Twist {
                alphas,
                zeta: RootOfUnity::one(),
            };
            let zeta = t.character(&s0);
            Twist { zeta, ..t }
        })
        .collect())
}

/// Checks `S(α·x) = ζ·S(x)` as an identity of Laurent polynomials over
/// the cyclotomic field.
pub fn twist_identity_holds(model: &Model, twist: &Twist) -> bool {
    let Some(s) = model
        .step_polynomial()
        .terms()
        .map(|(e, c)| c.as_radical().map(|r| (e.clone(), Cyclo::from_radical(r.clone()))))
        .collect::<Option<Vec<_>>>()
    else {
        return false;
    };
    let s = LaurentPoly::from_terms(model.vars(), s);
    let twisted = s.map_terms(s.vars().clone(), |e, c| {
        let e64: Vec<i64> = e.iter().map(|&k| k as i64).collect();
        (e.clone(), c.mul(&Cyclo::from_root(&twist.character(&e64))))
    });
    twisted == s.scale(&Cyclo::from_root(&twist.zeta))
}

/// `A = ½ Σ_s p_s s sᵀ` with `p_s = ω_s x₀^s / γ`.
pub fn local_qform(model: &Model, saddle: &[FieldElem]) -> Result<QForm> {
    let d = model.dim();
    let gamma = model.step_polynomial().eval(saddle)?;
    let inv = gamma.inv().ok_or(Error::DivisionByZero)?;
    let half = FieldElem::rational(q(1, 2));
    let mut m = vec![vec![FieldElem::zero(); d]; d];
    for s in model.steps() {
        let p = s.weight.mul(&monomial_value(saddle, &s.offsets)?).mul(&inv).mul(&half);
        for a in 0..d {
            for b in 0..d {
                let k = s.offsets[a] as i64 * s.offsets[b] as i64;
                if k != 0 {
                    m[a][b] = m[a][b].add(&p.mul(&FieldElem::from_int(k)));
                }
            }
        }
    }
    let form = QForm { matrix: m };
    if !form.is_positive_definite() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(form)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Regularity {
    pub regular: bool,
    pub value: Option<FieldElem>,
}

/// Whether the denominator of `n` is nonzero at `point`, with the value.
pub fn numerator_regular_at(point: &[FieldElem], n: &RatFunc<FieldElem>) -> Regularity {
    let den = match n.den().eval(point) {
        Ok(v) => v,
        Err(_) => {
            return Regularity {
                regular: false,
                value: None,
            }
        }
    };
    if den.is_zero() || den.signum().is_none() {
        return Regularity {
            regular: false,
            value: None,
        };
    }
    let value = n.eval(point).ok();
    Regularity {
        regular: value.is_some(),
        value,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::poly::vars;
    use crate::exactalg::rational::qi;

    fn gb() -> Model {
        Model::unweighted("GB", &[&[-1, 1], &[1, -1], &[-1, 0], &[1, 0]]).unwrap()
    }
    fn sw() -> Model {
        Model::unweighted("SW", &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]).unwrap()
    }
    fn app_a() -> Model {
        Model::unweighted("A", &[&[1, 0], &[-1, 0], &[0, -1], &[-2, 1]]).unwrap()
    }
    fn app_b() -> Model {
        Model::unweighted("B", &[&[-1, -1, -1], &[-1, -1, 1], &[-1, 1, 0], &[1, 0, 0]]).unwrap()
    }
    fn rad(r: i64, n: i64, d: u32) -> FieldElem {
        FieldElem::Exact(Radical::root(&qi(r), n, d).unwrap())
    }

    #[test]
    fn dominant_points() {
        let g = find_dominant(&gb()).unwrap();
        assert_eq!(g.coords, vec![FieldElem::one(); 2]);
        assert_eq!(g.gamma, FieldElem::from_int(4));
        let a = find_dominant(&app_a()).unwrap();
        assert_eq!(a.coords, vec![rad(3, 1, 2), rad(3, 1, 2)]);
        assert_eq!(a.gamma, rad(3, 1, 2).mul(&FieldElem::from_int(2)));
        let b = find_dominant(&app_b()).unwrap();
        assert_eq!(b.coords, vec![rad(2, 3, 4), rad(2, 1, 2), FieldElem::one()]);
        assert_eq!(b.gamma, rad(2, 3, 4).mul(&FieldElem::from_int(2)));
    }

    #[test]
    fn irrational_saddle_falls_back_to_balls() {
        // x + 2/x + y + 1/y has x₀ = sqrt(2), still exact
        let m = crate::model::weighted(
            "w",
            2,
            &[(&[1, 0], qi(1)), (&[-1, 0], qi(2)), (&[0, 1], qi(1)), (&[0, -1], qi(1))],
        )
        .unwrap();
        assert_eq!(find_dominant(&m).unwrap().coords[0], rad(2, 1, 2));
        // 3-term model whose saddle is a root of a cubic
        let m = crate::model::weighted("c", 1, &[(&[2], qi(1)), (&[1], qi(1)), (&[-1], qi(1))]).unwrap();
        let s = find_dominant(&m).unwrap();
        assert!(!s.coords[0].is_exact());
        let x = s.coords[0].to_f64();
        assert!((2.0 * x * x * x + x * x - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rejected() {
        let m = Model::unweighted("h", &[&[1, 0], &[0, 1]]).unwrap();
        assert_eq!(find_dominant(&m).unwrap_err(), Error::DegenerateModel);
    }

    #[test]
    fn twists() {
        let t = associated_saddles(&gb()).unwrap();
        assert_eq!(t.len(), 2);
        assert!(t[0].is_trivial());
        assert_eq!(t[1].alphas, vec![RootOfUnity::new(1, 2), RootOfUnity::one()]);
        assert_eq!(t[1].zeta, RootOfUnity::new(1, 2));
        let s = associated_saddles(&sw()).unwrap();
        assert_eq!(s[1].alphas, vec![RootOfUnity::new(1, 2); 2]);
        for m in [gb(), sw(), app_a(), app_b()] {
            for tw in associated_saddles(&m).unwrap() {
                assert!(twist_identity_holds(&m, &tw));
            }
        }
        assert_eq!(associated_saddles(&app_b()).unwrap().len(), 8);
        let bad = Twist {
            alphas: vec![RootOfUnity::new(1, 2), RootOfUnity::new(1, 2)],
            zeta: RootOfUnity::new(1, 2),
        };
        assert!(!twist_identity_holds(&gb(), &bad));
    }

    #[test]
    fn quadratic_forms() {
        let one = vec![FieldElem::one(); 2];
        let qs = local_qform(&sw(), &one).unwrap();
        assert_eq!(qs.matrix[0][0], FieldElem::rational(q(1, 4)));
        assert!(qs.matrix[0][1].is_zero());
        let qg = local_qform(&gb(), &one).unwrap();
        assert_eq!(qg.matrix[0][0], FieldElem::rational(q(1, 2)));
        assert_eq!(qg.matrix[0][1], FieldElem::rational(q(-1, 4)));
        assert_eq!(qg.matrix[1][1], FieldElem::rational(q(1, 4)));
        assert_eq!(qg.det(), FieldElem::rational(q(1, 16)));
    }

    #[test]
    fn regularity() {
        let v = vars(&["x", "y"]);
        let x = LaurentPoly::<FieldElem>::var_in(v.clone(), 0);
        let one = LaurentPoly::constant_in(v.clone(), FieldElem::one());
        let pole = RatFunc::new(one.clone(), x.sub(&one)).unwrap();
        let pt = vec![FieldElem::one(); 2];
        assert!(!numerator_regular_at(&pt, &pole).regular);
        let fine = RatFunc::from_poly(x.sub(&one));
        let r = numerator_regular_at(&pt, &fine);
        assert!(r.regular);
        assert!(r.value.unwrap().is_zero());
    }
}
