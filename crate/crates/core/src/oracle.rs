//! Brute-force weighted path counting and convergence diagnostics.

use crate::error::{Error, Result};
use crate::exactalg::rational::{q, to_f64};
use crate::exactalg::{Ball, Field, FieldElem};
use crate::expansion::{n_power, AsymptoticExpansion};
use crate::model::Model;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

/// Dense box `[0, hi_1] × … × [0, hi_d]` with row-major indexing.
#[derive(Clone, Debug, PartialEq)]
struct Grid {
    hi: Vec<i64>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    fn new(hi: Vec<i64>) -> Self {
        let mut strides = vec![1usize; hi.len()];
        for j in (0..hi.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * (hi[j + 1] as usize + 1);
        }
        let len = hi.iter().map(|&h| h as usize + 1).product();
        Grid { hi, strides, len }
    }

    fn index(&self, p: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for ((&x, &h), &s) in p.iter().zip(&self.hi).zip(&self.strides) {
            if x < 0 || x > h {
                return None;
            }
            idx += x as usize * s;
        }
        Some(idx)
    }

    fn point(&self, mut idx: usize) -> Vec<i64> {
        self.strides
            .iter()
            .map(|&s| {
                let x = idx / s;
                idx %= s;
                x as i64
            })
            .collect()
    }
}

/// Weighted counts `q(A, B; n)` from a fixed start `A`, for all `B` in a box.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable<C = BigRational> {
    start: Vec<i64>,
    n_max: usize,
    grid: Grid,
    layers: Vec<Vec<C>>,
}

impl<C: Field> CountTable<C> {
    pub fn start(&self) -> &[i64] {
        &self.start
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Count at `b` after `n` steps; zero outside the box and the orthant.
    pub fn get(&self, b: &[i64], n: usize) -> C {
        match (self.layers.get(n), self.grid.index(b)) {
            (Some(layer), Some(i)) => layer[i].clone(),
            _ => C::zero(),
        }
    }

    /// Overwrites one cell; used by falsification controls.
    pub fn set(&mut self, b: &[i64], n: usize, value: C) {
        if let Some(i) = self.grid.index(b) {
            self.layers[n][i] = value;
        }
    }

    /// Side of the box in each coordinate.
    pub fn bounds(&self) -> &[i64] {
        &self.grid.hi
    }
}

fn reach(model: &Model) -> (Vec<i64>, Vec<i64>) {
    let (up, down) = model.reach();
    (
        up.into_iter().map(i64::from).collect(),
        down.into_iter().map(i64::from).collect(),
    )
}

/// Integer weights `ω_s · L` and the common denominator `L`.
fn scaled_weights(model: &Model) -> Result<(Vec<BigInt>, BigInt)> {
    let w = model
        .rational_weights()
        .ok_or_else(|| Error::Unsupported("integer path counting needs rational weights".into()))?;
    let l = w.iter().fold(BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    let ints = w
        .iter()
        .map(|x| (x * BigRational::from_integer(l.clone())).to_integer())
        .collect();
    Ok((ints, l))
}

/// Layer-by-layer DP over a box, keeping cells that are reachable from the
/// start and (when targets are given) can still reach a target in time.
struct Dp<'a> {
    offsets: Vec<Vec<i64>>,
    grid: Grid,
    start: &'a [i64],
    up: Vec<i64>,
    down: Vec<i64>,
    targets: Option<&'a [Vec<i64>]>,
    n_max: usize,
}

impl<'a> Dp<'a> {
    fn new(model: &Model, start: &'a [i64], n_max: usize, targets: Option<&'a [Vec<i64>]>) -> Self {
        let (up, down) = reach(model);
        let hi: Vec<i64> = (0..model.dim())
            .map(|j| {
                let forward = start[j] + n_max as i64 * up[j];
                match targets {
                    Some(ts) => {
                        let back = ts.iter().map(|b| b[j]).max().unwrap_or(0) + n_max as i64 * down[j];
                        forward.min(back)
                    }
                    None => forward,
                }
            })
            .collect();
        Dp {
            offsets: model
                .steps()
                .iter()
                .map(|s| s.offsets.iter().map(|&k| k as i64).collect())
                .collect(),
            grid: Grid::new(hi),
            start,
            up,
            down,
            targets,
            n_max,
        }
    }

    fn active(&self, p: &[i64], m: usize) -> bool {
        let m = m as i64;
        let from_start = p
            .iter()
            .zip(self.start)
            .enumerate()
            .all(|(j, (&x, &a))| x - a <= m * self.up[j] && a - x <= m * self.down[j]);
        if !from_start {
            return false;
        }
        match self.targets {
            None => true,
            Some(ts) => {
                let rest = self.n_max as i64 - m;
                ts.iter().any(|b| {
                    p.iter()
                        .zip(b)
                        .enumerate()
                        .all(|(j, (&x, &bj))| bj - x <= rest * self.up[j] && x - bj <= rest * self.down[j])
                })
            }
        }
    }

    fn initial<C: Clone>(&self, zero: C, one: C) -> Vec<C> {
        let mut layer = vec![zero; self.grid.len];
        if let Some(i) = self.grid.index(self.start) {
            layer[i] = one;
        }
        layer
    }

    fn step<C: Clone + Send + Sync>(
        &self,
        prev: &[C],
        m: usize,
        zero: &C,
        acc: impl Fn(&mut C, usize, &C) + Sync,
    ) -> Vec<C> {
        (0..self.grid.len)
            .into_par_iter()
            .map(|idx| {
                let p = self.grid.point(idx);
                let mut total = zero.clone();
                if !self.active(&p, m) {
                    return total;
                }
                let mut src = p.clone();
                for (k, o) in self.offsets.iter().enumerate() {
                    for j in 0..p.len() {
                        src[j] = p[j] - o[j];
                    }
                    if let Some(i) = self.grid.index(&src) {
                        acc(&mut total, k, &prev[i]);
                    }
                }
                total
            })
            .collect()
    }
}

/// Exact table of weighted counts from `start` for `n ≤ n_max`.
pub fn count_paths(model: &Model, start: &[i64], n_max: usize) -> Result<CountTable> {
    check_start(model, start)?;
    let (w, l) = scaled_weights(model)?;
    let dp = Dp::new(model, start, n_max, None);
    let zero = BigInt::from(0);
    let mut layer = dp.initial(zero.clone(), BigInt::from(1));
    let mut layers = vec![to_rational_layer(&layer, &BigInt::from(1))];
    let mut scale = BigInt::from(1);
    for m in 1..=n_max {
        layer = dp.step(&layer, m, &zero, |t, k, x| {
            if !num_traits::Zero::is_zero(x) {
                *t += &w[k] * x
            }
        });
        scale *= &l;
        layers.push(to_rational_layer(&layer, &scale));
    }
    Ok(CountTable {
        start: start.to_vec(),
        n_max,
        grid: dp.grid,
        layers,
    })
}

fn to_rational_layer(layer: &[BigInt], scale: &BigInt) -> Vec<BigRational> {
    layer
        .iter()
        .map(|x| BigRational::new(x.clone(), scale.clone()))
        .collect()
}

/// Same as [`count_paths`] over any coefficient field, for models whose
/// weights are irrational.
pub fn count_paths_field(model: &Model, start: &[i64], n_max: usize) -> Result<CountTable<FieldElem>> {
    check_start(model, start)?;
    let w: Vec<FieldElem> = model.steps().iter().map(|s| s.weight.clone()).collect();
    let dp = Dp::new(model, start, n_max, None);
    let zero = FieldElem::zero();
    let mut layer = dp.initial(zero.clone(), FieldElem::one());
    let mut layers = vec![layer.clone()];
    for m in 1..=n_max {
        layer = dp.step(&layer, m, &zero, |t, k, x| {
            if !x.is_zero() {
                *t = t.add(&w[k].mul(x))
            }
        });
        layers.push(layer.clone());
    }
    Ok(CountTable {
        start: start.to_vec(),
        n_max,
        grid: dp.grid,
        layers,
    })
}

fn check_start(model: &Model, start: &[i64]) -> Result<()> {
    if start.len() != model.dim() || start.iter().any(|&x| x < 0) {
        return Err(Error::InvalidModel(format!("start {:?} is not in the orthant", start)));
    }
    Ok(())
}

/// `q(start, b; n)` for each target `b` and `0 ≤ n ≤ n_max`, without
/// storing intermediate layers. Indexed `[target][n]`.
pub fn endpoint_series(
    model: &Model,
    start: &[i64],
    targets: &[Vec<i64>],
    n_max: usize,
) -> Result<Vec<Vec<BigRational>>> {
    check_start(model, start)?;
    let (w, l) = scaled_weights(model)?;
    let dp = Dp::new(model, start, n_max, Some(targets));
    let zero = BigInt::from(0);
    let mut layer = dp.initial(zero.clone(), BigInt::from(1));
    let mut out: Vec<Vec<BigRational>> = vec![Vec::with_capacity(n_max + 1); targets.len()];
    let mut scale = BigInt::from(1);
    let record = |layer: &[BigInt], scale: &BigInt, out: &mut Vec<Vec<BigRational>>| {
        for (t, b) in targets.iter().enumerate() {
            let v = dp.grid.index(b).map_or(BigInt::from(0), |i| layer[i].clone());
            out[t].push(BigRational::new(v, scale.clone()));
        }
    };
    record(&layer, &scale, &mut out);
    for m in 1..=n_max {
        layer = dp.step(&layer, m, &zero, |t, k, x| {
            if !num_traits::Zero::is_zero(x) {
                *t += &w[k] * x
            }
        });
        scale *= &l;
        record(&layer, &scale, &mut out);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecurrenceReport {
    pub passed: bool,
    pub checked: usize,
    /// `(start, end, n)` of the first failing triple.
    pub witness: Option<(Vec<i64>, Vec<i64>, usize)>,
}

/// Samples triples and checks the start-side recurrence
/// `q(A,B;n) = Σ ω_s q(A+s,B;n−1)` and the end-side recurrence
/// `q(A,B;n) = Σ ω_s q(A,B−s;n−1)` against the given tables.
pub fn dual_recurrence_check(model: &Model, tables: &[CountTable], samples: usize, seed: u64) -> RecurrenceReport {
    let w = model.rational_weights().expect("rational weights");
    let find = |a: &[i64]| tables.iter().find(|t| t.start() == a);
    let mut rng = StdRng::seed_from_u64(seed);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < samples && attempts < samples * 50 {
        attempts += 1;
        let t = &tables[rng.gen_range(0..tables.len())];
        let n = rng.gen_range(1..=t.n_max());
        let b: Vec<i64> = t
            .bounds()
            .iter()
            .map(|&h| rng.gen_range(0..=h.min(n as i64 + 2)))
            .collect();
        let a = t.start().to_vec();
        let lhs = t.get(&b, n);
        let mut end_side = q(0, 1);
        let mut start_side = Some(q(0, 1));
        for (s, ws) in model.steps().iter().zip(&w) {
            let bs: Vec<i64> = b.iter().zip(&s.offsets).map(|(x, &o)| x - o as i64).collect();
            end_side += ws * t.get(&bs, n - 1);
            let as_: Vec<i64> = a.iter().zip(&s.offsets).map(|(x, &o)| x + o as i64).collect();
            if as_.iter().any(|&x| x < 0) {
                continue;
            }
            start_side = match (start_side, find(&as_)) {
                (Some(acc), Some(u)) if u.n_max() >= n - 1 => Some(acc + ws * u.get(&b, n - 1)),
                _ => None,
            };
        }
        if end_side != lhs || start_side.as_ref().is_some_and(|s| *s != lhs) {
            return RecurrenceReport {
                passed: false,
                checked,
                witness: Some((a, b, n)),
            };
        }
        checked += 1;
    }
    RecurrenceReport {
        passed: true,
        checked,
        witness: None,
    }
}

/// One row of a convergence report.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub exact: BigRational,
    pub predicted: f64,
    pub rel_error: f64,
    pub normalized_remainder: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log|normalized remainder|` against `log n`.
    pub slope: f64,
    /// `c + M`, the power of `n` folded into the normalization.
    pub normalization_exponent: f64,
}

impl ConvergenceReport {
    /// Relative errors over the top half of the rows never increase.
    pub fn monotone_top_half(&self) -> bool {
        let half = &self.rows[self.rows.len() / 2..];
        half.windows(2).all(|w| w[1].rel_error <= w[0].rel_error)
    }

    pub fn final_rel_error(&self) -> f64 {
        self.rows.last().map_or(f64::INFINITY, |r| r.rel_error)
    }

    /// Slope of `log(|error| / γⁿ)`, i.e. the total polynomial decay.
    pub fn decay_slope(&self) -> f64 {
        self.slope - self.normalization_exponent
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,exact,predicted,rel_error,normalized_remainder\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e},{:e}\n",
                r.n,
                to_f64(&r.exact),
                r.predicted,
                r.rel_error,
                r.normalized_remainder
            ));
        }
        out
    }
}

/// Builds a report from exact counts and ball predictions.
///
/// Each row is `(n, exact, predicted, γⁿ/n^{c+M})`. The error is formed in
/// ball arithmetic; a ball that cannot separate it from zero means the
/// working precision was too low.
pub fn convergence_report(
    rows: Vec<(usize, BigRational, Ball, Ball)>,
    normalization_exponent: f64,
) -> Result<ConvergenceReport> {
    let mut out = Vec::with_capacity(rows.len());
    for (n, exact, predicted, scale) in rows {
        if Field::is_zero(&exact) {
            return Err(Error::PrecisionInsufficient(format!(
                "exact count vanishes at n = {}",
                n
            )));
        }
        let ex = Ball::exact(exact.clone(), predicted.prec());
        let err = ex.sub(&predicted).abs();
        if err.rel_radius() > 0.5 {
            return Err(Error::PrecisionInsufficient(format!(
                "remainder at n = {} is below the working precision",
                n
            )));
        }
        let rel = err.div(&ex.abs()).ok_or(Error::DivisionByZero)?;
        let norm = err.div(&scale).ok_or(Error::DivisionByZero)?;
        out.push(ConvergenceRow {
            n,
            exact,
            predicted: predicted.to_f64(),
            rel_error: rel.to_f64(),
            normalized_remainder: norm.to_f64(),
        });
    }
    let pts: Vec<(f64, f64)> = out
        .iter()
        .filter(|r| r.normalized_remainder > 0.0)
        .map(|r| ((r.n as f64).ln(), r.normalized_remainder.ln()))
        .collect();
    Ok(ConvergenceReport {
        slope: least_squares_slope(&pts),
        rows: out,
        normalization_exponent,
    })
}

/// Lengths in `lo..=hi` whose twist sum at `end` is nonzero.
pub fn period_compatible(e: &AsymptoticExpansion, end: &[i64], lo: usize, hi: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for n in lo..=hi {
        if !Field::is_zero(&e.twist_sum(n, end)?) {
            out.push(n);
        }
    }
    Ok(out)
}

/// Compares the order-`m` truncation of `e` with exact counts `series[n]`
/// (from [`endpoint_series`]) at the lengths `ns`.
pub fn convergence_diagnostics(
    e: &AsymptoticExpansion,
    series: &[BigRational],
    end: &[i64],
    m: usize,
    ns: &[usize],
    prec: u32,
) -> Result<ConvergenceReport> {
    let shift = e.c.clone() + q(m as i64, 1);
    let rows = ns
        .par_iter()
        .map(|&n| {
            let exact = series
                .get(n)
                .cloned()
                .ok_or_else(|| Error::Unsupported(format!("no exact count for n = {}", n)))?;
            let predicted = e.predict(n, end, m, prec)?;
            let scale = e
                .gamma
                .pow(n as u32)
                .to_ball(prec)
                .mul(&n_power(n, &(-shift.clone()), prec)?);
            Ok((n, exact, predicted, scale))
        })
        .collect::<Result<Vec<_>>>()?;
    convergence_report(rows, to_f64(&shift))
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rational::qi;

    fn sw() -> Model {
        Model::unweighted("SW", &[&[1, 0], &[0, 1], &[-1, 0], &[0, -1]]).unwrap()
    }
    fn tandem() -> Model {
        Model::unweighted("Tandem", &[&[-1, 0], &[0, 1], &[1, -1]]).unwrap()
    }

    #[test]
    fn small_counts() {
        let t = count_paths(&sw(), &[0, 0], 9).unwrap();
        assert_eq!(t.get(&[0, 0], 0), qi(1));
        assert_eq!(t.get(&[1, 0], 0), qi(0));
        assert_eq!(t.get(&[0, 0], 2), qi(2));
        for n in (1..=9).step_by(2) {
            assert_eq!(t.get(&[0, 0], n), qi(0));
        }
        // returning quadrant walks: 1, 2, 10, 70
        assert_eq!(t.get(&[0, 0], 4), qi(10));
        assert_eq!(t.get(&[0, 0], 6), qi(70));
        let tt = count_paths(&tandem(), &[0, 0], 6).unwrap();
        assert_eq!(tt.get(&[0, 0], 3), qi(1));
        assert_eq!(tt.get(&[0, 0], 6), qi(5));
    }

    #[test]
    fn weighted_and_field_agree() {
        let m = crate::model::weighted(
            "w",
            2,
            &[
                (&[1, 0], q(1, 2)),
                (&[-1, 0], qi(3)),
                (&[0, 1], q(2, 3)),
                (&[0, -1], qi(1)),
            ],
        )
        .unwrap();
        let a = count_paths(&m, &[1, 0], 7).unwrap();
        let b = count_paths_field(&m, &[1, 0], 7).unwrap();
        for n in 0..=7 {
            for k in 0..6 {
                for l in 0..6 {
                    assert_eq!(FieldElem::rational(a.get(&[k, l], n)), b.get(&[k, l], n));
                }
            }
        }
    }

    #[test]
    fn cramer_counts_scale_by_endpoint_displacement() {
        // east doubled: the multipliers are (1/√2, 1), irrational
        let m = crate::model::weighted(
            "drift",
            2,
            &[(&[1, 0], qi(2)), (&[-1, 0], qi(1)), (&[0, 1], qi(1)), (&[0, -1], qi(1))],
        )
        .unwrap();
        let (hat, alpha) = m.cramer_transform().unwrap();
        assert!(hat.has_zero_drift());
        let a = [1i64, 0];
        let plain = count_paths(&m, &a, 8).unwrap();
        let tilted = count_paths_field(&hat, &a, 8).unwrap();
        for n in 0..=8 {
            for k in 0..5i64 {
                for l in 0..5i64 {
                    let f = alpha[0].powi(k - a[0]).unwrap().mul(&alpha[1].powi(l - a[1]).unwrap());
                    assert_eq!(tilted.get(&[k, l], n), f.mul(&FieldElem::rational(plain.get(&[k, l], n))));
                }
            }
        }
    }

    #[test]
    fn clipped_series_match_full_table() {
        let full = count_paths(&tandem(), &[1, 0], 20).unwrap();
        let targets = vec![vec![0, 0], vec![2, 1]];
        let s = endpoint_series(&tandem(), &[1, 0], &targets, 20).unwrap();
        for (t, b) in targets.iter().enumerate() {
            for n in 0..=20 {
                assert_eq!(s[t][n], full.get(b, n));
            }
        }
    }

    #[test]
    fn recurrences() {
        let m = sw();
        let tables: Vec<CountTable> = [[0, 0], [1, 0], [0, 1], [1, 1], [2, 0], [0, 2]]
            .iter()
            .map(|a| count_paths(&m, a, 8).unwrap())
            .collect();
        assert!(dual_recurrence_check(&m, &tables, 100, 7).passed);
        let mut bad = tables.clone();
        bad[0].set(&[1, 1], 4, qi(12345));
        let mut found = false;
        for seed in 0..40 {
            if !dual_recurrence_check(&m, &bad, 400, seed).passed {
                found = true;
                break;
            }
        }
        assert!(found);
    }

    #[test]
    fn reversal_symmetry() {
        let m = tandem();
        let r = m.reverse();
        let a = [1i64, 2];
        let b = [2i64, 0];
        let fwd = count_paths(&m, &a, 12).unwrap();
        let back = count_paths(&r, &b, 12).unwrap();
        for n in 0..=12 {
            assert_eq!(fwd.get(&b, n), back.get(&a, n));
        }
    }

    #[test]
    fn slope_fit() {
        let pts: Vec<(f64, f64)> = (1..10)
            .map(|i| ((i as f64).ln(), -2.0 * (i as f64).ln() + 1.0))
            .collect();
        assert!((least_squares_slope(&pts) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn sw_truncation_converges() {
        let e = crate::expansion::expand(&sw(), 3).unwrap();
        let s = endpoint_series(&sw(), &[0, 0], &[vec![0, 0]], 100).unwrap();
        let ns = period_compatible(&e, &[0, 0], 20, 100).unwrap();
        assert!(ns.iter().all(|n| n % 2 == 0));
        let r = convergence_diagnostics(&e, &s[0], &[0, 0], 3, &ns, 256).unwrap();
        assert!(r.final_rel_error() < 1e-2);
        assert!(r.monotone_top_half());
        let first = convergence_diagnostics(&e, &s[0], &[0, 0], 1, &ns, 256).unwrap();
        assert!(first.final_rel_error() < first.rows[0].rel_error);
    }

    #[test]
    fn gb_remainder_slope() {
        let gb = Model::unweighted("GB", &[&[-1, 1], &[1, -1], &[-1, 0], &[1, 0]]).unwrap();
        let e = crate::expansion::expand(&gb, 3).unwrap();
        let s = endpoint_series(&gb, &[0, 0], &[vec![0, 0]], 240).unwrap();
        let ns: Vec<usize> = (24..=240).step_by(8).collect();
        let r = convergence_diagnostics(&e, &s[0], &[0, 0], 3, &ns, 256).unwrap();
        assert!((r.slope + 1.0).abs() < 0.3, "slope {}", r.slope);
    }

    #[test]
    fn unresolvable_remainder_is_reported() {
        let row = (4, qi(10), Ball::new(qi(10), q(1, 2), 64), Ball::exact(qi(1), 64));
        assert!(matches!(
            convergence_report(vec![row], 1.0),
            Err(Error::PrecisionInsufficient(_))
        ));
    }
}
