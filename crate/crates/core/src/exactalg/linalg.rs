//! Dense exact linear algebra over any [`Field`].

use super::Field;

pub type Matrix<C> = Vec<Vec<C>>;

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref<C: Field>(m: &mut Matrix<C>) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].inv().expect("nonzero pivot is invertible");
        for x in m[r].iter_mut() {
            if !x.is_zero() {
                *x = x.mul(&inv);
            }
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let (top, bottom) = if i < r {
                    let (a, b) = m.split_at_mut(r);
                    (&mut a[i], &b[0])
                } else {
                    let (a, b) = m.split_at_mut(i);
                    (&mut b[0], &a[r])
                };
                for (x, y) in top.iter_mut().zip(bottom.iter()) {
                    if !y.is_zero() {
                        *x = x.sub(&f.mul(y));
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<C: Field>(m: &Matrix<C>) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Some solution of `m x = rhs` (free variables set to zero), or `None`
/// if the system is inconsistent.
pub fn solve_any<C: Field>(m: &Matrix<C>, rhs: &[C]) -> Option<Vec<C>> {
    let cols = m.first().map_or(0, |r| r.len());
    let mut aug: Matrix<C> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(b.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![C::zero(); cols];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = aug[i][cols].clone();
    }
    Some(x)
}

/// Unique solution of a square nonsingular system.
pub fn solve<C: Field>(m: &Matrix<C>, rhs: &[C]) -> Option<Vec<C>> {
    let n = m.len();
    if n == 0 || m[0].len() != n {
        return None;
    }
    let mut a = m.clone();
    if rref(&mut a).len() != n {
        return None;
    }
    solve_any(m, rhs)
}

/// Basis of the right null space.
pub fn nullspace<C: Field>(m: &Matrix<C>, cols: usize) -> Vec<Vec<C>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![C::zero(); cols];
            v[f] = C::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = a[i][f].neg();
            }
            v
        })
        .collect()
}

pub fn det<C: Field>(m: &Matrix<C>) -> C {
    let n = m.len();
    let mut a = m.clone();
    let mut d = C::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return C::zero();
        };
        if p != c {
            a.swap(p, c);
            d = d.neg();
        }
        d = d.mul(&a[c][c]);
        let inv = a[c][c].inv().expect("nonzero pivot");
        for i in c + 1..n {
            if a[i][c].is_zero() {
                continue;
            }
            let f = a[i][c].mul(&inv);
            for j in c..n {
                let t = f.mul(&a[c][j]);
                a[i][j] = a[i][j].sub(&t);
            }
        }
    }
    d
}

pub fn inverse<C: Field>(m: &Matrix<C>) -> Option<Matrix<C>> {
    let n = m.len();
    let mut aug: Matrix<C> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { C::one() } else { C::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_vec<C: Field>(m: &Matrix<C>, v: &[C]) -> Vec<C> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(C::zero(), |acc, (a, b)| acc.add(&a.mul(b))))
        .collect()
}

pub fn mat_mul<C: Field>(a: &Matrix<C>, b: &Matrix<C>) -> Matrix<C> {
    let k = b.len();
    let cols = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..k).fold(C::zero(), |acc, t| acc.add(&row[t].mul(&b[t][j]))))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::rational::{q, qi};
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> Matrix<BigRational> {
        rows.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect()
    }

    #[test]
    fn solve_and_det() {
        let a = m(&[&[2, 1], &[1, 3]]);
        assert_eq!(det(&a), qi(5));
        let x = solve(&a, &[qi(1), qi(2)]).unwrap();
        assert_eq!(x, vec![q(1, 5), q(3, 5)]);
        let inv = inverse(&a).unwrap();
        assert_eq!(mat_mul(&a, &inv), m(&[&[1, 0], &[0, 1]]));
    }

    #[test]
    fn singular_systems() {
        let a = m(&[&[1, 2], &[2, 4]]);
        assert!(solve(&a, &[qi(1), qi(2)]).is_none());
        assert!(solve_any(&a, &[qi(1), qi(3)]).is_none());
        assert_eq!(solve_any(&a, &[qi(1), qi(2)]).unwrap(), vec![qi(1), qi(0)]);
        let ns = nullspace(&a, 2);
        assert_eq!(ns, vec![vec![qi(-2), qi(1)]]);
        assert_eq!(rank(&a), 1);
    }

    proptest! {
        #[test]
        fn solve_round_trip(v in proptest::collection::vec(-9i64..9, 9), b in proptest::collection::vec(-9i64..9, 3)) {
            let a: Matrix<BigRational> = v.chunks(3).map(|r| r.iter().map(|&x| qi(x)).collect()).collect();
            let rhs: Vec<BigRational> = b.iter().map(|&x| qi(x)).collect();
            if let Some(x) = solve_any(&a, &rhs) {
                prop_assert_eq!(mat_vec(&a, &x), rhs);
            }
            let ns = nullspace(&a, 3);
            prop_assert_eq!(ns.len() + rank(&a), 3);
            for n in ns {
                prop_assert!(mat_vec(&a, &n).iter().all(num_traits::Zero::is_zero));
            }
        }
    }
}
