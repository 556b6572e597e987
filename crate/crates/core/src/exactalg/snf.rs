//! Smith normal form of small integer matrices.

/// `u · m · v = diag(d)` with `u`, `v` unimodular.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: Vec<Vec<i64>>,
    pub v: Vec<Vec<i64>>,
    /// Diagonal entries, nonnegative, each dividing the next.
    pub d: Vec<i64>,
}

fn identity(n: usize) -> Vec<Vec<i64>> {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn smith(m: &[Vec<i64>]) -> Smith {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<i64>> = m.to_vec();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let row_op = |a: &mut Vec<Vec<i64>>, u: &mut Vec<Vec<i64>>, dst: usize, src: usize, f: i64| {
        // row[dst] -= f * row[src]
        for j in 0..a[dst].len() {
            a[dst][j] -= f * a[src][j];
        }
        for j in 0..u[dst].len() {
            u[dst][j] -= f * u[src][j];
        }
    };
    let col_op = |a: &mut Vec<Vec<i64>>, v: &mut Vec<Vec<i64>>, dst: usize, src: usize, f: i64| {
        for row in a.iter_mut() {
            row[dst] -= f * row[src];
        }
        for row in v.iter_mut() {
            row[dst] -= f * row[src];
        }
    };
    let n = rows.min(cols);
    for t in 0..n {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if a[i][j] != 0 && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else { break };
            a.swap(t, pi);
            u.swap(t, pi);
            for row in a.iter_mut() {
                row.swap(t, pj);
            }
            for row in v.iter_mut() {
                row.swap(t, pj);
            }
            let mut clean = true;
            for i in t + 1..rows {
                let f = a[i][t].div_euclid(a[t][t]);
                if f != 0 {
                    row_op(&mut a, &mut u, i, t, f);
                }
                if a[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                let f = a[t][j].div_euclid(a[t][t]);
                if f != 0 {
                    col_op(&mut a, &mut v, j, t, f);
                }
                if a[t][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // pivot must divide the whole trailing block
            let p = a[t][t];
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
            match bad {
                Some(i) => row_op(&mut a, &mut u, t, i, -1),
                None => break,
            }
        }
        if a[t][t] < 0 {
            for j in 0..cols {
                a[t][j] = -a[t][j];
            }
            for j in 0..rows {
                u[t][j] = -u[t][j];
            }
        }
    }
    let d = (0..n).map(|i| a[i][i]).collect();
    Smith { u, v, d }
}

/// Inverse of a unimodular integer matrix, via the adjugate-free
/// Gauss-Jordan elimination over rationals.
pub fn unimodular_inverse(m: &[Vec<i64>]) -> Vec<Vec<i64>> {
    use crate::exactalg::linalg::inverse;
    use crate::exactalg::rational::qi;
    use num_traits::ToPrimitive;
    let q: Vec<Vec<_>> = m.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect();
    let inv = inverse(&q).expect("unimodular matrix is invertible");
    inv.iter()
        .map(|r| {
            r.iter()
                .map(|x| x.to_integer().to_i64().expect("integral inverse"))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
        a.iter()
            .map(|r| {
                (0..b[0].len())
                    .map(|j| r.iter().zip(b).map(|(x, row)| x * row[j]).sum())
                    .collect()
            })
            .collect()
    }

    fn check(m: &[Vec<i64>]) -> Vec<i64> {
        let s = smith(m);
        let prod = mul(&mul(&s.u, m), &s.v);
        for (i, row) in prod.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                let expect = if i == j && i < s.d.len() { s.d[i] } else { 0 };
                assert_eq!(x, expect, "{:?}", prod);
            }
        }
        for w in s.d.windows(2) {
            if w[0] != 0 {
                assert_eq!(w[1] % w[0], 0);
            }
        }
        s.d
    }

    #[test]
    fn simple_walk_lattice() {
        // differences of the SW steps against (1,0)
        let d = check(&[vec![-1, 1], vec![-2, 0], vec![-1, -1]]);
        assert_eq!(d, vec![1, 2]);
    }

    #[test]
    fn diagonal_lattice() {
        let d = check(&[vec![0, 2], vec![2, 0], vec![2, 2]]);
        assert_eq!(d, vec![2, 2]);
    }

    proptest! {
        #[test]
        fn invariant(v in proptest::collection::vec(-6i64..6, 6)) {
            let m: Vec<Vec<i64>> = v.chunks(2).map(|r| r.to_vec()).collect();
            check(&m);
        }
    }
}
