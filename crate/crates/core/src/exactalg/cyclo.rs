//! Cyclotomic extensions over the radical field.
//!
//! An element of order `n` is a polynomial in `ζ = exp(2πi/n)` of degree
//! below `φ(n)`, reduced modulo the cyclotomic polynomial `Φ_n`.

use super::linalg;
use super::radical::Radical;
use super::root_of_unity::RootOfUnity;
use super::Field;
use num_integer::Integer;
use num_rational::BigRational;
use std::fmt;

#[derive(Clone, Debug)]
pub struct Cyclo {
    n: u32,
    coeffs: Vec<Radical>,
}

/// Integer coefficients of `Φ_n`, lowest degree first.
pub fn cyclotomic_poly(n: u32) -> Vec<i64> {
    // x^n - 1 divided by Φ_d for every proper divisor d
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            num = poly_div_exact(&num, &cyclotomic_poly(d));
        }
    }
    num
}

fn poly_div_exact(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = *b.last().unwrap();
    let mut q = vec![0i64; r.len() - db];
    for i in (0..q.len()).rev() {
        let c = r[i + db] / lead;
        q[i] = c;
        for (j, &bj) in b.iter().enumerate() {
            r[i + j] -= c * bj;
        }
    }
    debug_assert!(r.iter().all(|&x| x == 0));
    q
}

fn totient(n: u32) -> usize {
    (1..=n).filter(|k| k.gcd(&n) == 1).count()
}

impl Cyclo {
    /// Reduces modulo `Φ_n`; callers guarantee `n >= 3`.
    fn reduce(n: u32, mut c: Vec<Radical>) -> Cyclo {
        debug_assert!(n >= 3);
        let phi = totient(n);
        let m = cyclotomic_poly(n);
        let deg = m.len() - 1;
        while c.len() > deg {
            let top = c.pop().unwrap();
            if top.is_zero() {
                continue;
            }
            let base = c.len() - deg;
            for (j, &mj) in m.iter().enumerate().take(deg) {
                c[base + j] = c[base + j].sub(&top.mul(&Radical::int(mj)));
            }
        }
        c.resize(phi, Radical::zero());
        Cyclo { n, coeffs: c }
    }

    /// Builds `Σ c_j ζ_n^j` for arbitrary length `c`.
    pub fn from_powers(n: u32, c: Vec<Radical>) -> Cyclo {
        match n {
            1 => Cyclo::from_radical(c.into_iter().fold(Radical::zero(), |a, x| a.add(&x))),
            2 => {
                let mut acc = Radical::zero();
                for (i, x) in c.iter().enumerate() {
                    acc = if i % 2 == 0 { acc.add(x) } else { acc.sub(x) };
                }
                Cyclo {
                    n: 1,
                    coeffs: vec![acc],
                }
            }
            _ => {
                let mut full = vec![Radical::zero(); n as usize];
                for (i, x) in c.into_iter().enumerate() {
                    let k = i % n as usize;
                    full[k] = full[k].add(&x);
                }
                Cyclo::reduce(n, full)
            }
        }
    }

    pub fn from_root(r: &RootOfUnity) -> Cyclo {
        let mut c = vec![Radical::zero(); r.num() as usize + 1];
        c[r.num() as usize] = Radical::one();
        Cyclo::from_powers(r.den() as u32, c)
    }

    pub fn from_radical(r: Radical) -> Cyclo {
        Cyclo { n: 1, coeffs: vec![r] }
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    /// The radical value when the element lies in the real base field.
    pub fn as_radical(&self) -> Option<Radical> {
        if self.coeffs.iter().skip(1).all(|c| c.is_zero()) {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Re-expresses the element over `ζ_m` for a multiple `m` of the order.
    fn lift(&self, m: u32) -> Cyclo {
        if m == self.n {
            return self.clone();
        }
        let step = (m / self.n) as usize;
        let mut c = vec![Radical::zero(); (self.coeffs.len().max(1) - 1) * step + 1];
        for (i, x) in self.coeffs.iter().enumerate() {
            c[i * step] = x.clone();
        }
        Cyclo::from_powers(m, c)
    }

    fn common(&self, other: &Cyclo) -> (Cyclo, Cyclo, u32) {
        let l = self.n.lcm(&other.n);
        (self.lift(l), other.lift(l), l)
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (i, c) in self.coeffs.iter().enumerate() {
            let (a, b) = RootOfUnity::new(i as i64, self.n as i64).to_complex();
            let v = c.to_f64();
            re += v * a;
            im += v * b;
        }
        (re, im)
    }
}

impl PartialEq for Cyclo {
    fn eq(&self, other: &Self) -> bool {
        let (a, b, _) = self.common(other);
        a.coeffs == b.coeffs
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.as_radical() {
            return write!(f, "{}", r);
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({})*zeta({})^{}", c, self.n, i))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Field for Cyclo {
    fn zero() -> Self {
        Cyclo::from_radical(Radical::zero())
    }
    fn one() -> Self {
        Cyclo::from_radical(Radical::one())
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
    fn add(&self, other: &Self) -> Self {
        let (a, b, n) = self.common(other);
        let c = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.add(y)).collect();
        Cyclo { n, coeffs: c }
    }
    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }
    fn mul(&self, other: &Self) -> Self {
        let (a, b, n) = self.common(other);
        if n == 1 {
            return Cyclo::from_radical(a.coeffs[0].mul(&b.coeffs[0]));
        }
        let mut c = vec![Radical::zero(); a.coeffs.len() + b.coeffs.len()];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    c[i + j] = c[i + j].add(&x.mul(y));
                }
            }
        }
        Cyclo::reduce(n, c)
    }
    fn neg(&self) -> Self {
        Cyclo {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c.neg()).collect(),
        }
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if let Some(r) = self.as_radical() {
            return r.inv().map(Cyclo::from_radical);
        }
        let phi = self.coeffs.len();
        let mut mat = vec![vec![Radical::zero(); phi]; phi];
        for j in 0..phi {
            let mut e = vec![Radical::zero(); j + 1];
            e[j] = Radical::one();
            let col = self.mul(&Cyclo::from_powers(self.n, e)).lift(self.n);
            for i in 0..phi {
                mat[i][j] = col.coeffs[i].clone();
            }
        }
        let mut rhs = vec![Radical::zero(); phi];
        rhs[0] = Radical::one();
        let x = linalg::solve(&mat, &rhs)?;
        Some(Cyclo { n: self.n, coeffs: x })
    }
    fn from_rational(q: &BigRational) -> Self {
        Cyclo::from_radical(Radical::rational(q.clone()))
    }
    fn to_rational(&self) -> Option<BigRational> {
        self.as_radical().and_then(|r| r.as_rational())
    }
}
