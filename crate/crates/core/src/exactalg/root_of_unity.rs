use num_integer::Integer;
use std::fmt;

/// `exp(2πi·num/den)` with `0 <= num < den` and `gcd(num, den) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootOfUnity {
    num: i64,
    den: i64,
}

impl RootOfUnity {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0, "root of unity needs a positive denominator");
        let n = num.rem_euclid(den);
        let g = n.gcd(&den).max(1);
        let (n, d) = if n == 0 { (0, 1) } else { (n / g, den / g) };
        RootOfUnity { num: n, den: d }
    }

    pub fn one() -> Self {
        RootOfUnity { num: 0, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    /// Multiplicative order.
    pub fn order(&self) -> i64 {
        self.den
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    pub fn mul(&self, other: &Self) -> Self {
        let l = self.den.lcm(&other.den);
        RootOfUnity::new(self.num * (l / self.den) + other.num * (l / other.den), l)
    }

    pub fn inv(&self) -> Self {
        RootOfUnity::new(-self.num, self.den)
    }

    pub fn pow(&self, e: i64) -> Self {
        let r = (self.num as i128 * e as i128).rem_euclid(self.den as i128) as i64;
        RootOfUnity::new(r, self.den)
    }

    /// Real value when the root is ±1.
    pub fn as_sign(&self) -> Option<i32> {
        match self.den {
            1 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn to_complex(&self) -> (f64, f64) {
        let a = 2.0 * std::f64::consts::PI * self.num as f64 / self.den as f64;
        (a.cos(), a.sin())
    }

    /// Parses `a/b` (or `0`).
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((a, b)) => {
                let den: i64 = b.trim().parse().ok()?;
                if den <= 0 {
                    return None;
                }
                Some(RootOfUnity::new(a.trim().parse().ok()?, den))
            }
            None => {
                let n: i64 = s.parse().ok()?;
                (n == 0).then(RootOfUnity::one)
            }
        }
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.num == 0 {
            write!(f, "0")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical() {
        assert_eq!(RootOfUnity::new(2, 4), RootOfUnity::new(1, 2));
        assert_eq!(RootOfUnity::new(-1, 3), RootOfUnity::new(2, 3));
        assert_eq!(RootOfUnity::new(3, 3), RootOfUnity::one());
        assert_eq!(RootOfUnity::new(1, 2).as_sign(), Some(-1));
        assert_eq!(RootOfUnity::parse("2/3"), Some(RootOfUnity::new(2, 3)));
    }

    proptest! {
        #[test]
        fn group_laws(a in -50i64..50, b in 1i64..30, c in -50i64..50, d in 1i64..30) {
            let x = RootOfUnity::new(a, b);
            let y = RootOfUnity::new(c, d);
            prop_assert!(x.pow(x.order()).is_one());
            prop_assert_eq!(x.mul(&y), y.mul(&x));
            prop_assert!(x.mul(&x.inv()).is_one());
            prop_assert_eq!(x.pow(3), x.mul(&x).mul(&x));
        }
    }
}
