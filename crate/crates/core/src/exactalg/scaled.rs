//! Field values carrying an explicit half-integer power of π.

use super::fieldelem::FieldElem;
use super::Field;
use std::fmt;

/// `value · π^(pi_half / 2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledCoefficient {
    pub value: FieldElem,
    pub pi_half: i32,
}

impl ScaledCoefficient {
    pub fn new(value: FieldElem, pi_half: i32) -> Self {
        ScaledCoefficient { value, pi_half }
    }

    pub fn mul(&self, other: &Self) -> Self {
        ScaledCoefficient {
            value: self.value.mul(&other.value),
            pi_half: self.pi_half + other.pi_half,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64() * std::f64::consts::PI.powf(self.pi_half as f64 / 2.0)
    }

    /// Serialization suffix used in term lines.
    pub fn pi_suffix(&self) -> String {
        if self.pi_half == 0 {
            String::new()
        } else {
            format!("*pi^({}/2)", self.pi_half)
        }
    }
}

impl fmt::Display for ScaledCoefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}){}", self.value, self.pi_suffix())
    }
}
