//! Bundled model files and the structured model analysis.

use crate::error::{Error, Result};
use crate::exactalg::rational::fmt_rational;
use crate::exactalg::{FieldElem, RatFunc};
use crate::expansion::expected_exponent;
use crate::group::{self, DEFAULT_MAX_ORDER};
use crate::io::{format_coef, parse_numerator, twist_display};
use crate::model::Model;
use crate::saddle::{self, Twist};
use num_rational::BigRational;
use serde_json::{json, Map, Value};

/// A model file shipped with the crate, with its numerator file if the
/// model needs one.
#[derive(Clone, Copy, Debug)]
pub struct Bundled {
    pub name: &'static str,
    pub model: &'static str,
    pub numerator: Option<&'static str>,
    pub golden: &'static str,
}

macro_rules! bundled {
    ($name:literal) => {
        Bundled {
            name: $name,
            model: include_str!(concat!("../models/", $name, ".model")),
            numerator: None,
            golden: include_str!(concat!("../models/", $name, ".analysis.json")),
        }
    };
    ($name:literal, num) => {
        Bundled {
            name: $name,
            model: include_str!(concat!("../models/", $name, ".model")),
            numerator: Some(include_str!(concat!("../models/", $name, ".num"))),
            golden: include_str!(concat!("../models/", $name, ".analysis.json")),
        }
    };
}

/// The nineteen unweighted small-step models with finite group whose orbit
/// sum is nonzero: sixteen with a vertical symmetry, then tandem, double
/// tandem and Gouyou-Beauchamps.
pub const ORBIT_SUMMABLE: [Bundled; 19] = [
    bundled!("simple"),
    bundled!("vsym-uc"),
    bundled!("vsym-uch"),
    bundled!("vsym-ucd"),
    bundled!("vsym-ucdh"),
    bundled!("vsym-ad"),
    bundled!("vsym-adh"),
    bundled!("diagonal"),
    bundled!("vsym-ach"),
    bundled!("vsym-acd"),
    bundled!("vsym-acdh"),
    bundled!("vsym-aud"),
    bundled!("vsym-audh"),
    bundled!("vsym-auc"),
    bundled!("vsym-auch"),
    bundled!("king"),
    bundled!("tandem"),
    bundled!("double-tandem"),
    bundled!("gouyou-beauchamps"),
];

/// Models outside the small-step planar class, with user-supplied numerators.
pub const EXTRA: [Bundled; 2] = [bundled!("large-step", num), bundled!("three-dim", num)];

pub fn all() -> impl Iterator<Item = &'static Bundled> {
    ORBIT_SUMMABLE.iter().chain(EXTRA.iter())
}

pub fn find(name: &str) -> Option<&'static Bundled> {
    all().find(|b| b.name == name)
}

impl Bundled {
    pub fn load(&self) -> Result<Model> {
        Model::parse(self.model)
    }

    pub fn load_numerator(&self) -> Result<Option<RatFunc<BigRational>>> {
        match self.numerator {
            None => Ok(None),
            Some(text) => {
                let m = self.load()?;
                parse_numerator(text, m.vars()).map(Some)
            }
        }
    }
}

/// Convenience: parsed bundled model by name.
pub fn model(name: &str) -> Result<Model> {
    find(name)
        .ok_or_else(|| Error::InvalidModel(format!("no bundled model `{}`", name)))?
        .load()
}

/// Structural report on a model. Failures of individual stages are kept as
/// messages so one bad stage does not hide the others.
#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    pub name: String,
    pub dim: usize,
    pub drift: Vec<FieldElem>,
    pub nondegenerate: bool,
    pub period: Option<u64>,
    pub cos_theta: Option<FieldElem>,
    pub pi_over_theta: Option<BigRational>,
    pub group_order: std::result::Result<usize, String>,
    /// `(passed, coefficients checked)` of the orbit-sum certificate.
    pub certificate: std::result::Result<(bool, usize), String>,
    pub dominant: std::result::Result<Vec<FieldElem>, String>,
    pub gamma: Option<FieldElem>,
    pub twists: Vec<Twist>,
}

/// Runs every diagnostic stage. With a numerator the certificate uses it
/// from the origin; otherwise the orbit sum of `x y` is certified.
pub fn analyze(model: &Model, numerator: Option<&RatFunc<BigRational>>, depth: usize) -> Analysis {
    let diag = model.diagnostics();
    let group_order = group::group_closure(model, DEFAULT_MAX_ORDER)
        .map(|g| g.len())
        .map_err(|e| e.to_string());
    let certificate = match numerator {
        Some(n) => group::certify_with_numerator(model, n, &vec![0; model.dim()], depth),
        None => group::certify_orbit_summable(model, 0, 0, depth),
    }
    .map(|c| (c.passed, c.checked))
    .map_err(|e| e.to_string());
    let sys = saddle::saddle_system(model);
    let (dominant, gamma, twists) = match sys {
        Ok(s) => (Ok(s.dominant), Some(s.gamma), s.twists),
        Err(e) => (Err(e.to_string()), None, Vec::new()),
    };
    let pi_over_theta = diag
        .correlation
        .as_ref()
        .and_then(|c| c.pi_over_theta.clone())
        .or_else(|| expected_exponent(model).ok().flatten());
    Analysis {
        name: model.name().to_string(),
        dim: model.dim(),
        drift: diag.drift,
        nondegenerate: diag.nondegenerate,
        period: diag.period,
        cos_theta: diag.correlation.map(|c| c.argument),
        pi_over_theta,
        group_order,
        certificate,
        dominant,
        gamma,
        twists,
    }
}

fn either<T>(r: &std::result::Result<T, String>, ok: impl Fn(&T) -> Value) -> Value {
    match r {
        Ok(v) => ok(v),
        Err(e) => json!({ "error": e }),
    }
}

impl Analysis {
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), json!(self.name));
        m.insert("dim".into(), json!(self.dim));
        m.insert(
            "drift".into(),
            json!(self.drift.iter().map(format_coef).collect::<Vec<_>>()),
        );
        m.insert("nondegenerate".into(), json!(self.nondegenerate));
        m.insert("period".into(), json!(self.period));
        m.insert("cos_theta".into(), json!(self.cos_theta.as_ref().map(format_coef)));
        m.insert(
            "pi_over_theta".into(),
            json!(self.pi_over_theta.as_ref().map(fmt_rational)),
        );
        m.insert("group_order".into(), either(&self.group_order, |n| json!(n)));
        m.insert(
            "certificate".into(),
            either(&self.certificate, |(p, c)| json!({ "passed": p, "checked": c })),
        );
        m.insert(
            "dominant".into(),
            either(&self.dominant, |d| json!(d.iter().map(format_coef).collect::<Vec<_>>())),
        );
        m.insert("gamma".into(), json!(self.gamma.as_ref().map(format_coef)));
        m.insert(
            "twists".into(),
            json!(self.twists.iter().map(twist_display).collect::<Vec<_>>()),
        );
        Value::Object(m)
    }

    pub fn to_text(&self) -> String {
        let show = |v: &Value| match v {
            Value::String(s) => s.clone(),
            Value::Null => "-".into(),
            Value::Array(a) => a
                .iter()
                .map(|x| x.as_str().map_or_else(|| x.to_string(), String::from))
                .collect::<Vec<_>>()
                .join(" "),
            other => other.to_string(),
        };
        let j = self.to_json();
        let mut out = String::new();
        for key in [
            "name",
            "dim",
            "drift",
            "nondegenerate",
            "period",
            "cos_theta",
            "pi_over_theta",
            "group_order",
            "certificate",
            "dominant",
            "gamma",
            "twists",
        ] {
            out.push_str(&format!("{:<14} {}\n", key, show(&j[key])));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_file_parses() {
        for b in all() {
            let m = b.load().unwrap();
            assert_eq!(m.name(), b.name);
            assert_eq!(Model::parse(&m.to_text()).unwrap(), m);
            if b.numerator.is_some() {
                assert!(b.load_numerator().unwrap().is_some());
            }
        }
        assert_eq!(
            ORBIT_SUMMABLE
                .iter()
                .filter(|b| b.name.starts_with("vsym") || ["simple", "diagonal", "king"].contains(&b.name))
                .count(),
            16
        );
    }

    #[test]
    fn reflection_symmetry_of_the_sixteen() {
        for b in &ORBIT_SUMMABLE[..16] {
            let m = b.load().unwrap();
            let offs: Vec<Vec<i32>> = m.steps().iter().map(|s| s.offsets.clone()).collect();
            for o in &offs {
                assert!(offs.contains(&vec![-o[0], o[1]]), "{}", b.name);
            }
        }
    }
}
