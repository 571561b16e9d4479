use std::collections::BTreeMap;
use std::f64::consts::PI;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{check_arity, evaluate_rows, Model};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::space::{InputSpace, MarginalDist};

pub const BUILTIN_NAMES: [&str; 5] = ["ishigami", "gfunction", "linear", "product", "constant"];

/// Analytic test functions with closed-form variance decompositions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Builtin {
    /// sin x1 + a sin^2 x2 + b x3^4 sin x1 on [-pi, pi]^3.
    Ishigami { a: f64, b: f64 },
    /// Sobol' g-function prod (|4 x_j - 2| + a_j) / (1 + a_j) on [0, 1]^p.
    GFunction { a: Vec<f64> },
    /// sum beta_j x_j
    Linear { beta: Vec<f64> },
    /// prod x_j
    Product { p: usize },
    Constant { value: f64, p: usize },
}

impl Builtin {
    pub fn ishigami() -> Self {
        Builtin::Ishigami { a: 7.0, b: 0.1 }
    }

    /// Look up `name` in the registry; `params` overrides the defaults.
    ///
    /// Recognised parameters: ishigami `a`, `b`; gfunction `a`; linear `beta`;
    /// product `p`; constant `value`, `p`.
    pub fn from_name(name: &str, params: &BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let scalar = |key: &str, default: f64| -> Result<f64> {
            match params.get(key) {
                None => Ok(default),
                Some(v) if v.len() == 1 => Ok(v[0]),
                Some(_) => Err(Error::config(format!("parameter `{key}` takes a single value"))),
            }
        };
        let count = |key: &str, default: usize| -> Result<usize> {
            let v = scalar(key, default as f64)?;
            if v < 1.0 || v.fract() != 0.0 {
                return Err(Error::config(format!("parameter `{key}` must be a positive integer")));
            }
            Ok(v as usize)
        };
        let allowed: &[&str] = match name {
            "ishigami" => &["a", "b"],
            "gfunction" => &["a"],
            "linear" => &["beta"],
            "product" => &["p"],
            "constant" => &["value", "p"],
            other => return Err(Error::Registry(other.to_string())),
        };
        if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::config(format!("model `{name}` has no parameter `{bad}`")));
        }
        let m = match name {
            "ishigami" => Builtin::Ishigami { a: scalar("a", 7.0)?, b: scalar("b", 0.1)? },
            "gfunction" => Builtin::GFunction {
                a: params.get("a").cloned().unwrap_or_else(|| vec![0.0, 1.0, 4.5, 9.0, 99.0, 99.0, 99.0, 99.0, 99.0, 99.0]),
            },
            "linear" => Builtin::Linear { beta: params.get("beta").cloned().unwrap_or_else(|| vec![1.0, 2.0]) },
            "product" => Builtin::Product { p: count("p", 2)? },
            "constant" => Builtin::Constant { value: scalar("value", 1.0)?, p: count("p", 2)? },
            _ => unreachable!(),
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        match self {
            Builtin::GFunction { a } if a.is_empty() || a.iter().any(|&v| v.is_nan() || v < 0.0) => {
                Err(Error::config("gfunction needs a non-empty vector of a_j >= 0"))
            }
            Builtin::Linear { beta } if beta.is_empty() => Err(Error::config("linear needs at least one coefficient")),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Ishigami { .. } => "ishigami",
            Builtin::GFunction { .. } => "gfunction",
            Builtin::Linear { .. } => "linear",
            Builtin::Product { .. } => "product",
            Builtin::Constant { .. } => "constant",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Builtin::Ishigami { .. } => 3,
            Builtin::GFunction { a } => a.len(),
            Builtin::Linear { beta } => beta.len(),
            Builtin::Product { p } | Builtin::Constant { p, .. } => *p,
        }
    }

    /// The input space the model is conventionally studied on.
    pub fn default_space(&self) -> InputSpace {
        let dims = match self {
            Builtin::Ishigami { .. } => vec![MarginalDist::Uniform { a: -PI, b: PI }; 3],
            _ => vec![MarginalDist::Uniform { a: 0.0, b: 1.0 }; self.arity()],
        };
        InputSpace::independent(dims).expect("builtin spaces are valid")
    }

    pub fn eval_point(&self, x: &[f64]) -> f64 {
        match self {
            Builtin::Ishigami { a, b } => {
                let s1 = x[0].sin();
                let s2 = x[1].sin();
                s1 + a * s2 * s2 + b * x[2].powi(4) * s1
            }
            Builtin::GFunction { a } => {
                a.iter().zip(x).map(|(&aj, &xj)| ((4.0 * xj - 2.0).abs() + aj) / (1.0 + aj)).product()
            }
            Builtin::Linear { beta } => beta.iter().zip(x).map(|(b, v)| b * v).sum(),
            Builtin::Product { .. } => x.iter().product(),
            Builtin::Constant { value, .. } => *value,
        }
    }
}

impl Model for Builtin {
    fn arity(&self) -> usize {
        Builtin::arity(self)
    }

    fn evaluate(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        check_arity(self, x)?;
        evaluate_rows(x, |row| self.eval_point(row))
    }
}

/// Exact first-order and total Sobol' indices of a builtin model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolTruth {
    pub first_order: Vec<f64>,
    pub total: Vec<f64>,
    pub variance: f64,
    /// Set when Var f = 0; all indices are then reported as 0.
    pub zero_variance: bool,
}

impl SobolTruth {
    fn from_partials(first_var: Vec<f64>, total_var: Vec<f64>, variance: f64) -> Self {
        if variance <= 0.0 {
            let p = first_var.len();
            return SobolTruth { first_order: vec![0.0; p], total: vec![0.0; p], variance: 0.0, zero_variance: true };
        }
        SobolTruth {
            first_order: first_var.iter().map(|v| v / variance).collect(),
            total: total_var.iter().map(|v| v / variance).collect(),
            variance,
            zero_variance: false,
        }
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["input", "S", "ST", "variance", "zero_variance"]);
        for i in 0..self.first_order.len() {
            t.push(vec![
                (i + 1).into(),
                self.first_order[i].into(),
                self.total[i].into(),
                self.variance.into(),
                (self.zero_variance as usize).into(),
            ]);
        }
        t
    }
}

/// Closed-form ANOVA of a builtin on an independent input space.
///
/// Ishigami and the g-function are only tabulated on their conventional
/// spaces; linear, product and constant models accept any independent
/// marginals.
pub fn builtin_truth(model: &Builtin, space: &InputSpace) -> Result<SobolTruth> {
    space.require_independent("analytic Sobol' indices")?;
    if space.dim() != model.arity() {
        return Err(Error::config(format!(
            "{} takes {} inputs, space has {}",
            model.name(),
            model.arity(),
            space.dim()
        )));
    }
    let canonical = |space: &InputSpace| {
        if space != &model.default_space() {
            Err(Error::config(format!(
                "analytic indices for {} are only available on its default input space",
                model.name()
            )))
        } else {
            Ok(())
        }
    };
    let truth = match model {
        Builtin::Ishigami { a, b } => {
            canonical(space)?;
            let pi4 = PI.powi(4);
            let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
            let v2 = a * a / 8.0;
            let v13 = b * b * PI.powi(8) * (1.0 / 18.0 - 1.0 / 50.0);
            let var = v1 + v2 + v13;
            SobolTruth::from_partials(vec![v1, v2, 0.0], vec![v1 + v13, v2, v13], var)
        }
        Builtin::GFunction { a } => {
            canonical(space)?;
            let vi: Vec<f64> = a.iter().map(|aj| 1.0 / (3.0 * (1.0 + aj).powi(2))).collect();
            let prod: f64 = vi.iter().map(|v| 1.0 + v).product();
            let var = prod - 1.0;
            let total = vi.iter().map(|v| v * prod / (1.0 + v)).collect();
            SobolTruth::from_partials(vi, total, var)
        }
        Builtin::Linear { beta } => {
            let vi: Vec<f64> = beta.iter().zip(space.marginals()).map(|(b, d)| b * b * d.variance()).collect();
            let var = vi.iter().sum();
            SobolTruth::from_partials(vi.clone(), vi, var)
        }
        Builtin::Product { .. } => {
            let m: Vec<f64> = space.marginals().iter().map(MarginalDist::mean).collect();
            let v: Vec<f64> = space.marginals().iter().map(MarginalDist::variance).collect();
            let second: Vec<f64> = m.iter().zip(&v).map(|(m, v)| v + m * m).collect();
            let p = m.len();
            let var = second.iter().product::<f64>() - m.iter().map(|x| x * x).product::<f64>();
            let others = |i: usize, f: &dyn Fn(usize) -> f64| (0..p).filter(|&j| j != i).map(f).product::<f64>();
            let first = (0..p).map(|i| v[i] * others(i, &|j| m[j] * m[j])).collect();
            let total = (0..p).map(|i| v[i] * others(i, &|j| second[j])).collect();
            SobolTruth::from_partials(first, total, var)
        }
        Builtin::Constant { p, .. } => SobolTruth::from_partials(vec![0.0; *p], vec![0.0; *p], 0.0),
    };
    Ok(truth)
}
