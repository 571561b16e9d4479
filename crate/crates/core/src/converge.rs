//! Replicated error-versus-budget studies.
//!
//! Each cell `(method, n, replicate)` runs with the seed
//! `derive_seed(root, [method id, n, replicate])`, so a cell's result does not
//! depend on which other cells the study contains.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delta::delta_given_data;
use crate::error::{Error, Result};
use crate::io::{Cell, Table};
use crate::method::Method;
use crate::model::{Counted, Model, SobolTruth};
use crate::rng::derive_seed;
use crate::sample::{sample, Scheme};
use crate::shapley::{shapley_effects, ShapleyOptions};
use crate::space::InputSpace;
use crate::stats::median;
use crate::variance::{fast_indices, pick_freeze_design, sobol_estimate_with, BootstrapOptions, FastOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMetric {
    /// Indices and truth rounded to two decimals, absolute differences summed.
    SumAbsRounded,
    Rmse,
}

impl std::str::FromStr for ErrorMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum-abs-rounded" => Ok(ErrorMetric::SumAbsRounded),
            "rmse" => Ok(ErrorMetric::Rmse),
            _ => Err(Error::config(format!("unknown error metric `{s}` (sum-abs-rounded | rmse)"))),
        }
    }
}

impl ErrorMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            ErrorMetric::SumAbsRounded => "sum-abs-rounded",
            ErrorMetric::Rmse => "rmse",
        }
    }

    pub fn error(&self, est: &[f64], truth: &[f64]) -> f64 {
        match self {
            // Integer hundredths keep the rounding exact.
            ErrorMetric::SumAbsRounded => {
                let r = |v: f64| (v * 100.0).round() as i64;
                est.iter().zip(truth).map(|(&e, &t)| (r(e) - r(t)).abs()).sum::<i64>() as f64 / 100.0
            }
            ErrorMetric::Rmse => {
                let s: f64 = est.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum();
                (s / est.len() as f64).sqrt()
            }
        }
    }
}

/// Reference values an estimate is scored against.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub first_order: Option<Vec<f64>>,
    pub total: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub shapley: Option<Vec<f64>>,
}

impl From<&SobolTruth> for Reference {
    fn from(t: &SobolTruth) -> Self {
        Reference { first_order: Some(t.first_order.clone()), total: Some(t.total.clone()), ..Default::default() }
    }
}

impl Reference {
    /// CSV with an `input` column and any of `S`, `ST`, `delta`, `Sh`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); header.len()];
        for rec in rdr.records() {
            let rec = rec?;
            for (k, f) in rec.iter().enumerate() {
                let v = f.parse().map_err(|_| Error::config(format!("reference value `{f}` is not a number")))?;
                cols[k].push(v);
            }
        }
        let get = |name: &str| header.iter().position(|h| h == name).map(|k| cols[k].clone());
        let r = Reference { first_order: get("S"), total: get("ST"), delta: get("delta"), shapley: get("Sh") };
        if r.first_order.is_none() && r.total.is_none() && r.delta.is_none() && r.shapley.is_none() {
            return Err(Error::config("reference file needs at least one of the columns S, ST, delta, Sh"));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub methods: Vec<Method>,
    /// Native size of each method: base samples (sobol), points per search
    /// curve (fast), sample size (delta), permutations (shapley).
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub metric: ErrorMetric,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub method: Method,
    pub n: usize,
    pub replicate: usize,
    /// Which indices were scored: `first`, `total`, `delta` or `shapley`.
    pub index: String,
    pub error: f64,
    pub eval_count: u64,
}

pub fn rows_table(rows: &[ConvergenceRow], metric: ErrorMetric) -> Table {
    let mut t = Table::new(["method", "n", "replicate", "index", "metric", "error", "eval_count"]);
    for r in rows {
        t.push(vec![
            r.method.as_str().into(),
            r.n.into(),
            r.replicate.into(),
            r.index.as_str().into(),
            metric.as_str().into(),
            Cell::Num(r.error),
            r.eval_count.into(),
        ]);
    }
    t
}

/// Median error per `(method, index, n)`, in first-seen order.
pub fn median_errors(rows: &[ConvergenceRow]) -> Vec<(Method, String, usize, f64)> {
    let mut keys: Vec<(Method, String, usize)> = Vec::new();
    for r in rows {
        let k = (r.method, r.index.clone(), r.n);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(m, i, n)| {
            let e: Vec<f64> =
                rows.iter().filter(|r| r.method == m && r.index == i && r.n == n).map(|r| r.error).collect();
            (m, i, n, median(&e))
        })
        .collect()
}

impl ConvergenceStudy {
    fn validate(&self, reference: &Reference, p: usize) -> Result<()> {
        if self.methods.is_empty() || self.replicates == 0 {
            return Err(Error::config("a study needs at least one method and one replicate"));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("the n grid must be non-empty and strictly increasing"));
        }
        let check = |v: &Option<Vec<f64>>, what: &str, m: Method| match v {
            Some(v) if v.len() == p => Ok(()),
            Some(v) => Err(Error::config(format!("reference {what} has {} values for {p} inputs", v.len()))),
            None => Err(Error::config(format!("method {m} needs reference {what} values"))),
        };
        for &m in &self.methods {
            match m {
                Method::Sobol | Method::Fast => {
                    check(&reference.first_order, "S", m)?;
                    check(&reference.total, "ST", m)?;
                }
                Method::Delta => check(&reference.delta, "delta", m)?,
                Method::Shapley => check(&reference.shapley, "Sh", m)?,
                other => {
                    return Err(Error::config(format!(
                        "method {other} has no reference quantity to converge to; studies support sobol, fast, delta and shapley"
                    )))
                }
            }
        }
        Ok(())
    }

    fn cell(&self, model: &dyn Model, space: &InputSpace, reference: &Reference, m: Method, n: usize, r: usize) -> Result<Vec<ConvergenceRow>> {
        let seed = derive_seed(self.seed, &[m.id(), n as u64, r as u64]);
        let counted = Counted::new(model);
        let row = |index: &str, error: f64, evals: u64| ConvergenceRow {
            method: m,
            n,
            replicate: r,
            index: index.to_string(),
            error,
            eval_count: evals,
        };
        let sobol_rows = |s: &crate::variance::SobolResult, evals: u64| {
            vec![
                row("first", self.metric.error(&s.first_order, reference.first_order.as_deref().unwrap()), evals),
                row("total", self.metric.error(&s.total, reference.total.as_deref().unwrap()), evals),
            ]
        };
        Ok(match m {
            Method::Sobol => {
                let d = pick_freeze_design(space, n, seed)?;
                let y = counted.evaluate(&d.x)?;
                let s = sobol_estimate_with(&d, &y, BootstrapOptions { resamples: 0, seed })?;
                sobol_rows(&s, counted.eval_count())
            }
            Method::Fast => {
                let s = fast_indices(&counted, space, FastOptions { n_per_input: n, m: 4, seed })?;
                sobol_rows(&s, counted.eval_count())
            }
            Method::Delta => {
                let x = sample(space, n, seed, Scheme::Iid)?;
                let y = counted.evaluate(&x)?;
                let d = delta_given_data(&x, &y, None)?;
                vec![row("delta", self.metric.error(&d.values, reference.delta.as_deref().unwrap()), counted.eval_count())]
            }
            Method::Shapley => {
                let s = shapley_effects(&counted, space, ShapleyOptions { n_perm: n, seed, ..Default::default() })?;
                vec![row("shapley", self.metric.error(&s.values, reference.shapley.as_deref().unwrap()), counted.eval_count())]
            }
            _ => unreachable!("validated"),
        })
    }

    /// Run every cell; rows come back ordered by method, n, replicate.
    pub fn run(&self, model: &dyn Model, space: &InputSpace, reference: &Reference) -> Result<Vec<ConvergenceRow>> {
        self.validate(reference, space.dim())?;
        let mut cells = Vec::new();
        for &m in &self.methods {
            for &n in &self.n_grid {
                for r in 0..self.replicates {
                    cells.push((m, n, r));
                }
            }
        }
        let out: Vec<Vec<ConvergenceRow>> =
            cells.par_iter().map(|&(m, n, r)| self.cell(model, space, reference, m, n, r)).collect::<Result<_>>()?;
        Ok(out.into_iter().flatten().collect())
    }
}
