use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::DsdDesign;
use crate::error::{Error, Result};
use crate::io::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Main,
    Quadratic,
    Interaction,
}

/// A model term over 0-based factor indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Main(usize),
    Quadratic(usize),
    Interaction(usize, usize),
}

impl Term {
    pub fn kind(&self) -> TermKind {
        match self {
            Term::Main(_) => TermKind::Main,
            Term::Quadratic(_) => TermKind::Quadratic,
            Term::Interaction(..) => TermKind::Interaction,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Term::Main(i) => format!("X{}", i + 1),
            Term::Quadratic(i) => format!("X{}^2", i + 1),
            Term::Interaction(i, j) => format!("X{}X{}", i + 1, j + 1),
        }
    }

    fn value(&self, row: &[f64]) -> f64 {
        match *self {
            Term::Main(i) => row[i],
            Term::Quadratic(i) => row[i] * row[i],
            Term::Interaction(i, j) => row[i] * row[j],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTerm {
    pub term: Term,
    pub estimate: f64,
    pub std_error: f64,
    pub t_ratio: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DsdFitResult {
    /// Selected terms sorted by |t| descending.
    pub terms: Vec<FitTerm>,
    pub intercept: f64,
    /// Residual degrees of freedom of the final joint fit.
    pub residual_df: usize,
    /// Error variance of the odd responses after the main-effect fit.
    pub odd_sigma2: f64,
    pub odd_df: usize,
    /// Residual variance of the even responses after forward selection.
    pub even_sigma2: f64,
    pub even_df: usize,
    /// Coded design the fit was computed on.
    #[serde(skip)]
    pub x: Vec<Vec<f64>>,
}

impl DsdFitResult {
    pub fn active(&self) -> Vec<Term> {
        let mut t: Vec<Term> = self.terms.iter().map(|t| t.term).collect();
        t.sort();
        t
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["Term", "Estimate", "Std Error", "t Ratio", "Prob>|t|"]);
        for f in &self.terms {
            t.push(vec![
                Cell::Text(f.term.name()),
                f.estimate.into(),
                f.std_error.into(),
                f.t_ratio.into(),
                f.p_value.into(),
            ]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DsdFitOptions {
    /// Two-sided level of the stage-1 main-effect tests.
    pub alpha: f64,
    /// Two-sided level of the stage-2 entry tests.
    pub alpha_even: f64,
}

impl Default for DsdFitOptions {
    fn default() -> Self {
        DsdFitOptions { alpha: 0.001, alpha_even: 0.01 }
    }
}

struct Ols {
    beta: DVector<f64>,
    rss: f64,
    /// Diagonal of (X'X)^-1.
    inv_diag: Vec<f64>,
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<Ols> {
    let xtx = x.transpose() * x;
    let chol = xtx.clone().cholesky()?;
    // Reject numerically singular systems that Cholesky lets through.
    let scale = xtx.diagonal().max().max(1.0);
    if chol.l().diagonal().iter().any(|d| d * d < 1e-10 * scale) {
        return None;
    }
    let beta = chol.solve(&(x.transpose() * y));
    let r = y - x * &beta;
    let inv = chol.inverse();
    Some(Ols { rss: r.dot(&r), inv_diag: inv.diagonal().iter().copied().collect(), beta })
}

fn t_quantile(alpha: f64, df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64).expect("df > 0").inverse_cdf(1.0 - alpha / 2.0)
}

fn p_value(t: f64, df: usize) -> f64 {
    if df == 0 || t.is_nan() {
        return f64::NAN;
    }
    // An exact fit leaves no residual spread.
    if t.is_infinite() {
        return 0.0;
    }
    2.0 * (1.0 - StudentsT::new(0.0, 1.0, df as f64).expect("df > 0").cdf(t.abs()))
}

/// Design matrix with an intercept column followed by `terms`, over `rows`.
fn model_matrix(rows: &[Vec<f64>], terms: &[Term], weights: Option<&[f64]>) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), terms.len() + 1, |r, c| {
        let w = weights.map_or(1.0, |w| w[r]);
        if c == 0 {
            w
        } else {
            w * terms[c - 1].value(&rows[r])
        }
    })
}

pub fn dsd_fit(design: &DsdDesign, y: &[f64]) -> Result<DsdFitResult> {
    dsd_fit_with(design, y, DsdFitOptions::default())
}

/// Two-stage fit: main effects from the fold-over differences, then
/// quadratics and interactions of the active mains from the fold-over sums.
///
/// Stage 1 starts from every main and drops the one with the smallest |t|
/// until all pass `|t| > t_{alpha/2, df_odd}`; the odd-space error pools the
/// fake and padding columns with the dropped mains. Stage 2
/// adds the heredity-respecting even term with the largest |t| while the even
/// residual variance still exceeds the odd error estimate and that |t| passes
/// a `t_{alpha_even/2}` test against the pooled odd and even error. The selected terms are then refitted
/// jointly on all runs for the reported table.
pub fn dsd_fit_with(design: &DsdDesign, y: &[f64], opts: DsdFitOptions) -> Result<DsdFitResult> {
    let p = design.p;
    let m = design.p_eff;
    if y.len() != design.n_runs() {
        return Err(Error::config(format!("{} responses for {} runs", y.len(), design.n_runs())));
    }
    let rows: Vec<Vec<f64>> = design.runs.rows().into_iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
    let odd_df = m - p;
    if odd_df == 0 {
        return Err(Error::Fit(
            "no error degrees of freedom in the odd space; rebuild the design with 2 fake factors".into(),
        ));
    }

    // Stage 1: odd responses on the main effects (no intercept).
    let pairs = &design.pair_map;
    let odd_y = DVector::from_iterator(m, pairs.iter().map(|&(a, b)| (y[a] - y[b]) / 2.0));
    let odd_x = DMatrix::from_fn(m, p, |r, j| rows[pairs[r].0][j]);
    let s1 = ols(&odd_x, &odd_y).ok_or_else(|| Error::Fit("main-effect columns are singular".into()))?;
    // Backward elimination: the weakest main joins the fake and padding
    // columns in the error estimate while it fails the entry test.
    let ss = |j: usize| s1.beta[j] * s1.beta[j] / s1.inv_diag[j];
    let mut mains: Vec<usize> = (0..p).collect();
    let mut odd_rss = s1.rss;
    let mut odd_df = odd_df;
    while let Some(k) = (0..mains.len()).min_by(|&a, &b| ss(mains[a]).total_cmp(&ss(mains[b])).then(a.cmp(&b))) {
        let j = mains[k];
        let t = s1.beta[j] / (odd_rss / odd_df as f64 * s1.inv_diag[j]).sqrt();
        if t.abs() > t_quantile(opts.alpha, odd_df) {
            break;
        }
        mains.remove(k);
        odd_rss += ss(j);
        odd_df += 1;
    }
    mains.sort_unstable();
    let odd_sigma2 = odd_rss / odd_df as f64;

    // Stage 2: fold-over means plus the centre run; the centre has twice the
    // variance of a mean of two runs, so it carries weight 1/sqrt(2).
    let center = design.center_row();
    let mut even_rows: Vec<Vec<f64>> = pairs.iter().map(|&(a, _)| rows[a].clone()).collect();
    even_rows.push(rows[center].clone());
    let mut even_y: Vec<f64> = pairs.iter().map(|&(a, b)| (y[a] + y[b]) / 2.0).collect();
    even_y.push(y[center]);
    let mut w = vec![1.0; m];
    w.push(std::f64::consts::FRAC_1_SQRT_2);
    let even_yw = DVector::from_iterator(m + 1, even_y.iter().zip(&w).map(|(v, w)| v * w));
    let mut candidates: Vec<Term> = Vec::new();
    for (a, &i) in mains.iter().enumerate() {
        candidates.push(Term::Quadratic(i));
        for &j in &mains[a + 1..] {
            candidates.push(Term::Interaction(i, j));
        }
    }
    let mut chosen: Vec<Term> = Vec::new();
    let base = ols(&model_matrix(&even_rows, &[], Some(&w)), &even_yw).expect("intercept-only fit");
    let mut even_rss = base.rss;
    loop {
        let even_df = m + 1 - 1 - chosen.len();
        if even_df == 0 || even_rss / even_df as f64 <= odd_sigma2 {
            break;
        }
        let mut best: Option<(f64, Term, f64)> = None;
        for &c in candidates.iter().filter(|c| !chosen.contains(c)) {
            if even_df < 2 {
                break;
            }
            let mut terms = chosen.clone();
            terms.push(c);
            let Some(fit) = ols(&model_matrix(&even_rows, &terms, Some(&w)), &even_yw) else { continue };
            let df_pool = odd_df + even_df - 1;
            let pooled = (odd_rss + fit.rss) / df_pool as f64;
            let k = terms.len();
            let t = fit.beta[k] / (pooled * fit.inv_diag[k]).sqrt();
            if best.is_none_or(|b| t.abs() > b.0) {
                best = Some((t.abs(), c, fit.rss));
            }
        }
        match best {
            Some((t, c, rss)) if t > t_quantile(opts.alpha_even, odd_df + even_df - 1) => {
                chosen.push(c);
                even_rss = rss;
            }
            _ => break,
        }
    }
    let even_df = m - chosen.len();

    // Joint refit on all runs.
    let mut terms: Vec<Term> = mains.iter().map(|&j| Term::Main(j)).collect();
    terms.extend(chosen);
    let xf = model_matrix(&rows, &terms, None);
    let yf = DVector::from_column_slice(y);
    let fit = ols(&xf, &yf).ok_or_else(|| Error::Fit("selected model is not estimable".into()))?;
    let n = rows.len();
    let residual_df = n.saturating_sub(terms.len() + 1);
    let sigma2 = if residual_df > 0 { fit.rss / residual_df as f64 } else { f64::NAN };
    let mut out: Vec<FitTerm> = terms
        .iter()
        .enumerate()
        .map(|(k, &term)| {
            let se = (sigma2 * fit.inv_diag[k + 1]).sqrt();
            let t = fit.beta[k + 1] / se;
            FitTerm { term, estimate: fit.beta[k + 1], std_error: se, t_ratio: t, p_value: p_value(t, residual_df) }
        })
        .collect();
    out.sort_by(|a, b| b.t_ratio.abs().total_cmp(&a.t_ratio.abs()).then(a.term.cmp(&b.term)));
    Ok(DsdFitResult {
        terms: out,
        intercept: fit.beta[0],
        residual_df,
        odd_sigma2,
        odd_df,
        even_sigma2: if even_df > 0 { even_rss / even_df as f64 } else { f64::NAN },
        even_df,
        x: rows,
    })
}

/// Cumulative R^2 of nested models adding the fitted terms in table order,
/// starting from the intercept-only model.
pub fn dsd_variance_explained(fit: &DsdFitResult, y: &[f64]) -> Result<Table> {
    if y.len() != fit.x.len() {
        return Err(Error::config(format!("{} responses for {} runs", y.len(), fit.x.len())));
    }
    let yv = DVector::from_column_slice(y);
    let mean = yv.mean();
    let tss: f64 = yv.iter().map(|v| (v - mean) * (v - mean)).sum();
    let mut t = Table::new(["term", "r_squared"]);
    t.push(vec!["intercept".into(), 0.0.into()]);
    let mut terms = Vec::new();
    for f in &fit.terms {
        terms.push(f.term);
        let r2 = match ols(&model_matrix(&fit.x, &terms, None), &yv) {
            Some(o) if tss > 0.0 => 1.0 - o.rss / tss,
            Some(_) => 0.0,
            None => return Err(Error::Fit(format!("nested model up to {} is not estimable", f.term.name()))),
        };
        t.push(vec![f.term.name().into(), r2.into()]);
    }
    Ok(t)
}
