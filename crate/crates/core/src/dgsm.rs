//! Derivative-based global sensitivity measures with Poincare bounds on total indices.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{Cell, Table};
use crate::model::{check_arity, Model};
use crate::sample::{sample, Scheme};
use crate::space::{InputSpace, MarginalDist};
use crate::stats::{mean, std_dev, variance};

pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgsmResult {
    /// `E[df/dx_i]`.
    pub w: Vec<f64>,
    /// `E[(df/dx_i)^2]`.
    pub v: Vec<f64>,
    pub w_se: Vec<f64>,
    pub v_se: Vec<f64>,
    /// Upper bound on each total index; absent when no Poincare constant applies.
    pub total_bound: Vec<Option<f64>>,
    pub bound_se: Vec<Option<f64>>,
    pub variance: f64,
    pub n: usize,
    /// Relative step; the absolute step of input i is `fd_step * scale_i`.
    pub fd_step: f64,
    /// Derivatives taken one-sided because the point was too close to the support boundary.
    pub one_sided: usize,
    pub n_evals: u64,
    pub zero_variance: bool,
}

impl DgsmResult {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["input", "w", "v", "total_bound", "n_evals"]);
        for i in 0..self.w.len() {
            t.push(vec![
                (i + 1).into(),
                self.w[i].into(),
                self.v[i].into(),
                Cell::from(self.total_bound[i]),
                self.n_evals.into(),
            ]);
        }
        t
    }
}

#[derive(Clone, Copy)]
enum Stencil {
    Central,
    Forward,
    Backward,
}

/// Monte Carlo DGSM over `n` iid points with `2p + 1` evaluations each.
///
/// Derivatives use central differences; within two steps of a support
/// boundary a second-order one-sided difference is substituted so the budget
/// stays `n(2p + 1)`.
pub fn dgsm(model: &dyn Model, space: &InputSpace, n: usize, fd_step: f64, seed: u64) -> Result<DgsmResult> {
    space.require_independent("DGSM bounds")?;
    if n < 10 {
        return Err(Error::config(format!("DGSM needs n >= 10 sample points, got {n}")));
    }
    if !(fd_step > 0.0 && fd_step < 0.25) {
        return Err(Error::config(format!("finite-difference step must lie in (0, 0.25), got {fd_step}")));
    }
    let p = space.dim();
    let base = sample(space, n, seed, Scheme::Iid)?;
    check_arity(model, &base)?;
    let h: Vec<f64> = space.marginals().iter().map(|d| fd_step * d.scale()).collect();
    let mut stencil = vec![Stencil::Central; n * p];
    let mut pts = Array2::zeros((n * (2 * p + 1), p));
    let mut one_sided = 0;
    for k in 0..n {
        let r0 = k * (2 * p + 1);
        pts.row_mut(r0).assign(&base.row(k));
        for i in 0..p {
            let (lo, hi) = space.marginal(i).support();
            let x = base[(k, i)];
            let s = if x - h[i] >= lo && x + h[i] <= hi {
                Stencil::Central
            } else if x + 2.0 * h[i] <= hi {
                Stencil::Forward
            } else if x - 2.0 * h[i] >= lo {
                Stencil::Backward
            } else {
                return Err(Error::config(format!("finite-difference step too large for the support of input {}", i + 1)));
            };
            if !matches!(s, Stencil::Central) {
                one_sided += 1;
            }
            let (a, b) = match s {
                Stencil::Central => (x + h[i], x - h[i]),
                Stencil::Forward => (x + h[i], x + 2.0 * h[i]),
                Stencil::Backward => (x - h[i], x - 2.0 * h[i]),
            };
            for (off, val) in [(1, a), (2, b)] {
                let mut row = pts.row_mut(r0 + 2 * i + off);
                row.assign(&base.row(k));
                row[i] = val;
            }
            stencil[k * p + i] = s;
        }
    }
    let y = model.evaluate(&pts)?;
    let mut grads = vec![Vec::with_capacity(n); p];
    let mut f0s = Vec::with_capacity(n);
    for k in 0..n {
        let r0 = k * (2 * p + 1);
        let f0 = y[r0];
        f0s.push(f0);
        for i in 0..p {
            let (ra, rb) = (r0 + 2 * i + 1, r0 + 2 * i + 2);
            let (fa, fb) = (y[ra], y[rb]);
            let step = pts[(ra, i)] - base[(k, i)];
            let g = match stencil[k * p + i] {
                Stencil::Central => (fa - fb) / (pts[(ra, i)] - pts[(rb, i)]),
                // Written through differences from f0 so an ignored input gives exactly 0.
                Stencil::Forward | Stencil::Backward => (4.0 * (fa - f0) - (fb - f0)) / (2.0 * step),
            };
            grads[i].push(g);
        }
    }
    let var = variance(&f0s, 1);
    let lo = f0s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = f0s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let zero_variance = lo == hi;
    let sqn = (n as f64).sqrt();
    let mut out = DgsmResult {
        w: vec![],
        v: vec![],
        w_se: vec![],
        v_se: vec![],
        total_bound: vec![],
        bound_se: vec![],
        variance: var,
        n,
        fd_step,
        one_sided,
        n_evals: pts.nrows() as u64,
        zero_variance,
    };
    for (i, g) in grads.iter().enumerate() {
        let sq: Vec<f64> = g.iter().map(|v| v * v).collect();
        let v = mean(&sq);
        let v_se = std_dev(&sq, 1) / sqn;
        let c = poincare(space.marginal(i));
        let (bound, bse) = match c {
            Some(_) if zero_variance => (Some(0.0), Some(0.0)),
            Some(c) => (Some(c * v / var), Some(c * v_se / var)),
            None => (None, None),
        };
        out.w.push(mean(g));
        out.w_se.push(std_dev(g, 1) / sqn);
        out.v.push(v);
        out.v_se.push(v_se);
        out.total_bound.push(bound);
        out.bound_se.push(bse);
    }
    Ok(out)
}

fn poincare(d: &MarginalDist) -> Option<f64> {
    match d {
        MarginalDist::Uniform { .. } | MarginalDist::Normal { .. } => Some(d.poincare_constant()),
    }
}
