//! Shapley effects by the nested conditional-variance estimator.
//!
//! The cost of a coalition J is `c(J) = E[Var(f | x_{-J})]`, estimated with an
//! outer loop over draws of `x_{-J}` and an inner loop over `x_J | x_{-J}`.
//! `c({}) = 0` and `c(all)` is the variance estimate itself, so the increments
//! along any permutation add up to that estimate.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::EffectCurve;
use crate::error::{Error, Result};
use crate::io::{Cell, Table};
use crate::model::{check_arity, Model};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::space::ConditionalSampler;
use crate::stats::{mean, std_dev, variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ShapleyMode {
    /// Exact subset enumeration when p <= 10 and the permutation budget covers
    /// every subset; random permutations otherwise.
    #[default]
    Auto,
    Permutation,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapleyOptions {
    pub n_perm: usize,
    pub n_outer: usize,
    pub n_inner: usize,
    /// Independent joint draws used for the variance estimate.
    pub n_var: usize,
    pub normalized: bool,
    pub mode: ShapleyMode,
    pub seed: u64,
}

impl Default for ShapleyOptions {
    fn default() -> Self {
        ShapleyOptions {
            n_perm: 300,
            n_outer: 100,
            n_inner: 3,
            n_var: 10_000,
            normalized: true,
            mode: ShapleyMode::Auto,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyResult {
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    pub normalized: bool,
    /// Variance estimate the effects are split from.
    pub variance: f64,
    pub mode: ShapleyMode,
    pub n_perm: usize,
    /// Outer draws per cost evaluation actually used.
    pub n_outer: usize,
    pub n_inner: usize,
    pub n_var: usize,
    pub n_evals: u64,
    pub zero_variance: bool,
    /// Largest `|sum_i increment_i - variance|` over the sampled permutations
    /// (0 in exact mode).
    pub telescoping_error: f64,
}

impl ShapleyResult {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["input", "Sh", "Sh_lo", "Sh_hi", "Sh_se", "n_evals", "estimator"]);
        let est = match self.mode {
            ShapleyMode::Exact => "shapley-exact",
            _ => "shapley-permutation",
        };
        for i in 0..self.values.len() {
            let (v, se) = (self.values[i], self.se[i]);
            t.push(vec![
                (i + 1).into(),
                v.into(),
                Cell::Num(v - 1.96 * se),
                Cell::Num(v + 1.96 * se),
                se.into(),
                self.n_evals.into(),
                est.into(),
            ]);
        }
        t
    }
}

/// Rows for one cost estimate: `n_outer` blocks of `n_inner` points sharing `x_{-J}`.
fn cost_rows(
    sampler: &dyn ConditionalSampler,
    coalition: &[usize],
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let p = sampler.dim();
    let rest: Vec<usize> = (0..p).filter(|j| !coalition.contains(j)).collect();
    let cond = sampler.conditional(&rest, coalition)?;
    let mut rng = stream_rng(seed, stream::PERMUTATION);
    let mut rows = Vec::with_capacity(n_outer * n_inner * p);
    let mut row = vec![0.0; p];
    for _ in 0..n_outer {
        sampler.draw_joint(&mut row, &mut rng)?;
        for _ in 0..n_inner {
            cond.draw(&mut row, &mut rng);
            rows.extend_from_slice(&row);
        }
    }
    Ok(rows)
}

/// Mean of the inner-block variances, and its standard error.
fn cost_from(y: &[f64], n_outer: usize, n_inner: usize) -> (f64, f64) {
    let v: Vec<f64> = y.chunks(n_inner).map(|c| variance(c, 1)).collect();
    debug_assert_eq!(v.len(), n_outer);
    (mean(&v), std_dev(&v, 1) / (n_outer as f64).sqrt())
}

pub fn shapley_effects(model: &dyn Model, sampler: &dyn ConditionalSampler, opts: ShapleyOptions) -> Result<ShapleyResult> {
    let p = sampler.dim();
    if opts.n_inner < 2 {
        return Err(Error::config("Shapley estimation needs n_inner >= 2 for a conditional variance"));
    }
    if opts.n_outer < 2 || opts.n_perm < 1 || opts.n_var < 2 {
        return Err(Error::config("Shapley estimation needs n_outer >= 2, n_perm >= 1 and n_var >= 2"));
    }
    // Fails early for dependence structures without a conditional sampler.
    sampler.conditional(&[], &(0..p).collect::<Vec<_>>())?;

    let mut rng = stream_rng(opts.seed, stream::SAMPLE);
    let mut xv = Array2::zeros((opts.n_var, p));
    let mut row = vec![0.0; p];
    for mut r in xv.rows_mut() {
        sampler.draw_joint(&mut row, &mut rng)?;
        r.iter_mut().zip(&row).for_each(|(o, &v)| *o = v);
    }
    check_arity(model, &xv)?;
    let yv = model.evaluate(&xv)?;
    let var = variance(&yv, 1);
    let mut n_evals = opts.n_var as u64;

    let n_subsets = (1usize << p.min(62)) - 2;
    let exact = match opts.mode {
        ShapleyMode::Exact => {
            if p > 20 {
                return Err(Error::config("exact Shapley enumeration is limited to p <= 20"));
            }
            true
        }
        ShapleyMode::Permutation => false,
        ShapleyMode::Auto => p <= 10 && opts.n_perm * (p - 1).max(1) >= n_subsets,
    };
    let lo = yv.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = yv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let zero_variance = lo == hi;

    let (raw, se_raw, n_outer, telescoping_error, mode) = if p == 1 {
        (vec![var], vec![0.0], opts.n_outer, 0.0, if exact { ShapleyMode::Exact } else { ShapleyMode::Permutation })
    } else if exact {
        // Same evaluation budget as the permutation path, spread over all subsets.
        let n_outer = (opts.n_perm * (p - 1) * opts.n_outer / n_subsets).max(opts.n_outer);
        let masks: Vec<usize> = (1..(1usize << p) - 1).collect();
        let blocks: Vec<Vec<f64>> = masks
            .par_iter()
            .map(|&mask| {
                let coalition: Vec<usize> = (0..p).filter(|j| mask >> j & 1 == 1).collect();
                cost_rows(sampler, &coalition, n_outer, opts.n_inner, derive_seed(opts.seed, &[mask as u64]))
            })
            .collect::<Result<_>>()?;
        let rows_per = n_outer * opts.n_inner;
        let flat: Vec<f64> = blocks.concat();
        let x = Array2::from_shape_vec((masks.len() * rows_per, p), flat).expect("row-major");
        let y = model.evaluate(&x)?;
        n_evals += x.nrows() as u64;
        let mut cost = vec![(0.0, 0.0); 1 << p];
        for (k, &mask) in masks.iter().enumerate() {
            cost[mask] = cost_from(&y[k * rows_per..(k + 1) * rows_per], n_outer, opts.n_inner);
        }
        cost[(1 << p) - 1] = (var, 0.0);
        let fact: Vec<f64> = (0..=p).scan(1.0, |a, k| {
            if k > 0 {
                *a *= k as f64;
            }
            Some(*a)
        }).collect();
        let w = |s: usize| fact[s] * fact[p - s - 1] / fact[p];
        let mut sh = vec![0.0; p];
        let mut se2 = vec![0.0; p];
        for i in 0..p {
            for mask in 0..(1usize << p) {
                if mask >> i & 1 == 1 {
                    continue;
                }
                let s = mask.count_ones() as usize;
                let with = cost[mask | 1 << i].0;
                let without = cost[mask].0;
                sh[i] += w(s) * (with - without);
            }
            for mask in 1..(1usize << p) - 1 {
                let s = mask.count_ones() as usize;
                let coef = if mask >> i & 1 == 1 { w(s - 1) } else { -w(s) };
                se2[i] += coef * coef * cost[mask].1 * cost[mask].1;
            }
        }
        (sh, se2.iter().map(|v| v.sqrt()).collect(), n_outer, 0.0, ShapleyMode::Exact)
    } else {
        let rows_per = (p - 1) * opts.n_outer * opts.n_inner;
        let perms: Vec<(Vec<usize>, Vec<f64>)> = (0..opts.n_perm)
            .into_par_iter()
            .map(|k| {
                let s = derive_seed(opts.seed, &[stream::PERMUTATION, k as u64]);
                let mut order: Vec<usize> = (0..p).collect();
                order.shuffle(&mut stream_rng(s, stream::PERMUTATION));
                let mut rows = Vec::with_capacity(rows_per * p);
                for j in 1..p {
                    rows.extend(cost_rows(sampler, &order[..j], opts.n_outer, opts.n_inner, derive_seed(s, &[j as u64]))?);
                }
                Ok((order, rows))
            })
            .collect::<Result<_>>()?;
        let flat: Vec<f64> = perms.iter().flat_map(|(_, r)| r.iter().copied()).collect();
        let x = Array2::from_shape_vec((opts.n_perm * rows_per, p), flat).expect("row-major");
        let y = model.evaluate(&x)?;
        n_evals += x.nrows() as u64;
        let block = opts.n_outer * opts.n_inner;
        let mut incr = vec![Vec::with_capacity(opts.n_perm); p];
        let mut tele: f64 = 0.0;
        for (k, (order, _)) in perms.iter().enumerate() {
            let yk = &y[k * rows_per..(k + 1) * rows_per];
            let mut prev = 0.0;
            let mut total = 0.0;
            for (j, &i) in order.iter().enumerate() {
                let c = if j + 1 == p { var } else { cost_from(&yk[j * block..(j + 1) * block], opts.n_outer, opts.n_inner).0 };
                incr[i].push(c - prev);
                total += c - prev;
                prev = c;
            }
            tele = tele.max((total - var).abs());
        }
        let sh: Vec<f64> = incr.iter().map(|v| mean(v)).collect();
        let se: Vec<f64> = incr.iter().map(|v| std_dev(v, 1) / (opts.n_perm as f64).sqrt()).collect();
        (sh, se, opts.n_outer, tele, ShapleyMode::Permutation)
    };

    let (values, se) = if zero_variance {
        (vec![0.0; p], vec![0.0; p])
    } else if opts.normalized {
        (raw.iter().map(|v| v / var).collect(), se_raw.iter().map(|v| v / var).collect())
    } else {
        (raw, se_raw)
    };
    Ok(ShapleyResult {
        values,
        se,
        normalized: opts.normalized,
        variance: var,
        mode,
        n_perm: opts.n_perm,
        n_outer,
        n_inner: opts.n_inner,
        n_var: opts.n_var,
        n_evals,
        zero_variance,
        telescoping_error,
    })
}

/// First-order conditional-expectation curve `E[f | x_i] - f_0` from given data.
pub fn shapley_effect_curve(x: &Array2<f64>, y: &[f64], input_index: usize, bins: usize) -> Result<EffectCurve> {
    crate::variance::conditional_mean_curve(x, y, input_index, bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Builtin, FnModel};
    use crate::space::{InputSpace, MarginalDist};

    fn small(mode: ShapleyMode) -> ShapleyOptions {
        ShapleyOptions { n_perm: 200, n_outer: 50, n_inner: 3, n_var: 20_000, mode, seed: 11, ..Default::default() }
    }

    #[test]
    fn product_is_split_evenly() {
        let space = InputSpace::independent(vec![MarginalDist::uniform(-1.0, 1.0).unwrap(); 2]).unwrap();
        let m = FnModel::new(2, |x: &[f64]| x[0] * x[1]);
        let r = shapley_effects(&m, &space, small(ShapleyMode::Exact)).unwrap();
        assert!((r.values[0] - 0.5).abs() < 0.03 && (r.values[1] - 0.5).abs() < 0.03, "{r:?}");
        let r = shapley_effects(&m, &space, small(ShapleyMode::Permutation)).unwrap();
        assert!((r.values[0] - 0.5).abs() < 3.0 * r.se[0], "{r:?}");
        assert!((r.values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn telescoping_is_exact() {
        let m = Builtin::ishigami();
        let r = shapley_effects(&m, &m.default_space(), small(ShapleyMode::Permutation)).unwrap();
        assert!(r.telescoping_error <= 1e-12 * r.variance, "{}", r.telescoping_error);
        assert_eq!(r.n_evals, 20_000 + 200 * 2 * 50 * 3);
    }

    #[test]
    fn linear_matches_first_order() {
        let m = Builtin::Linear { beta: vec![1.0, 2.0] };
        let r = shapley_effects(&m, &m.default_space(), small(ShapleyMode::Auto)).unwrap();
        assert_eq!(r.mode, ShapleyMode::Exact);
        assert!((r.values[0] - 0.2).abs() < 0.03 && (r.values[1] - 0.8).abs() < 0.03, "{r:?}");
    }

    #[test]
    fn inner_needs_two() {
        let m = Builtin::ishigami();
        let opts = ShapleyOptions { n_inner: 1, ..Default::default() };
        assert!(matches!(shapley_effects(&m, &m.default_space(), opts), Err(Error::Config(_))));
    }

    #[test]
    fn correlated_inputs_share_credit() {
        // f = x1 with x1, x2 correlated: x2 receives part of the effect.
        let space = InputSpace::gaussian_copula(
            vec![MarginalDist::normal(0.0, 1.0).unwrap(); 2],
            vec![vec![1.0, 0.8], vec![0.8, 1.0]],
        )
        .unwrap();
        let m = FnModel::new(2, |x: &[f64]| x[0]);
        let r = shapley_effects(&m, &space, small(ShapleyMode::Exact)).unwrap();
        // Sh_2 = rho^2 / 2 = 0.32 for this model.
        assert!((r.values[1] - 0.32).abs() < 0.05, "{r:?}");
    }
}
