//! Moment-independent delta index from given data.
//!
//! Responses are replaced by their pooled ranks scaled to (0, 1) before any
//! density estimation, so the estimate is unchanged by any strictly
//! increasing transformation of y. Densities are Gaussian kernel estimates on
//! a regular grid over [0, 1], reflected at both ends.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveKind, EffectCurve};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::stats::{average_ranks, quantile_sorted, std_dev};

pub const DEFAULT_GRID: usize = 512;
/// Smallest sample allowed per class.
pub const MIN_PER_CLASS: usize = 50;

/// `max(8, floor(sqrt(n) / 5))`.
pub fn default_partitions(n: usize) -> usize {
    (((n as f64).sqrt() / 5.0).floor() as usize).max(8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaResult {
    pub values: Vec<f64>,
    /// Estimates before clamping to [0, 1].
    pub raw: Vec<f64>,
    pub partitions: Vec<usize>,
    pub n: usize,
    pub grid: usize,
    pub bandwidth_marginal: f64,
    /// Per input, the bandwidth used in each class.
    pub bandwidth: Vec<Vec<f64>>,
    pub zero_variance: bool,
}

impl DeltaResult {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["input", "delta", "partitions", "n"]);
        for i in 0..self.values.len() {
            t.push(vec![(i + 1).into(), self.values[i].into(), self.partitions[i].into(), self.n.into()]);
        }
        t
    }
}

/// Kernel density on `g` grid points over [0, 1] from linearly binned data.
struct Kde {
    g: usize,
}

impl Kde {
    fn step(&self) -> f64 {
        1.0 / (self.g - 1) as f64
    }

    /// Silverman's rule, floored at the grid spacing.
    fn bandwidth(&self, u: &[f64]) -> f64 {
        let n = u.len() as f64;
        let sd = std_dev(u, 1);
        let mut s = u.to_vec();
        s.sort_by(f64::total_cmp);
        let iqr = (quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)) / 1.34;
        let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
        let h = 0.9 * spread * n.powf(-0.2);
        if h.is_finite() {
            h.max(self.step())
        } else {
            self.step()
        }
    }

    fn density(&self, u: &[f64], h: f64) -> Vec<f64> {
        let g = self.g;
        let d = self.step();
        let mut counts = vec![0.0; g];
        for &v in u {
            let pos = v.clamp(0.0, 1.0) / d;
            let k = (pos.floor() as usize).min(g - 2);
            let t = pos - k as f64;
            counts[k] += 1.0 - t;
            counts[k + 1] += t;
        }
        // kernel[o] for offsets o in -(2g-2)..=(2g-2)
        let off = 2 * g - 2;
        let norm = 1.0 / (u.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        let kernel: Vec<f64> = (0..=2 * off)
            .map(|o| {
                let z = (o as f64 - off as f64) * d / h;
                if z.abs() > 40.0 {
                    0.0
                } else {
                    (-0.5 * z * z).exp() * norm
                }
            })
            .collect();
        let k = |o: isize| kernel[(o + off as isize) as usize];
        let top = (2 * (g - 1)) as isize;
        (0..g as isize)
            .map(|i| {
                let mut s = 0.0;
                for (j, &c) in counts.iter().enumerate() {
                    if c != 0.0 {
                        let j = j as isize;
                        s += c * (k(i - j) + k(i + j) + k(i + j - top));
                    }
                }
                s
            })
            .collect()
    }

    /// Trapezoid weights summing to 1.
    fn weights(&self) -> Vec<f64> {
        let d = self.step();
        (0..self.g).map(|i| if i == 0 || i + 1 == self.g { d / 2.0 } else { d }).collect()
    }
}

/// Equal-count classes along `x`, ties broken by `u` so row order never matters.
fn classes(x: &[f64], u: &[f64], m: usize) -> Vec<Vec<usize>> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(u[a].total_cmp(&u[b])));
    (0..m).map(|c| idx[c * n / m..(c + 1) * n / m].to_vec()).collect()
}

fn rank_scores(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    average_ranks(y).into_iter().map(|r| (r - 0.5) / n).collect()
}

fn resolve_partitions(n: usize, partitions: Option<usize>) -> Result<usize> {
    let m = match partitions {
        Some(m) => {
            if n < MIN_PER_CLASS * m {
                return Err(Error::config(format!(
                    "{m} partitions need at least {} samples, got {n}",
                    MIN_PER_CLASS * m
                )));
            }
            m
        }
        None => default_partitions(n).min(n / MIN_PER_CLASS),
    };
    if m < 2 {
        return Err(Error::config(format!(
            "delta needs at least 2 classes of {MIN_PER_CLASS} samples; {n} samples allow {m}"
        )));
    }
    Ok(m)
}

fn check_data(x: &Array2<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::GivenData(format!("{} responses for {} rows", y.len(), x.nrows())));
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::GivenData("given data contain non-finite values".into()));
    }
    Ok(())
}

/// Delta index of every input; `partitions = None` uses [`default_partitions`].
pub fn delta_given_data(x: &Array2<f64>, y: &[f64], partitions: Option<usize>) -> Result<DeltaResult> {
    check_data(x, y)?;
    let (n, p) = x.dim();
    let m = resolve_partitions(n, partitions)?;
    let kde = Kde { g: DEFAULT_GRID };
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(DeltaResult {
            values: vec![0.0; p],
            raw: vec![0.0; p],
            partitions: vec![m; p],
            n,
            grid: kde.g,
            bandwidth_marginal: 0.0,
            bandwidth: vec![vec![]; p],
            zero_variance: true,
        });
    }
    let u = rank_scores(y);
    let h0 = kde.bandwidth(&u);
    let f0 = kde.density(&u, h0);
    let w = kde.weights();
    let per_input: Vec<(f64, Vec<f64>)> = (0..p)
        .into_par_iter()
        .map(|i| {
            let xi: Vec<f64> = x.column(i).to_vec();
            let cls = classes(&xi, &u, m);
            let mut delta = 0.0;
            let mut hs = Vec::with_capacity(m);
            for c in &cls {
                let uc: Vec<f64> = c.iter().map(|&k| u[k]).collect();
                let h = kde.bandwidth(&uc);
                let fc = kde.density(&uc, h);
                let area: f64 = (0..kde.g).map(|k| w[k] * (f0[k] - fc[k]).abs()).sum();
                delta += c.len() as f64 / n as f64 * area;
                hs.push(h);
            }
            (0.5 * delta, hs)
        })
        .collect();
    let raw: Vec<f64> = per_input.iter().map(|r| r.0).collect();
    Ok(DeltaResult {
        values: raw.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        raw,
        partitions: vec![m; p],
        n,
        grid: kde.g,
        bandwidth_marginal: h0,
        bandwidth: per_input.into_iter().map(|r| r.1).collect(),
        zero_variance: false,
    })
}

/// Response densities, unconditional and per slice of one input, for slice plots.
///
/// The first curve is the unconditional density, followed by one curve per
/// slice of input `input_index` in increasing order. Every curve shares the
/// grid of response probability levels in [0, 1]; `weight` holds the
/// trapezoid quadrature weights, so the separation area of slice `s` is
/// `sum_k weight[k] * |curves[0].value[k] - curves[s].value[k]|`.
pub fn conditional_density_curves(
    x: &Array2<f64>,
    y: &[f64],
    input_index: usize,
    n_slices: usize,
    grid: usize,
) -> Result<Vec<EffectCurve>> {
    check_data(x, y)?;
    if input_index >= x.ncols() {
        return Err(Error::config(format!("input {} out of range", input_index + 1)));
    }
    if grid < 2 {
        return Err(Error::config("density grid needs at least 2 points"));
    }
    let m = resolve_partitions(y.len(), Some(n_slices))?;
    let kde = Kde { g: grid };
    let w = kde.weights();
    let gpts: Vec<f64> = (0..grid).map(|k| k as f64 * kde.step()).collect();
    let curve = |value: Vec<f64>| EffectCurve {
        input_index,
        grid: gpts.clone(),
        value,
        weight: w.clone(),
        kind: CurveKind::DensitySlice,
        bins_reduced: false,
    };
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok((0..=m).map(|_| curve(vec![1.0; grid])).collect());
    }
    let u = rank_scores(y);
    let mut out = vec![curve(kde.density(&u, kde.bandwidth(&u)))];
    let xi: Vec<f64> = x.column(input_index).to_vec();
    for c in classes(&xi, &u, m) {
        let uc: Vec<f64> = c.iter().map(|&k| u[k]).collect();
        out.push(curve(kde.density(&uc, kde.bandwidth(&uc))));
    }
    Ok(out)
}
