use ndarray::{concatenate, Array2, Axis};
use rand::Rng;
use rayon::prelude::*;

use super::{clamp_index, SobolResult};
use crate::design::{DesignMatrix, PickFreezeBlock, RowOrigin};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::sample::{sample, Scheme};
use crate::space::InputSpace;
use crate::stats::quantile_sorted;

/// Pick-freeze design: blocks A, B, then A_B^(1) .. A_B^(p), n rows each.
///
/// A and B are independent Latin hypercube samples.
pub fn pick_freeze_design(space: &InputSpace, n: usize, seed: u64) -> Result<DesignMatrix> {
    space.require_independent("pick-freeze Sobol' estimation")?;
    if n < 2 {
        return Err(Error::config("pick-freeze needs at least 2 base samples"));
    }
    let p = space.dim();
    let a = sample(space, n, derive_seed(seed, &[stream::SAMPLE]), Scheme::Lhs)?;
    let b = sample(space, n, derive_seed(seed, &[stream::SHADOW]), Scheme::Lhs)?;
    let mut blocks = vec![a.clone(), b.clone()];
    let mut origin = Vec::with_capacity(n * (p + 2));
    origin.extend((0..n).map(|s| RowOrigin::PickFreeze { block: PickFreezeBlock::Base, sample: s }));
    origin.extend((0..n).map(|s| RowOrigin::PickFreeze { block: PickFreezeBlock::Shadow, sample: s }));
    for i in 0..p {
        let mut ab = a.clone();
        ab.column_mut(i).assign(&b.column(i));
        blocks.push(ab);
        origin.extend((0..n).map(|s| RowOrigin::PickFreeze { block: PickFreezeBlock::Hybrid(i), sample: s }));
    }
    let views: Vec<_> = blocks.iter().map(Array2::view).collect();
    let x = concatenate(Axis(0), &views).expect("blocks share column count");
    Ok(DesignMatrix { x, origin })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    /// Number of resamples; 0 disables the bootstrap.
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { resamples: 500, seed: 0 }
    }
}

/// Responses split by block.
struct Blocks<'a> {
    a: &'a [f64],
    b: &'a [f64],
    ab: Vec<&'a [f64]>,
}

/// Raw first-order and total estimates plus the variance used to normalize them.
fn estimate(blocks: &Blocks<'_>, idx: Option<&[usize]>) -> (Vec<f64>, Vec<f64>, f64) {
    let n = blocks.a.len();
    let at = |v: &[f64], k: usize| match idx {
        Some(ix) => v[ix[k]],
        None => v[k],
    };
    let mut sum = 0.0;
    for k in 0..n {
        sum += at(blocks.a, k) + at(blocks.b, k);
    }
    let mean = sum / (2 * n) as f64;
    let mut var = 0.0;
    for k in 0..n {
        let da = at(blocks.a, k) - mean;
        let db = at(blocks.b, k) - mean;
        var += da * da + db * db;
    }
    let var = var / (2 * n) as f64;
    let mut first = Vec::with_capacity(blocks.ab.len());
    let mut total = Vec::with_capacity(blocks.ab.len());
    for ab in &blocks.ab {
        let (mut s, mut t) = (0.0, 0.0);
        for k in 0..n {
            let ya = at(blocks.a, k);
            let yab = at(ab, k);
            s += (at(blocks.b, k) - mean) * (yab - ya);
            t += (ya - yab) * (ya - yab);
        }
        first.push(s / n as f64 / var);
        total.push(t / (2 * n) as f64 / var);
    }
    (first, total, var)
}

/// Saltelli-2010 first-order and Jansen total indices with a 500-resample bootstrap.
pub fn sobol_estimate(design: &DesignMatrix, y: &[f64]) -> Result<SobolResult> {
    sobol_estimate_with(design, y, BootstrapOptions::default())
}

pub fn sobol_estimate_with(design: &DesignMatrix, y: &[f64], boot: BootstrapOptions) -> Result<SobolResult> {
    let p = design.ncols();
    let rows = design.nrows();
    if y.len() != rows {
        return Err(Error::config(format!("{} responses for {} design rows", y.len(), rows)));
    }
    if !rows.is_multiple_of(p + 2) {
        return Err(Error::config("design is not a pick-freeze design"));
    }
    let n = rows / (p + 2);
    for (r, o) in design.origin.iter().enumerate() {
        let block = r / n;
        let want = match block {
            0 => PickFreezeBlock::Base,
            1 => PickFreezeBlock::Shadow,
            k => PickFreezeBlock::Hybrid(k - 2),
        };
        if *o != (RowOrigin::PickFreeze { block: want, sample: r % n }) {
            return Err(Error::config(format!("design row {r} is not in pick-freeze block order")));
        }
    }
    let blocks = Blocks { a: &y[..n], b: &y[n..2 * n], ab: (0..p).map(|i| &y[(i + 2) * n..(i + 3) * n]).collect() };
    let estimator = "saltelli2010-jansen".to_string();
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        let z = vec![0.0; p];
        return Ok(SobolResult {
            first_order: z.clone(),
            total: z.clone(),
            first_order_raw: z.clone(),
            total_raw: z,
            total_variance: 0.0,
            n_base: n,
            n_evals: rows as u64,
            estimator,
            zero_variance: true,
            first_order_ci: None,
            total_ci: None,
            first_order_se: None,
            total_se: None,
        });
    }
    let (first_raw, total_raw, var) = estimate(&blocks, None);
    let mut result = SobolResult {
        first_order: first_raw.iter().copied().map(clamp_index).collect(),
        total: total_raw.iter().copied().map(clamp_index).collect(),
        first_order_raw: first_raw,
        total_raw,
        total_variance: var,
        n_base: n,
        n_evals: rows as u64,
        estimator,
        zero_variance: false,
        first_order_ci: None,
        total_ci: None,
        first_order_se: None,
        total_se: None,
    };
    if boot.resamples >= 2 {
        let reps: Vec<(Vec<f64>, Vec<f64>)> = (0..boot.resamples)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(derive_seed(boot.seed, &[b as u64]), stream::BOOTSTRAP);
                let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let (s, t, _) = estimate(&blocks, Some(&idx));
                (s, t)
            })
            .collect();
        let summarize = |pick: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| {
            let mut ci = Vec::with_capacity(p);
            let mut se = Vec::with_capacity(p);
            for i in 0..p {
                let mut v: Vec<f64> = reps.iter().map(|r| pick(r)[i]).filter(|v| v.is_finite()).collect();
                se.push(crate::stats::std_dev(&v, 1));
                v.sort_by(f64::total_cmp);
                ci.push((clamp_index(quantile_sorted(&v, 0.025)), clamp_index(quantile_sorted(&v, 0.975))));
            }
            (ci, se)
        };
        let (sci, sse) = summarize(&|r| &r.0);
        let (tci, tse) = summarize(&|r| &r.1);
        result.first_order_ci = Some(sci);
        result.first_order_se = Some(sse);
        result.total_ci = Some(tci);
        result.total_se = Some(tse);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Builtin, Model};

    #[test]
    fn design_blocks() {
        let space = InputSpace::uniform_cube(2).unwrap();
        let d = pick_freeze_design(&space, 3, 1).unwrap();
        assert_eq!(d.nrows(), 12);
        for s in 0..3 {
            assert_eq!(d.x[(6 + s, 0)], d.x[(3 + s, 0)]);
            assert_eq!(d.x[(6 + s, 1)], d.x[(s, 1)]);
        }
    }

    #[test]
    fn constant_model_flags_zero_variance() {
        let space = InputSpace::uniform_cube(2).unwrap();
        let d = pick_freeze_design(&space, 50, 1).unwrap();
        let y = vec![3.0; d.nrows()];
        let r = sobol_estimate(&d, &y).unwrap();
        assert!(r.zero_variance);
        assert_eq!(r.first_order, vec![0.0, 0.0]);
    }

    #[test]
    fn linear_model_recovers_shares() {
        let m = Builtin::Linear { beta: vec![1.0, 2.0] };
        let d = pick_freeze_design(&m.default_space(), 1 << 14, 3).unwrap();
        let y = m.evaluate(&d.x).unwrap();
        let r = sobol_estimate(&d, &y).unwrap();
        for (s, want) in r.first_order.iter().zip([0.2, 0.8]) {
            assert!((s - want).abs() < 0.02, "{s}");
        }
        for (t, want) in r.total.iter().zip([0.2, 0.8]) {
            assert!((t - want).abs() < 0.02, "{t}");
        }
    }

    #[test]
    fn affine_invariance() {
        let m = Builtin::ishigami();
        let d = pick_freeze_design(&m.default_space(), 512, 9).unwrap();
        let y = m.evaluate(&d.x).unwrap();
        let y2: Vec<f64> = y.iter().map(|v| 5.0 * v + 2.0).collect();
        let opts = BootstrapOptions { resamples: 0, seed: 0 };
        let a = sobol_estimate_with(&d, &y, opts).unwrap();
        let b = sobol_estimate_with(&d, &y2, opts).unwrap();
        for i in 0..3 {
            assert!((a.first_order_raw[i] - b.first_order_raw[i]).abs() < 1e-12);
            assert!((a.total_raw[i] - b.total_raw[i]).abs() < 1e-12);
        }
    }
}
