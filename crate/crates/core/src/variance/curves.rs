use ndarray::Array2;

use crate::binning::Bins;
use crate::curve::{CurveKind, EffectCurve};
use crate::error::{Error, Result};
use crate::space::InputSpace;
use crate::stats::mean;

/// Binned curves need at least ten points per bin.
pub fn check_bins(n: usize, bins: usize) -> Result<()> {
    if bins == 0 {
        return Err(Error::config("bin count must be at least 1"));
    }
    if n < 10 * bins {
        return Err(Error::config(format!("{bins} bins need at least {} samples, got {n}", 10 * bins)));
    }
    Ok(())
}

/// `E[y | x in bin] - mean(y)` per bin, tabulated at the bin centroids.
pub(crate) fn binned_mean_curve(x: &[f64], y: &[f64], bins: &Bins, input_index: usize, kind: CurveKind) -> EffectCurve {
    let n = y.len() as f64;
    let f0 = mean(y);
    let mut grid = Vec::with_capacity(bins.len());
    let mut value = Vec::with_capacity(bins.len());
    let mut weight = Vec::with_capacity(bins.len());
    for m in &bins.members {
        grid.push(m.iter().map(|&k| x[k]).sum::<f64>() / m.len() as f64);
        value.push(m.iter().map(|&k| y[k]).sum::<f64>() / m.len() as f64 - f0);
        weight.push(m.len() as f64 / n);
    }
    EffectCurve { input_index, grid, value, weight, kind, bins_reduced: bins.reduced }
}

/// Conditional-mean curve of one input from given data, on empirical
/// equal-count bins.
pub fn conditional_mean_curve(x: &Array2<f64>, y: &[f64], input_index: usize, bins: usize) -> Result<EffectCurve> {
    if x.nrows() != y.len() {
        return Err(Error::config(format!("{} responses for {} rows", y.len(), x.nrows())));
    }
    if input_index >= x.ncols() {
        return Err(Error::config(format!("input {} out of range", input_index + 1)));
    }
    check_bins(y.len(), bins)?;
    let col: Vec<f64> = x.column(input_index).to_vec();
    let b = Bins::empirical(&col, bins);
    Ok(binned_mean_curve(&col, y, &b, input_index, CurveKind::SobolMain))
}

/// Main effects `f_i(x_i) = E[f | x_i] - f_0` on equal-probability bins of each marginal.
pub fn main_effect_curves(x: &Array2<f64>, y: &[f64], space: &InputSpace, bins: usize) -> Result<Vec<EffectCurve>> {
    space.require_independent("main-effect curves")?;
    if x.nrows() != y.len() || x.ncols() != space.dim() {
        return Err(Error::config("sample shape does not match the responses or the input space"));
    }
    check_bins(y.len(), bins)?;
    (0..space.dim())
        .map(|i| {
            let d = space.marginal(i);
            let (lo, hi) = d.support();
            let edges: Vec<f64> = (0..=bins)
                .map(|k| match k {
                    0 => lo,
                    k if k == bins => hi,
                    k => d.quantile(k as f64 / bins as f64),
                })
                .collect();
            let col: Vec<f64> = x.column(i).to_vec();
            let b = Bins::with_edges(&col, edges, bins);
            Ok(binned_mean_curve(&col, y, &b, i, CurveKind::SobolMain))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Builtin, Model};
    use crate::sample::{sample, Scheme};

    #[test]
    fn linear_slope_and_centering() {
        let m = Builtin::Linear { beta: vec![1.0, 2.0] };
        let space = m.default_space();
        let x = sample(&space, 20_000, 1, Scheme::Iid).unwrap();
        let y = m.evaluate(&x).unwrap();
        let c = main_effect_curves(&x, &y, &space, 20).unwrap();
        let c1 = &c[0];
        let k = c1.grid.len() - 1;
        let slope = (c1.value[k] - c1.value[0]) / (c1.grid[k] - c1.grid[0]);
        assert!((slope - 1.0).abs() < 0.02, "{slope}");
        assert!(c1.weighted_mean().abs() < 1e-10);
        assert!(c1.grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_gives_flat_zero() {
        let space = InputSpace::uniform_cube(2).unwrap();
        let x = sample(&space, 200, 1, Scheme::Iid).unwrap();
        let y = vec![4.0; 200];
        for c in main_effect_curves(&x, &y, &space, 10).unwrap() {
            assert!(c.value.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn too_few_samples() {
        let space = InputSpace::uniform_cube(1).unwrap();
        let x = sample(&space, 50, 1, Scheme::Iid).unwrap();
        assert!(main_effect_curves(&x, &[0.0; 50], &space, 10).is_err());
    }
}
