//! First-order accumulated local effects.

use ndarray::Array2;

use crate::binning::Bins;
use crate::curve::{CurveKind, EffectCurve};
use crate::error::{Error, Result};
use crate::model::{check_arity, Model};

pub const DEFAULT_BINS: usize = 32;

/// ALE curve of input `input_index`, tabulated at the quantile bin edges.
///
/// Each sample is moved to both edges of its bin with the other coordinates
/// kept, so the model is called `2n` times and never leaves the data cloud in
/// the other inputs. The curve is centred so that its linear interpolation
/// averages to zero over the sample; `weight` carries that average.
pub fn ale_first_order(model: &dyn Model, x: &Array2<f64>, input_index: usize, bins: usize) -> Result<EffectCurve> {
    if !model.accepts_new_points() {
        return Err(Error::GivenData(
            "ALE evaluates the model at bin edges; a fixed data table cannot supply new points".into(),
        ));
    }
    check_arity(model, x)?;
    let (n, p) = x.dim();
    if input_index >= p {
        return Err(Error::config(format!("input {} out of range", input_index + 1)));
    }
    crate::variance::check_bins(n, bins)?;
    let col: Vec<f64> = x.column(input_index).to_vec();
    let b = Bins::empirical(&col, bins);
    let nb = b.len();
    if b.edges[0] == b.edges[nb] {
        return Err(Error::config(format!("input {} takes a single value; ALE is undefined", input_index + 1)));
    }
    let mut bin_of = vec![0; n];
    for (j, m) in b.members.iter().enumerate() {
        for &k in m {
            bin_of[k] = j;
        }
    }
    let mut pts = Array2::zeros((2 * n, p));
    for k in 0..n {
        let j = bin_of[k];
        for (side, edge) in [(0, b.edges[j]), (1, b.edges[j + 1])] {
            let mut row = pts.row_mut(2 * k + side);
            row.assign(&x.row(k));
            row[input_index] = edge;
        }
    }
    let y = model.evaluate(&pts)?;
    let mut acc = vec![0.0; nb + 1];
    for (j, m) in b.members.iter().enumerate() {
        let local: f64 = m.iter().map(|&k| y[2 * k + 1] - y[2 * k]).sum::<f64>() / m.len() as f64;
        acc[j + 1] = acc[j] + local;
    }
    let mut weight = vec![0.0; nb + 1];
    for k in 0..n {
        let j = bin_of[k];
        let t = (col[k] - b.edges[j]) / (b.edges[j + 1] - b.edges[j]);
        weight[j] += (1.0 - t) / n as f64;
        weight[j + 1] += t / n as f64;
    }
    let centre: f64 = weight.iter().zip(&acc).map(|(w, a)| w * a).sum();
    let value = acc.iter().map(|a| a - centre).collect();
    Ok(EffectCurve {
        input_index,
        grid: b.edges,
        value,
        weight,
        kind: CurveKind::Ale,
        bins_reduced: b.reduced,
    })
}
