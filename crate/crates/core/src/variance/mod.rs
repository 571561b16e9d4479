//! Variance-based sensitivity: Sobol' pick-freeze, extended FAST and binned
//! main-effect curves.

mod curves;
mod fast;
mod pick_freeze;

use serde::{Deserialize, Serialize};

use crate::io::{Cell, Table};

pub use curves::{conditional_mean_curve, main_effect_curves};
pub use curves::check_bins;
pub use fast::{fast_frequencies, fast_indices, FastOptions};
pub use pick_freeze::{pick_freeze_design, sobol_estimate, sobol_estimate_with, BootstrapOptions};

/// Headline indices are clamped to `[-CLAMP_EPS, 1 + CLAMP_EPS]`.
pub const CLAMP_EPS: f64 = 0.0;

pub(crate) fn clamp_index(v: f64) -> f64 {
    v.clamp(-CLAMP_EPS, 1.0 + CLAMP_EPS)
}

/// First-order and total Sobol' indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolResult {
    pub first_order: Vec<f64>,
    pub total: Vec<f64>,
    /// Estimates before clamping.
    pub first_order_raw: Vec<f64>,
    pub total_raw: Vec<f64>,
    pub total_variance: f64,
    pub n_base: usize,
    pub n_evals: u64,
    pub estimator: String,
    pub zero_variance: bool,
    /// Bootstrap 95% percentile intervals, `(lo, hi)` per input.
    pub first_order_ci: Option<Vec<(f64, f64)>>,
    pub total_ci: Option<Vec<(f64, f64)>>,
    /// Bootstrap standard errors.
    pub first_order_se: Option<Vec<f64>>,
    pub total_se: Option<Vec<f64>>,
}

impl SobolResult {
    pub fn dim(&self) -> usize {
        self.first_order.len()
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["input", "S", "S_lo", "S_hi", "ST", "ST_lo", "ST_hi", "n_evals", "estimator"]);
        let lo_hi = |ci: &Option<Vec<(f64, f64)>>, i: usize| -> (Cell, Cell) {
            match ci {
                Some(v) => (v[i].0.into(), v[i].1.into()),
                None => (Cell::Empty, Cell::Empty),
            }
        };
        for i in 0..self.dim() {
            let (slo, shi) = lo_hi(&self.first_order_ci, i);
            let (tlo, thi) = lo_hi(&self.total_ci, i);
            t.push(vec![
                (i + 1).into(),
                self.first_order[i].into(),
                slo,
                shi,
                self.total[i].into(),
                tlo,
                thi,
                self.n_evals.into(),
                self.estimator.as_str().into(),
            ]);
        }
        t
    }
}
