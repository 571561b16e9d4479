//! Tabulated one-dimensional effects.

use serde::{Deserialize, Serialize};

use crate::io::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    SobolMain,
    Ale,
    DensitySlice,
}

impl CurveKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveKind::SobolMain => "sobol_main",
            CurveKind::Ale => "ale",
            CurveKind::DensitySlice => "density_slice",
        }
    }
}

/// Effect of one input tabulated on a strictly increasing grid.
///
/// `weight[k]` is the probability mass attached to `grid[k]`; main-effect and
/// ALE curves are centred so that `sum(weight * value) == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectCurve {
    pub input_index: usize,
    pub grid: Vec<f64>,
    pub value: Vec<f64>,
    pub weight: Vec<f64>,
    pub kind: CurveKind,
    /// Set when empty bins forced fewer bins than requested.
    pub bins_reduced: bool,
}

impl EffectCurve {
    pub fn weighted_mean(&self) -> f64 {
        self.weight.iter().zip(&self.value).map(|(w, v)| w * v).sum()
    }

    /// Linear interpolation, constant beyond the ends.
    pub fn interpolate(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g[0] {
            return self.value[0];
        }
        if x >= g[g.len() - 1] {
            return self.value[g.len() - 1];
        }
        let k = g.partition_point(|&v| v <= x);
        let (x0, x1) = (g[k - 1], g[k]);
        let t = (x - x0) / (x1 - x0);
        self.value[k - 1] * (1.0 - t) + self.value[k] * t
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["input", "x", "value", "kind"]);
        for (x, v) in self.grid.iter().zip(&self.value) {
            t.push(vec![(self.input_index + 1).into(), Cell::Num(*x), Cell::Num(*v), self.kind.as_str().into()]);
        }
        t
    }
}

pub fn curves_table(curves: &[EffectCurve]) -> Table {
    let mut t = Table::new(["input", "x", "value", "kind"]);
    for c in curves {
        t.append(c.to_table());
    }
    t
}
