//! Run plans with per-row provenance.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::io::{Cell, Table};

/// Block of a pick-freeze design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "block", content = "input", rename_all = "snake_case")]
pub enum PickFreezeBlock {
    /// Base matrix A.
    Base,
    /// Shadow matrix B.
    Shadow,
    /// A with column `i` taken from B.
    Hybrid(usize),
}

/// Role of a definitive-screening-design run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsdRole {
    /// Row `pair` of the conference matrix.
    Fold { pair: usize },
    /// Negated row `pair`.
    Mirror { pair: usize },
    Center,
}

/// How one design row was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowOrigin {
    PickFreeze { block: PickFreezeBlock, sample: usize },
    /// Row `step` of Morris trajectory `trajectory`; `perturbed` is the input
    /// changed to reach this row from the previous one (None for step 0).
    Trajectory { trajectory: usize, step: usize, perturbed: Option<usize> },
    Dsd { role: DsdRole },
}

/// An n x p run plan.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: Array2<f64>,
    pub origin: Vec<RowOrigin>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn to_table(&self) -> Table {
        let p = self.ncols();
        let mut header = vec!["row".to_string(), "origin".to_string()];
        header.extend((1..=p).map(|i| format!("x{i}")));
        let mut t = Table::new(header);
        for (r, (row, origin)) in self.x.rows().into_iter().zip(&self.origin).enumerate() {
            let mut cells = vec![Cell::from(r), Cell::Text(describe(origin))];
            cells.extend(row.iter().map(|&v| Cell::Num(v)));
            t.push(cells);
        }
        t
    }
}

fn describe(origin: &RowOrigin) -> String {
    match origin {
        RowOrigin::PickFreeze { block, sample } => match block {
            PickFreezeBlock::Base => format!("A[{sample}]"),
            PickFreezeBlock::Shadow => format!("B[{sample}]"),
            PickFreezeBlock::Hybrid(i) => format!("AB{}[{sample}]", i + 1),
        },
        RowOrigin::Trajectory { trajectory, step, perturbed } => match perturbed {
            Some(i) => format!("traj{trajectory}:step{step}:x{}", i + 1),
            None => format!("traj{trajectory}:step{step}"),
        },
        RowOrigin::Dsd { role } => match role {
            DsdRole::Fold { pair } => format!("fold{pair}"),
            DsdRole::Mirror { pair } => format!("mirror{pair}"),
            DsdRole::Center => "center".to_string(),
        },
    }
}
