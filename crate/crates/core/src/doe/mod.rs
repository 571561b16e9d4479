//! Definitive screening designs and their odd/even model fit.

mod conference;
mod fit;

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::design::{DesignMatrix, DsdRole, RowOrigin};
use crate::error::{Error, Result};
use crate::io::{Cell, Table};
use crate::rng::{stream, stream_rng};
use crate::space::InputSpace;

pub use conference::{conference_matrix, SUPPORTED_ORDERS};
pub use fit::{dsd_fit, dsd_fit_with, dsd_variance_explained, DsdFitOptions, DsdFitResult, FitTerm, Term, TermKind};

/// Fold-over design `(C; -C; 0)` restricted to the real factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DsdDesign {
    pub p: usize,
    pub n_fake: usize,
    /// Conference-matrix order: `p + n_fake`, plus one when that is odd.
    pub p_eff: usize,
    /// `(2 p_eff + 1) x p` matrix over {-1, 0, 1}.
    pub runs: Array2<i64>,
    /// Conference-matrix columns assigned to factor 1..p.
    pub factor_columns: Vec<usize>,
    /// Conference-matrix columns dropped (fake factors and parity padding).
    pub fake_dropped: Vec<usize>,
    /// `(row, fold-over row)` for every pair; the last run is the centre.
    pub pair_map: Vec<(usize, usize)>,
}

impl DsdDesign {
    pub fn n_runs(&self) -> usize {
        self.runs.nrows()
    }

    pub fn center_row(&self) -> usize {
        2 * self.p_eff
    }

    pub fn coded(&self) -> Array2<f64> {
        self.runs.mapv(|v| v as f64)
    }

    pub fn design_matrix(&self) -> DesignMatrix {
        let m = self.p_eff;
        let origin = (0..self.n_runs())
            .map(|r| RowOrigin::Dsd {
                role: if r < m {
                    DsdRole::Fold { pair: r }
                } else if r < 2 * m {
                    DsdRole::Mirror { pair: r - m }
                } else {
                    DsdRole::Center
                },
            })
            .collect();
        DesignMatrix { x: self.coded(), origin }
    }

    /// Map coded levels linearly onto each marginal's support: -1 to the lower
    /// bound, +1 to the upper bound.
    pub fn to_space(&self, space: &InputSpace) -> Result<Array2<f64>> {
        if space.dim() != self.p {
            return Err(Error::config(format!("design has {} factors, space has {}", self.p, space.dim())));
        }
        let mut x = self.coded();
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            let (lo, hi) = space.marginal(j).support();
            col.mapv_inplace(|c| lo + (c + 1.0) / 2.0 * (hi - lo));
        }
        Ok(x)
    }

    /// Coded and physical columns side by side.
    pub fn to_table(&self, space: Option<&InputSpace>) -> Result<Table> {
        let mut header = vec!["run".to_string(), "role".to_string()];
        header.extend((1..=self.p).map(|j| format!("X{j}")));
        let phys = match space {
            Some(s) => {
                header.extend((1..=self.p).map(|j| format!("x{j}")));
                Some(self.to_space(s)?)
            }
            None => None,
        };
        let mut t = Table::new(header);
        let dm = self.design_matrix();
        for r in 0..self.n_runs() {
            let role = match dm.origin[r] {
                RowOrigin::Dsd { role: DsdRole::Fold { pair } } => format!("fold{pair}"),
                RowOrigin::Dsd { role: DsdRole::Mirror { pair } } => format!("mirror{pair}"),
                _ => "center".to_string(),
            };
            let mut row = vec![Cell::from(r), Cell::Text(role)];
            row.extend(self.runs.row(r).iter().map(|&v| Cell::Int(v)));
            if let Some(x) = &phys {
                row.extend(x.row(r).iter().map(|&v| Cell::Num(v)));
            }
            t.push(row);
        }
        Ok(t)
    }
}

/// Minimum-run DSD for `p` factors with `n_fake` fake factors.
///
/// The seed picks which conference-matrix columns become the real factors.
pub fn dsd(p: usize, n_fake: usize, seed: u64) -> Result<DsdDesign> {
    if p < 3 {
        return Err(Error::config(format!("a DSD needs at least 3 factors, got {p}")));
    }
    if n_fake != 0 && n_fake != 2 {
        return Err(Error::config(format!("fake factor count must be 0 or 2, got {n_fake}")));
    }
    let mut m = p + n_fake;
    if m % 2 == 1 {
        m += 1;
    }
    let c = conference_matrix(m)?;
    let mut cols: Vec<usize> = (0..m).collect();
    cols.shuffle(&mut stream_rng(seed, stream::DESIGN));
    let (real, dropped) = cols.split_at(p);
    let mut runs = Array2::zeros((2 * m + 1, p));
    for (j, &cj) in real.iter().enumerate() {
        for r in 0..m {
            runs[(r, j)] = c[(r, cj)];
            runs[(r + m, j)] = -c[(r, cj)];
        }
    }
    let mut fake_dropped = dropped.to_vec();
    fake_dropped.sort_unstable();
    Ok(DsdDesign {
        p,
        n_fake,
        p_eff: m,
        runs,
        factor_columns: real.to_vec(),
        fake_dropped,
        pair_map: (0..m).map(|r| (r, r + m)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_counts() {
        assert_eq!(dsd(10, 2, 1).unwrap().n_runs(), 25);
        assert_eq!(dsd(6, 0, 1).unwrap().n_runs(), 13);
        assert_eq!(dsd(5, 0, 1).unwrap().n_runs(), 13);
        assert!(dsd(2, 0, 1).is_err());
        assert!(dsd(4, 1, 1).is_err());
        assert!(matches!(dsd(20, 2, 1), Err(Error::Construction(_))));
    }

    #[test]
    fn structure() {
        for (p, fake) in [(10, 2), (7, 0), (3, 2), (18, 2)] {
            let d = dsd(p, fake, 3).unwrap();
            for &(a, b) in &d.pair_map {
                for j in 0..p {
                    assert_eq!(d.runs[(a, j)] + d.runs[(b, j)], 0);
                }
            }
            assert!(d.runs.row(d.center_row()).iter().all(|&v| v == 0));
            let xtx = d.runs.t().dot(&d.runs);
            for i in 0..p {
                assert_eq!(d.runs.column(i).iter().filter(|&&v| v == 0).count(), 3);
                for j in 0..p {
                    if i != j {
                        assert_eq!(xtx[(i, j)], 0);
                    }
                }
            }
        }
    }
}
