//! Morris elementary-effects screening.
//!
//! Trajectories live on the unit grid `{0, 1/(k-1), ..., 1}^p`; map them to an
//! input space with [`MorrisDesign::to_space`]. Elementary effects are
//! reported per unit of the grid coordinate.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{DesignMatrix, RowOrigin};
use crate::error::{Error, Result};
use crate::io::Table;
use crate::rng::{derive_seed, stream, stream_rng};
use crate::space::InputSpace;
use crate::stats::{mean, std_dev};

#[derive(Debug, Clone, PartialEq)]
pub struct MorrisDesign {
    pub p: usize,
    pub k: usize,
    /// Step size in grid units, a multiple of `1/(k-1)`.
    pub delta: f64,
    pub r: usize,
    /// `r(p+1)` rows; each row's origin records its trajectory, step and the input changed to reach it.
    pub design: DesignMatrix,
}

impl MorrisDesign {
    pub fn x(&self) -> &Array2<f64> {
        &self.design.x
    }

    /// Map grid coordinates through the marginal quantile functions.
    pub fn to_space(&self, space: &InputSpace) -> Result<Array2<f64>> {
        space.require_independent("Morris screening")?;
        if space.dim() != self.p {
            return Err(Error::config(format!("design has {} inputs, space has {}", self.p, space.dim())));
        }
        let mut x = self.design.x.clone();
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            let d = space.marginal(j);
            col.mapv_inplace(|u| d.quantile(u));
        }
        Ok(x)
    }
}

/// Build `r` randomly oriented trajectories
/// `B* = (J x* + (delta/2)[(2B - J)D* + J])P*`.
pub fn morris_design(p: usize, k: usize, delta_mult: f64, r: usize, seed: u64) -> Result<MorrisDesign> {
    if p == 0 {
        return Err(Error::config("Morris design needs at least one input"));
    }
    if k < 2 {
        return Err(Error::config("Morris grid needs k >= 2 levels"));
    }
    if r == 0 {
        return Err(Error::config("Morris design needs at least one trajectory"));
    }
    let steps = delta_mult.round();
    if (delta_mult - steps).abs() > 1e-9 || steps < 1.0 {
        return Err(Error::config(format!("delta must be a positive multiple of 1/(k-1); got {delta_mult}/(k-1)")));
    }
    let steps = steps as usize;
    if steps >= k - 1 {
        return Err(Error::config(format!("delta = {steps}/{} must be below 1", k - 1)));
    }
    let step_of = |level: usize| level as f64 / (k - 1) as f64;
    let delta = step_of(steps);
    // Admissible base levels leave room for one step up.
    let n_base_levels = k - steps;
    let mut x = Array2::zeros((r * (p + 1), p));
    let mut origin = Vec::with_capacity(r * (p + 1));
    for t in 0..r {
        let mut rng = stream_rng(derive_seed(seed, &[t as u64]), stream::TRAJECTORY);
        let base: Vec<usize> = (0..p).map(|_| rng.random_range(0..n_base_levels)).collect();
        let up: Vec<bool> = (0..p).map(|_| rng.random::<bool>()).collect();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(&mut rng);
        // Integer levels keep every row exactly on the grid.
        let mut level: Vec<usize> = (0..p).map(|j| if up[j] { base[j] } else { base[j] + steps }).collect();
        let row0 = t * (p + 1);
        for j in 0..p {
            x[(row0, j)] = step_of(level[j]);
        }
        origin.push(RowOrigin::Trajectory { trajectory: t, step: 0, perturbed: None });
        for (s, &i) in order.iter().enumerate() {
            level[i] = if up[i] { level[i] + steps } else { level[i] - steps };
            for j in 0..p {
                x[(row0 + s + 1, j)] = step_of(level[j]);
            }
            origin.push(RowOrigin::Trajectory { trajectory: t, step: s + 1, perturbed: Some(i) });
        }
    }
    Ok(MorrisDesign { p, k, delta, r, design: DesignMatrix { x, origin } })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorrisResult {
    /// Signed mean of the elementary effects.
    pub mean: Vec<f64>,
    /// Mean absolute elementary effect (mu*).
    pub mean_abs: Vec<f64>,
    /// Sample standard deviation (n - 1 denominator).
    pub std: Vec<f64>,
    pub sem: Vec<f64>,
    pub r: usize,
    /// `effects[i][t]` is input i's elementary effect on trajectory t.
    pub effects: Vec<Vec<f64>>,
}

impl MorrisResult {
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["input", "mean", "mean_abs", "std", "sem"]);
        for i in 0..self.mean.len() {
            t.push(vec![
                (i + 1).into(),
                self.mean[i].into(),
                self.mean_abs[i].into(),
                self.std[i].into(),
                self.sem[i].into(),
            ]);
        }
        t
    }
}

/// One elementary effect per (trajectory, input), keyed by the recorded perturbed input.
pub fn morris_analyze(design: &MorrisDesign, y: &[f64]) -> Result<MorrisResult> {
    let (p, r) = (design.p, design.r);
    let x = &design.design.x;
    if y.len() != x.nrows() {
        return Err(Error::config(format!("{} responses for {} design rows", y.len(), x.nrows())));
    }
    if r < 2 {
        return Err(Error::config("Morris analysis needs r >= 2 trajectories for a standard deviation"));
    }
    // rows[t][s] = design row holding step s of trajectory t.
    let mut rows = vec![vec![usize::MAX; p + 1]; r];
    let mut perturbed = vec![vec![usize::MAX; p + 1]; r];
    for (row, o) in design.design.origin.iter().enumerate() {
        match *o {
            RowOrigin::Trajectory { trajectory, step, perturbed: pi } if trajectory < r && step <= p => {
                rows[trajectory][step] = row;
                perturbed[trajectory][step] = pi.unwrap_or(usize::MAX);
            }
            _ => return Err(Error::config(format!("design row {row} is not a Morris trajectory row"))),
        }
    }
    let mut effects = vec![vec![f64::NAN; r]; p];
    for t in 0..r {
        for s in 1..=p {
            let (a, b) = (rows[t][s - 1], rows[t][s]);
            let i = perturbed[t][s];
            if a == usize::MAX || b == usize::MAX || i >= p || !effects[i][t].is_nan() {
                return Err(Error::config(format!("trajectory {t} is incomplete or perturbs an input twice")));
            }
            effects[i][t] = (y[b] - y[a]) / (x[(b, i)] - x[(a, i)]);
        }
    }
    let mut out = MorrisResult { mean: vec![], mean_abs: vec![], std: vec![], sem: vec![], r, effects: vec![] };
    for e in &effects {
        let abs: Vec<f64> = e.iter().map(|v| v.abs()).collect();
        let sd = std_dev(e, 1);
        out.mean.push(mean(e));
        out.mean_abs.push(mean(&abs));
        out.std.push(sd);
        out.sem.push(sd / (r as f64).sqrt());
    }
    out.effects = effects;
    Ok(out)
}
