//! Deterministic sampling of input spaces.

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{open_unit, stream_rng, stream};
use crate::space::InputSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Iid,
    /// Latin hypercube: each column has exactly one point per equal-probability stratum.
    Lhs,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iid" => Ok(Scheme::Iid),
            "lhs" => Ok(Scheme::Lhs),
            other => Err(Error::config(format!("unknown sampling scheme `{other}` (iid | lhs)"))),
        }
    }
}

/// Draw `n` points from `space`. Identical arguments give bit-identical output.
pub fn sample(space: &InputSpace, n: usize, seed: u64, scheme: Scheme) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::config("sample size must be at least 1"));
    }
    let p = space.dim();
    let mut rng = stream_rng(seed, stream::SAMPLE);
    let mut out = Array2::zeros((n, p));
    match scheme {
        Scheme::Iid => {
            let mut row = vec![0.0; p];
            for mut r in out.rows_mut() {
                space.draw_into(&mut row, &mut rng)?;
                r.iter_mut().zip(&row).for_each(|(o, &v)| *o = v);
            }
        }
        Scheme::Lhs => {
            space.require_independent("latin hypercube sampling")?;
            let mut strata: Vec<usize> = (0..n).collect();
            for j in 0..p {
                strata.shuffle(&mut rng);
                let marginal = space.marginal(j);
                for (i, &k) in strata.iter().enumerate() {
                    let u = (k as f64 + open_unit(&mut rng)) / n as f64;
                    out[(i, j)] = marginal.quantile(u);
                }
            }
        }
    }
    Ok(out)
}
