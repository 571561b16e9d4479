//! Input-space modelling: per-input marginals and their dependence structure.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::rng::{open_unit, StreamRng};

/// Normal marginals are treated as supported on mu +/- this many sigmas.
pub const NORMAL_TRUNCATION_SIGMAS: f64 = 8.0;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// One-dimensional input distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MarginalDist {
    Uniform { a: f64, b: f64 },
    Normal { mu: f64, sigma: f64 },
}

impl MarginalDist {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        let d = MarginalDist::Uniform { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        let d = MarginalDist::Normal { mu, sigma };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MarginalDist::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::config(format!("uniform({a}, {b}) needs finite a < b")));
                }
            }
            MarginalDist::Normal { mu, sigma } => {
                if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
                    return Err(Error::config(format!(
                        "normal({mu}, {sigma}) needs finite mu and sigma > 0"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            MarginalDist::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            MarginalDist::Normal { mu, sigma } => std_normal_cdf((x - mu) / sigma),
        }
    }

    /// Inverse CDF. `u` outside (0, 1) maps to the support bounds.
    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            MarginalDist::Uniform { a, b } => {
                let u = u.clamp(0.0, 1.0);
                a + u * (b - a)
            }
            MarginalDist::Normal { mu, sigma } => {
                let (lo, hi) = self.support();
                if u <= 0.0 {
                    return lo;
                }
                if u >= 1.0 {
                    return hi;
                }
                (mu + sigma * std_normal_quantile(u)).clamp(lo, hi)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            MarginalDist::Uniform { a, b } => {
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            MarginalDist::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    /// Support box; normal marginals are truncated at +/- 8 sigma.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            MarginalDist::Uniform { a, b } => (a, b),
            MarginalDist::Normal { mu, sigma } => (
                mu - NORMAL_TRUNCATION_SIGMAS * sigma,
                mu + NORMAL_TRUNCATION_SIGMAS * sigma,
            ),
        }
    }

    /// Natural length scale: range for uniform, sigma for normal.
    pub fn scale(&self) -> f64 {
        match *self {
            MarginalDist::Uniform { a, b } => b - a,
            MarginalDist::Normal { sigma, .. } => sigma,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarginalDist::Uniform { a, b } => 0.5 * (a + b),
            MarginalDist::Normal { mu, .. } => mu,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            MarginalDist::Uniform { a, b } => (b - a) * (b - a) / 12.0,
            MarginalDist::Normal { sigma, .. } => sigma * sigma,
        }
    }

    /// Poincare constant C with Var g <= C E[g'^2] for this marginal.
    pub fn poincare_constant(&self) -> f64 {
        match *self {
            MarginalDist::Uniform { a, b } => (b - a) * (b - a) / (std::f64::consts::PI.powi(2)),
            MarginalDist::Normal { sigma, .. } => sigma * sigma,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.support();
        x >= lo && x <= hi
    }
}

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal quantile, polished with one Newton step on the CDF.
pub fn std_normal_quantile(u: f64) -> f64 {
    let n = Normal::standard();
    let mut z = n.inverse_cdf(u);
    if z.is_finite() {
        let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if dens > 1e-300 {
            z -= (std_normal_cdf(z) - u) / dens;
        }
    }
    z
}

/// Dependence structure between the inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dependence {
    Independent,
    /// Gaussian copula with the given correlation matrix (row-major, p x p).
    GaussianCopula { correlation: Vec<Vec<f64>> },
    /// Inputs are dependent but no generative model is known (given data only).
    Unknown,
}

/// Product (or copula-coupled) distribution over a p-dimensional box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpec", into = "SpaceSpec")]
pub struct InputSpace {
    dims: Vec<MarginalDist>,
    dependence: Dependence,
    chol: Option<DMatrix<f64>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct SpaceSpec {
    dims: Vec<MarginalDist>,
    dependence: Dependence,
}

impl TryFrom<SpaceSpec> for InputSpace {
    type Error = Error;

    fn try_from(spec: SpaceSpec) -> Result<Self> {
        InputSpace::build(spec.dims, spec.dependence)
    }
}

impl From<InputSpace> for SpaceSpec {
    fn from(s: InputSpace) -> Self {
        SpaceSpec { dims: s.dims, dependence: s.dependence }
    }
}

impl InputSpace {
    pub fn independent(dims: Vec<MarginalDist>) -> Result<Self> {
        Self::build(dims, Dependence::Independent)
    }

    pub fn uniform_cube(p: usize) -> Result<Self> {
        Self::independent(vec![MarginalDist::Uniform { a: 0.0, b: 1.0 }; p])
    }

    /// Marginals coupled by a Gaussian copula with correlation matrix `corr`.
    pub fn gaussian_copula(dims: Vec<MarginalDist>, corr: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(dims, Dependence::GaussianCopula { correlation: corr })
    }

    pub fn build(dims: Vec<MarginalDist>, dependence: Dependence) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::config("input space must have at least one dimension"));
        }
        for d in &dims {
            d.validate()?;
        }
        let chol = match &dependence {
            Dependence::GaussianCopula { correlation } => Some(copula_cholesky(correlation, dims.len())?),
            _ => None,
        };
        Ok(InputSpace { dims, dependence, chol })
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn marginals(&self) -> &[MarginalDist] {
        &self.dims
    }

    pub fn marginal(&self, i: usize) -> &MarginalDist {
        &self.dims[i]
    }

    pub fn dependence(&self) -> &Dependence {
        &self.dependence
    }

    pub fn is_independent(&self) -> bool {
        matches!(self.dependence, Dependence::Independent)
    }

    pub(crate) fn require_independent(&self, method: &str) -> Result<()> {
        if self.is_independent() {
            Ok(())
        } else {
            Err(Error::precondition(format!("{method} requires independent inputs")))
        }
    }

    pub fn contains(&self, row: &[f64]) -> bool {
        row.len() == self.dims.len() && self.dims.iter().zip(row).all(|(d, &x)| d.contains(x))
    }

    /// Map a point of the unit cube to the space through the marginal quantiles.
    pub fn from_unit(&self, u: &[f64], out: &mut [f64]) {
        for ((o, &ui), d) in out.iter_mut().zip(u).zip(&self.dims) {
            *o = d.quantile(ui);
        }
    }

    /// Fill `row` with one joint draw.
    pub fn draw_into(&self, row: &mut [f64], rng: &mut StreamRng) -> Result<()> {
        match &self.dependence {
            Dependence::Independent => {
                for (x, d) in row.iter_mut().zip(&self.dims) {
                    *x = d.quantile(open_unit(rng));
                }
                Ok(())
            }
            Dependence::GaussianCopula { .. } => {
                let chol = self.chol.as_ref().expect("cholesky built with copula");
                let p = self.dims.len();
                let e = DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let z = chol * e;
                for i in 0..p {
                    row[i] = self.dims[i].quantile(std_normal_cdf(z[i]));
                }
                Ok(())
            }
            Dependence::Unknown => Err(Error::precondition(
                "cannot draw from an input space with unknown dependence",
            )),
        }
    }
}

fn copula_cholesky(corr: &[Vec<f64>], p: usize) -> Result<DMatrix<f64>> {
    if corr.len() != p || corr.iter().any(|r| r.len() != p) {
        return Err(Error::config(format!("correlation matrix must be {p}x{p}")));
    }
    let m = DMatrix::from_fn(p, p, |i, j| corr[i][j]);
    for i in 0..p {
        if (m[(i, i)] - 1.0).abs() > 1e-12 {
            return Err(Error::config("correlation matrix needs a unit diagonal"));
        }
        for j in 0..p {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 || m[(i, j)].abs() > 1.0 {
                return Err(Error::config("correlation matrix must be symmetric with entries in [-1, 1]"));
            }
        }
    }
    m.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::config("correlation matrix is not positive definite"))
}

/// Draws `x_target | x_given` for a fixed pair of index sets.
pub trait ConditionalDraw {
    /// `row` holds the given coordinates on entry; target coordinates are overwritten.
    fn draw(&self, row: &mut [f64], rng: &mut StreamRng);
}

/// Source of conditional distributions of the inputs.
pub trait ConditionalSampler: Sync {
    fn dim(&self) -> usize;

    /// Draw every coordinate from the joint distribution.
    fn draw_joint(&self, row: &mut [f64], rng: &mut StreamRng) -> Result<()>;

    fn conditional<'a>(&'a self, given: &[usize], target: &[usize]) -> Result<Box<dyn ConditionalDraw + 'a>>;
}

struct IndependentDraw<'a> {
    space: &'a InputSpace,
    target: Vec<usize>,
}

impl ConditionalDraw for IndependentDraw<'_> {
    fn draw(&self, row: &mut [f64], rng: &mut StreamRng) {
        for &t in &self.target {
            row[t] = self.space.dims[t].quantile(open_unit(rng));
        }
    }
}

/// Conditional normal in copula space: z_T | z_G ~ N(A z_G, L L').
struct CopulaDraw<'a> {
    space: &'a InputSpace,
    given: Vec<usize>,
    target: Vec<usize>,
    coef: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl ConditionalDraw for CopulaDraw<'_> {
    fn draw(&self, row: &mut [f64], rng: &mut StreamRng) {
        let zg = DVector::from_iterator(
            self.given.len(),
            self.given.iter().map(|&g| {
                let u = self.space.dims[g].cdf(row[g]).clamp(1e-300, 1.0 - 1e-16);
                std_normal_quantile(u)
            }),
        );
        let e = DVector::from_iterator(self.target.len(), (0..self.target.len()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let z = &self.coef * zg + &self.chol * e;
        for (k, &t) in self.target.iter().enumerate() {
            row[t] = self.space.dims[t].quantile(std_normal_cdf(z[k]));
        }
    }
}

impl ConditionalSampler for InputSpace {
    fn dim(&self) -> usize {
        self.dims.len()
    }

    fn draw_joint(&self, row: &mut [f64], rng: &mut StreamRng) -> Result<()> {
        self.draw_into(row, rng)
    }

    fn conditional<'a>(&'a self, given: &[usize], target: &[usize]) -> Result<Box<dyn ConditionalDraw + 'a>> {
        match &self.dependence {
            Dependence::Independent => Ok(Box::new(IndependentDraw { space: self, target: target.to_vec() })),
            Dependence::GaussianCopula { correlation } => {
                let r = |a: &[usize], b: &[usize]| DMatrix::from_fn(a.len(), b.len(), |i, j| correlation[a[i]][b[j]]);
                let r_tt = r(target, target);
                let (coef, cov) = if given.is_empty() {
                    (DMatrix::zeros(target.len(), 0), r_tt)
                } else {
                    let r_gg = r(given, given);
                    let r_tg = r(target, given);
                    let inv = r_gg
                        .try_inverse()
                        .ok_or_else(|| Error::config("singular correlation sub-matrix"))?;
                    let coef = &r_tg * inv;
                    let cov = r_tt - &coef * r_tg.transpose();
                    (coef, cov)
                };
                let chol = if target.is_empty() {
                    DMatrix::zeros(0, 0)
                } else {
                    // Symmetrize and jitter against round-off before factoring.
                    let sym = (&cov + cov.transpose()) * 0.5 + DMatrix::identity(target.len(), target.len()) * 1e-14;
                    sym.cholesky()
                        .map(|c| c.l())
                        .ok_or_else(|| Error::config("conditional covariance is not positive definite"))?
                };
                Ok(Box::new(CopulaDraw {
                    space: self,
                    given: given.to_vec(),
                    target: target.to_vec(),
                    coef,
                    chol,
                }))
            }
            Dependence::Unknown => Err(Error::precondition(
                "dependent inputs without a conditional sampler",
            )),
        }
    }
}
