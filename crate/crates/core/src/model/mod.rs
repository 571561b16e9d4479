//! Model handles: builtin analytic functions, external subprocesses and fixed data tables.

mod builtin;
mod external;
mod table;

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use builtin::{builtin_truth, Builtin, SobolTruth, BUILTIN_NAMES};
pub use external::ExternalModel;
pub use table::TableModel;

/// A scalar function of a p-vector.
pub trait Model: Sync {
    fn arity(&self) -> usize;

    /// Evaluate every row of `x`.
    fn evaluate(&self, x: &Array2<f64>) -> Result<Vec<f64>>;

    /// Whether the model may be called at points it has not seen before.
    fn accepts_new_points(&self) -> bool {
        true
    }
}

pub(crate) fn check_arity(model: &dyn Model, x: &Array2<f64>) -> Result<()> {
    if x.ncols() != model.arity() {
        return Err(Error::config(format!(
            "model takes {} inputs but the design has {} columns",
            model.arity(),
            x.ncols()
        )));
    }
    Ok(())
}

/// Evaluate a pure point function over the rows of `x` in parallel.
pub(crate) fn evaluate_rows<F>(x: &Array2<f64>, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let p = x.ncols();
    let flat: Vec<f64> = x.iter().copied().collect();
    let y: Vec<f64> = if p == 0 {
        vec![f(&[]); x.nrows()]
    } else {
        flat.par_chunks(p).map(&f).collect()
    };
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation { row, message: format!("non-finite response {}", y[row]) });
    }
    Ok(y)
}

/// Wraps a closure as a [`Model`].
pub struct FnModel<F> {
    arity: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(arity: usize, f: F) -> Self {
        FnModel { arity, f }
    }
}

impl<F> Model for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn evaluate(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        check_arity(self, x)?;
        evaluate_rows(x, &self.f)
    }
}

/// Any of the three supported model kinds.
#[derive(Debug)]
pub enum ModelHandle {
    Builtin(Builtin),
    External(ExternalModel),
    Table(TableModel),
}

impl Model for ModelHandle {
    fn arity(&self) -> usize {
        match self {
            ModelHandle::Builtin(b) => b.arity(),
            ModelHandle::External(e) => e.arity(),
            ModelHandle::Table(t) => t.arity(),
        }
    }

    fn evaluate(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        match self {
            ModelHandle::Builtin(b) => b.evaluate(x),
            ModelHandle::External(e) => e.evaluate(x),
            ModelHandle::Table(t) => t.evaluate(x),
        }
    }

    fn accepts_new_points(&self) -> bool {
        !matches!(self, ModelHandle::Table(_))
    }
}

/// Counts model calls: every evaluated batch of n rows adds exactly n.
pub struct Counted<'a> {
    inner: &'a dyn Model,
    count: AtomicU64,
}

impl<'a> Counted<'a> {
    pub fn new(inner: &'a dyn Model) -> Self {
        Counted { inner, count: AtomicU64::new(0) }
    }

    pub fn eval_count(&self) -> u64 {
        self.count.load(Ordering::SeqCst)
    }
}

impl Model for Counted<'_> {
    fn arity(&self) -> usize {
        self.inner.arity()
    }

    fn evaluate(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        let y = self.inner.evaluate(x)?;
        self.count.fetch_add(x.nrows() as u64, Ordering::SeqCst);
        Ok(y)
    }

    fn accepts_new_points(&self) -> bool {
        self.inner.accepts_new_points()
    }
}

/// An evaluated batch of input points.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalBatch {
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
    /// Cumulative model calls after this batch.
    pub eval_count: u64,
}

impl EvalBatch {
    pub fn evaluate(model: &Counted<'_>, x: Array2<f64>, seed: u64) -> Result<Self> {
        let y = model.evaluate(&x)?;
        Ok(EvalBatch { x, y, seed, eval_count: model.eval_count() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn counter_adds_batch_size() {
        let m = FnModel::new(2, |x: &[f64]| x[0] + x[1]);
        let c = Counted::new(&m);
        let b1 = EvalBatch::evaluate(&c, array![[1.0, 2.0], [3.0, 4.0]], 0).unwrap();
        assert_eq!(b1.y, vec![3.0, 7.0]);
        assert_eq!(b1.eval_count, 2);
        let b2 = EvalBatch::evaluate(&c, array![[0.0, 0.0]], 0).unwrap();
        assert_eq!(b2.eval_count, 3);
    }

    #[test]
    fn arity_mismatch_is_config_error() {
        let m = FnModel::new(3, |x: &[f64]| x[0]);
        assert!(matches!(m.evaluate(&array![[1.0, 2.0]]), Err(Error::Config(_))));
    }

    #[test]
    fn non_finite_output_names_row() {
        let m = FnModel::new(1, |x: &[f64]| 1.0 / x[0]);
        match m.evaluate(&array![[1.0], [0.0]]) {
            Err(Error::Evaluation { row, .. }) => assert_eq!(row, 1),
            other => panic!("{other:?}"),
        }
    }
}
