use ndarray::Array2;

use super::Model;
use crate::error::{Error, Result};

/// A fixed set of model runs. Only the stored design can be "evaluated".
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    x: Array2<f64>,
    y: Vec<f64>,
}

impl TableModel {
    pub fn new(x: Array2<f64>, y: Vec<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::config(format!("table has {} input rows but {} responses", x.nrows(), y.len())));
        }
        if y.len() < 2 {
            return Err(Error::config("table needs at least two rows"));
        }
        if x.ncols() == 0 {
            return Err(Error::config("table needs at least one input column"));
        }
        Ok(TableModel { x, y })
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

impl Model for TableModel {
    fn arity(&self) -> usize {
        self.x.ncols()
    }

    fn evaluate(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        if x != self.x {
            return Err(Error::GivenData("given-data models can only return the stored runs".into()));
        }
        Ok(self.y.clone())
    }

    fn accepts_new_points(&self) -> bool {
        false
    }
}
