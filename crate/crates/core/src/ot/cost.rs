use ndarray::{Array2, Axis};

use crate::data::{sq_dist, GroupedData};
use crate::error::{Error, Result};

/// Squared Euclidean costs between group-0 rows and group-1 rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    pub entries: Array2<f64>,
}

impl CostMatrix {
    /// Wraps an arbitrary finite, nonnegative matrix.
    pub fn from_entries(entries: Array2<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidData("cost matrix has an empty side".into()));
        }
        if entries.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("cost matrix entry".into()));
        }
        Ok(CostMatrix { entries })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.entries.dim()
    }
}

/// Builds the cost matrix, optionally restricted to the feature columns `cols`.
pub fn cost_matrix(g: &GroupedData, cols: Option<&[usize]>) -> Result<CostMatrix> {
    let d = g.group0.ncols();
    let all: Vec<usize>;
    let cols = match cols {
        Some(c) => c,
        None => {
            all = (0..d).collect();
            &all
        }
    };
    if cols.is_empty() {
        return Err(Error::InvalidArgument("column subset is empty".into()));
    }
    if let Some(&bad) = cols.iter().find(|&&c| c >= d) {
        return Err(Error::InvalidArgument(format!(
            "column index {bad} out of range for {d} features"
        )));
    }
    let a = g.group0.select(Axis(1), cols);
    let b = g.group1.select(Axis(1), cols);
    let entries = Array2::from_shape_fn((a.nrows(), b.nrows()), |(i, j)| {
        sq_dist(a.row(i), b.row(j))
    });
    CostMatrix::from_entries(entries)
}
