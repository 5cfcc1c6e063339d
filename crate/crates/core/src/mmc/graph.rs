use std::cmp::Ordering;

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_SCALE_DIGITS: u32 = 6;

/// Complete digraph given by an `n x n` arc-cost matrix. The diagonal is
/// forced to zero and never used.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    costs: Array2<f64>,
}

impl WeightedDigraph {
    pub fn new(mut costs: Array2<f64>) -> Result<Self> {
        let (r, c) = costs.dim();
        if r != c {
            return Err(Error::InvalidData(format!("cost matrix is {r}x{c}, not square")));
        }
        if r < 2 {
            return Err(Error::InvalidData("a digraph needs at least 2 vertices".into()));
        }
        for i in 0..r {
            costs[[i, i]] = 0.0;
        }
        if costs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("arc cost".into()));
        }
        Ok(WeightedDigraph { costs })
    }

    pub fn n(&self) -> usize {
        self.costs.nrows()
    }

    pub fn costs(&self) -> &Array2<f64> {
        &self.costs
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs[[i, j]]
    }

    /// Builds the result record for a closed vertex sequence.
    pub fn cycle_result(&self, closed: Vec<usize>, inst: &ScaledInstance) -> CycleResult {
        let cycle = canonical(closed);
        let length = cycle.len() - 1;
        let total: f64 = cycle.windows(2).map(|w| self.costs[[w[0], w[1]]]).sum();
        let scaled_total = cycle
            .windows(2)
            .map(|w| inst.int_costs[[w[0], w[1]]])
            .sum();
        CycleResult {
            cycle,
            total,
            length,
            mean: total / length as f64,
            scaled_total,
        }
    }
}

/// Rotates a closed cycle so that it starts at its smallest vertex.
fn canonical(mut closed: Vec<usize>) -> Vec<usize> {
    closed.pop();
    let start = (0..closed.len()).min_by_key(|&k| closed[k]).unwrap_or(0);
    closed.rotate_left(start);
    closed.push(closed[0]);
    closed
}

/// Integer version of a digraph: `int = round((c + shift) * 10^p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledInstance {
    pub int_costs: Array2<i64>,
    pub scale: f64,
    pub shift: f64,
    /// `1 + max |int_costs|`.
    pub c_bound: i64,
}

impl ScaledInstance {
    /// Rounding moves each arc by at most `0.5 * 10^-p`, so cycle means carry the
    /// same bound in original units.
    pub fn new(g: &WeightedDigraph, digits: u32) -> Result<Self> {
        if digits > 15 {
            return Err(Error::InvalidArgument(format!(
                "scale digits must be at most 15, got {digits}"
            )));
        }
        let n = g.n();
        let min = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| g.cost(i, j))
            .fold(f64::INFINITY, f64::min);
        let shift = -min.min(0.0);
        let scale = 10f64.powi(digits as i32);
        let mut int_costs = Array2::<i64>::zeros((n, n));
        let limit = 2f64.powi(53);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = ((g.cost(i, j) + shift) * scale).round();
                if v.abs() >= limit / (n as f64) {
                    return Err(Error::Overflow(format!(
                        "arc cost {} overflows the integer range at {digits} scale digits",
                        g.cost(i, j)
                    )));
                }
                int_costs[[i, j]] = v as i64;
            }
        }
        let c_bound = 1 + int_costs.iter().map(|v| v.abs()).max().unwrap_or(0);
        Ok(ScaledInstance {
            int_costs,
            scale,
            shift,
            c_bound,
        })
    }

    pub fn n(&self) -> usize {
        self.int_costs.nrows()
    }
}

/// A directed cycle and its mean cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleResult {
    /// Closed vertex sequence (first vertex repeated at the end), 0-based,
    /// rotated to start at its smallest vertex.
    pub cycle: Vec<usize>,
    /// Sum of the original arc costs.
    pub total: f64,
    pub length: usize,
    /// `total / length`.
    pub mean: f64,
    /// Sum of the scaled integer arc costs, used for exact comparisons.
    pub scaled_total: i64,
}

impl CycleResult {
    /// Compares exact scaled means.
    pub fn cmp_exact(&self, other: &CycleResult) -> Ordering {
        cmp_means(self.scaled_total, self.length, other.scaled_total, other.length)
    }
}

/// Compares `a / la` with `b / lb` exactly.
pub fn cmp_means(a: i64, la: usize, b: i64, lb: usize) -> Ordering {
    (i128::from(a) * lb as i128).cmp(&(i128::from(b) * la as i128))
}
