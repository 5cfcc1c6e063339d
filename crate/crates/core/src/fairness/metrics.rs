use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Ratio of favorable-outcome rates, unprivileged over privileged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DIEstimate {
    pub di: f64,
    pub p0: f64,
    pub p1: f64,
    pub n0: usize,
    pub n1: usize,
}

impl DIEstimate {
    /// From favorable counts `f_s` out of `n_s` per group.
    pub fn from_counts(f0: usize, n0: usize, f1: usize, n1: usize) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::EmptyGroup(0));
        }
        if n1 == 0 {
            return Err(Error::EmptyGroup(1));
        }
        if f0 > n0 || f1 > n1 {
            return Err(Error::InvalidArgument("favorable count exceeds group size".into()));
        }
        if f1 == 0 {
            return Err(Error::UndefinedDisparateImpact);
        }
        let p0 = f0 as f64 / n0 as f64;
        let p1 = f1 as f64 / n1 as f64;
        Ok(DIEstimate {
            di: p0 / p1,
            p0,
            p1,
            n0,
            n1,
        })
    }
}

/// `P(out = 1 | S = 0) / P(out = 1 | S = 1)`. Works for labels and predictions alike.
pub fn disparate_impact(outcome: &[u8], protected: &[u8]) -> Result<DIEstimate> {
    if outcome.len() != protected.len() {
        return Err(Error::InvalidArgument(format!(
            "outcome has {} entries, protected {}",
            outcome.len(),
            protected.len()
        )));
    }
    let mut n = [0usize; 2];
    let mut f = [0usize; 2];
    for (&o, &s) in outcome.iter().zip(protected) {
        let s = usize::from(s.min(1));
        n[s] += 1;
        f[s] += usize::from(o == 1);
    }
    DIEstimate::from_counts(f[0], n[0], f[1], n[1])
}

/// Delta-method interval on the ratio:
/// `di +- z * di * sqrt((1 - p0) / (n0 p0) + (1 - p1) / (n1 p1))`.
pub fn di_confidence_interval(e: &DIEstimate, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {alpha}")));
    }
    for p in [e.p0, e.p1] {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "a group rate of {p} gives a degenerate interval"
            )));
        }
    }
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let se = e.di
        * ((1.0 - e.p0) / (e.n0 as f64 * e.p0) + (1.0 - e.p1) / (e.n1 as f64 * e.p1)).sqrt();
    Ok((e.di - z * se, e.di + z * se))
}

pub fn accuracy(pred: &[u8], label: &[u8]) -> Result<f64> {
    if pred.len() != label.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} labels",
            pred.len(),
            label.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidArgument("accuracy of an empty set".into()));
    }
    let hits = pred.iter().zip(label).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}
