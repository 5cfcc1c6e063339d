//! Wall-clock comparison of repairing new points by recomputing the transport
//! plan on the augmented sample against evaluating already fitted models.

use std::time::Instant;

use ndarray::{concatenate, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{gen_biased_gaussian, Dataset, SyntheticConfig};
use crate::error::{Error, Result};
use crate::interp::{fit_interpolation, repair_new, FitConfig};
use crate::ot::{total_repair, Weights};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub n0: usize,
    pub n1: usize,
    /// New points per group.
    pub k0: usize,
    pub k1: usize,
    /// Repetitions; medians are reported.
    pub reps: usize,
    pub seed: u64,
    pub weights: Weights,
    pub fit: FitConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n0: 200,
            n1: 200,
            k0: 40,
            k1: 40,
            reps: 5,
            seed: 0,
            weights: Weights::Empirical,
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub n0: usize,
    pub n1: usize,
    pub k0: usize,
    pub k1: usize,
    pub reps: usize,
    pub recompute_secs: f64,
    pub interpolate_secs: f64,
    /// `recompute_secs / interpolate_secs`; infinite when nothing was interpolated.
    pub speedup: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn stack(a: &Dataset, b: &Dataset) -> Result<Dataset> {
    let features = concatenate(Axis(0), &[a.features().view(), b.features().view()])
        .map_err(|e| Error::InvalidData(e.to_string()))?;
    let mut s = a.protected().to_vec();
    s.extend_from_slice(b.protected());
    Dataset::new(features, a.feature_names().to_vec(), s, None)
}

/// Samples offline and new points from the E2 generator and times both paths.
/// Model fitting belongs to the offline phase and is not timed.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchResult> {
    if cfg.reps == 0 {
        return Err(Error::InvalidArgument("reps must be positive".into()));
    }
    let offline = gen_biased_gaussian(&SyntheticConfig::e2(cfg.seed).with_sizes(cfg.n0, cfg.n1))?;
    let cols: Vec<usize> = (0..offline.n_features()).collect();
    let repaired = total_repair(&offline, &cols, cfg.weights)?;
    let m0 = fit_interpolation(&repaired.map0, &cfg.fit)?;
    let m1 = fit_interpolation(&repaired.map1, &cfg.fit)?;
    let fresh = if cfg.k0 + cfg.k1 > 0 {
        let gen = SyntheticConfig::e2(cfg.seed.wrapping_add(1)).with_sizes(cfg.k0, cfg.k1);
        Some(one_sided_ok(&gen)?)
    } else {
        None
    };
    let augmented = match &fresh {
        Some(f) => stack(&offline, f)?,
        None => offline.clone(),
    };

    let mut recompute = Vec::with_capacity(cfg.reps);
    let mut interpolate = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let t = Instant::now();
        std::hint::black_box(total_repair(&augmented, &cols, cfg.weights)?);
        recompute.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        if let Some(f) = &fresh {
            std::hint::black_box(repair_new(&m0, &m1, f, &cols)?);
        }
        interpolate.push(t.elapsed().as_secs_f64());
    }
    let recompute_secs = median(recompute);
    let interpolate_secs = median(interpolate);
    Ok(BenchResult {
        n0: cfg.n0,
        n1: cfg.n1,
        k0: cfg.k0,
        k1: cfg.k1,
        reps: cfg.reps,
        recompute_secs,
        interpolate_secs,
        speedup: recompute_secs / interpolate_secs,
    })
}

/// The generator insists on nonempty groups; a batch may be one-sided.
fn one_sided_ok(cfg: &SyntheticConfig) -> Result<Dataset> {
    if cfg.n0 > 0 && cfg.n1 > 0 {
        return gen_biased_gaussian(cfg);
    }
    let s = u8::from(cfg.n0 == 0);
    let mut other = cfg.clone();
    other.n0 = cfg.n0.max(1);
    other.n1 = cfg.n1.max(1);
    let full = gen_biased_gaussian(&other)?;
    let rows: Vec<usize> = (0..full.n_rows()).filter(|&i| full.protected()[i] != s).collect();
    Ok(full.select_rows(&rows))
}
