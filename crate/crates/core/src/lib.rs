//! Optimal-transport repair of group-biased tabular data and its cyclically
//! monotone extension to out-of-sample points.
//!
//! The pipeline is: [`ot::total_repair`] maps each protected group onto the
//! empirical Wasserstein barycenter, [`interp::fit_interpolation`] turns the
//! resulting anchor pairs into a Lipschitz, cyclically monotone map via a
//! minimum-mean-cycle computation ([`mmc`]), and [`interp::repair_new`] applies
//! that map to new rows. [`fairness`] measures what the repair buys.

pub mod data;
pub mod error;
pub mod fairness;
pub mod interp;
pub mod mmc;
pub mod ot;
pub mod timing;

pub use ndarray;

pub use data::{Dataset, FoldPlan, GroupedData, SyntheticConfig};
pub use error::{Error, ErrorKind, Result};
pub use fairness::{Classifier, DIEstimate, EvalReport};
pub use interp::{EvalOption, InterpolationModel, SgdConfig};
pub use mmc::{CycleResult, WeightedDigraph};
pub use ot::{CostMatrix, RepairMap, TransportPlan};
