//! Minimum mean cycle on complete digraphs.
//!
//! [`karp_mcm`] is the exact dynamic-programming reference. [`hybrid_mcm`]
//! bisects on the cycle mean and decides each probe with an auction /
//! successive-shortest-path assignment solve on the node-split bipartite graph.

mod assignment;
mod graph;
mod hybrid;
mod karp;

pub use assignment::{
    auction_phase, node_split, ssp_phase, AssignmentInstance, AssignmentState,
};
pub use graph::{cmp_means, CycleResult, ScaledInstance, WeightedDigraph, DEFAULT_SCALE_DIGITS};
pub use hybrid::{hybrid_mcm, refine_exact, HybridConfig, HybridStats, IterationRecord};
pub use karp::{karp_mcm, karp_scaled};

use serde::{Deserialize, Serialize};

/// Which minimum-mean-cycle solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    #[default]
    Hybrid,
    Karp,
}

impl std::str::FromStr for Solver {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "hybrid" => Ok(Solver::Hybrid),
            "karp" => Ok(Solver::Karp),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown solver `{other}` (expected hybrid or karp)"
            ))),
        }
    }
}

/// Runs the chosen solver with `scale_digits` of fixed-point precision.
pub fn solve(g: &WeightedDigraph, solver: Solver, scale_digits: u32) -> crate::Result<CycleResult> {
    let inst = ScaledInstance::new(g, scale_digits)?;
    Ok(match solver {
        Solver::Karp => karp_scaled(g, &inst),
        Solver::Hybrid => {
            let cfg = HybridConfig {
                scale_digits,
                ..HybridConfig::default()
            };
            hybrid_mcm(g, &cfg)?.0
        }
    })
}
