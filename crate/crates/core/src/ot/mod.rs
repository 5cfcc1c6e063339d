//! Discrete optimal transport between the two group samples and the
//! barycentric repair built on top of it.

mod cost;
mod repair;
mod transport;

pub use cost::{cost_matrix, CostMatrix};
pub use repair::{barycentric_pairs, total_repair, RepairMap, TotalRepair, Weights};
pub use transport::{solve_transport, TransportPlan};
