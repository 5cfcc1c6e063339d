//! The extended repair map for out-of-sample points.
//!
//! A fitted [`InterpolationModel`] holds anchor pairs `(x_i, x~_i)` and
//! potentials `psi` such that `phi(u) = max_j <u, s_j> - psi_j` has anchor `i`
//! as its strict maximizer at `x_i` with margin `2 eps0`, where `s_j` are the
//! anchor images in the model's working frame. The map is either the
//! piecewise-constant gradient of `phi` ([`EvalOption::Step1`]) or the
//! gradient of its Moreau envelope with parameter `eps0`
//! ([`EvalOption::Regularized`]), which is Lipschitz and still interpolates
//! the anchors.

mod eval;
mod model;
mod persist;
pub(crate) mod prox;

pub use eval::repair_new;
pub use model::{
    build_interp_graph, fit_interpolation, potentials_from_mcm, EvalOption, FitConfig, Frame,
    InterpolationModel, Step1Interval,
};
pub use persist::{load_model, read_model, save_model, write_model, MODEL_VERSION};
pub use prox::{exact_prox_1d, moreau_envelope_1d, prox_sgd, ProxResult, SgdConfig, StopReason};
