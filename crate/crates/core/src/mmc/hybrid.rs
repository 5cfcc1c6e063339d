use std::cmp::Ordering;

use super::assignment::{auction_phase, node_split, ssp_phase, AssignmentState};
use super::graph::{CycleResult, ScaledInstance, WeightedDigraph, DEFAULT_SCALE_DIGITS};
use super::karp::karp_scaled;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct HybridConfig {
    pub scale_digits: u32,
    /// Warm-start multiplier: object potentials rise by `k * eps` per probe.
    pub k: u32,
    /// Keep each probe's matching in the trace.
    pub record_matchings: bool,
    /// Safety cap on bisection steps.
    pub max_iterations: usize,
}

impl Default for HybridConfig {
    fn default() -> Self {
        HybridConfig {
            scale_digits: DEFAULT_SCALE_DIGITS,
            k: 3,
            record_matchings: false,
            max_iterations: 10_000,
        }
    }
}

/// One bisection probe, on the scaled integer scale.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub lb: f64,
    pub ub: f64,
    pub delta: f64,
    pub eps: f64,
    pub uniform: bool,
    pub matching: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HybridStats {
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    /// No probe produced a non-uniform matching and Karp supplied the answer.
    pub fallback: bool,
    /// The exact check after bisection found a strictly better cycle.
    pub refined: bool,
}

/// Minimum mean cycle by bisection over assignment probes.
///
/// Costs are shifted and scaled to nonnegative integers. The bracket starts at
/// `[-C_bound, C_bound]`; each probe sets `delta = (UB + LB) / 2`,
/// `eps = (UB - LB) / 8`, solves the node-split assignment with diagonal cost
/// `delta` (auction with budget `L = 2 (k + 1) ceil(sqrt n)`, then successive
/// shortest paths) and moves `LB` to `delta - 2 eps` if the matching is the
/// identity, `UB` to `delta + 2 eps` otherwise. Both updates keep the optimum
/// inside the bracket, which shrinks by a factor `3/4` per probe; the loop
/// runs until `UB - LB < 1 / n^2`, at which point the best cycle seen in a
/// non-identity matching has the optimal mean. A final exact integer
/// Bellman-Ford pass certifies that no cycle beats it.
pub fn hybrid_mcm(g: &WeightedDigraph, cfg: &HybridConfig) -> Result<(CycleResult, HybridStats)> {
    let inst = ScaledInstance::new(g, cfg.scale_digits)?;
    let n = inst.n();
    let cb = inst.c_bound as f64;
    let tol = 1.0 / (n * n) as f64;
    let budget = 2 * (cfg.k as usize + 1) * (n as f64).sqrt().ceil() as usize;
    let mut state = AssignmentState::new(vec![-cb / 2.0; n], vec![0.0; n], 0.0);
    state.lb = -cb;
    state.ub = cb;
    let mut stats = HybridStats::default();
    let mut best: Option<CycleResult> = None;
    while state.ub - state.lb >= tol && stats.iterations < cfg.max_iterations {
        state.delta = 0.5 * (state.ub + state.lb);
        state.eps = (state.ub - state.lb) / 8.0;
        let ainst = node_split(&inst, state.delta);
        state.reset_matching();
        auction_phase(&mut state, &ainst, cfg.k, budget);
        ssp_phase(&mut state, &ainst);
        let uniform = state.is_uniform();
        let matching = state.matching();
        stats.trace.push(IterationRecord {
            lb: state.lb,
            ub: state.ub,
            delta: state.delta,
            eps: state.eps,
            uniform,
            matching: cfg.record_matchings.then(|| matching.clone()),
        });
        stats.iterations += 1;
        if uniform {
            state.lb = state.delta - 2.0 * state.eps;
        } else {
            state.ub = state.delta + 2.0 * state.eps;
            for cand in permutation_cycles(&matching) {
                let cand = g.cycle_result(cand, &inst);
                if best.as_ref().is_none_or(|b| cand.cmp_exact(b) == Ordering::Less) {
                    best = Some(cand);
                }
            }
        }
    }
    let best = match best {
        Some(b) => b,
        None => {
            log::warn!("hybrid solver never produced a non-uniform matching; using Karp");
            stats.fallback = true;
            karp_scaled(g, &inst)
        }
    };
    let (best, refined) = refine_exact(g, &inst, best);
    if refined {
        log::debug!("exact check improved the bisection result");
    }
    stats.refined = refined;
    Ok((best, stats))
}

/// Non-trivial cycles of a permutation, each closed.
fn permutation_cycles(perm: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; perm.len()];
    let mut out = Vec::new();
    for s in 0..perm.len() {
        if seen[s] || perm[s] == s {
            continue;
        }
        let mut cyc = vec![s];
        seen[s] = true;
        let mut v = perm[s];
        while v != s {
            seen[v] = true;
            cyc.push(v);
            v = perm[v];
        }
        cyc.push(s);
        out.push(cyc);
    }
    out
}

/// Replaces `cand` by a strictly better cycle while one exists.
///
/// With `cand` of mean `T / L`, a negative cycle under the integer weights
/// `L * c - T` is exactly a cycle of smaller mean; Bellman-Ford from a virtual
/// source finds one or proves there is none. Returns whether `cand` changed.
pub fn refine_exact(
    g: &WeightedDigraph,
    inst: &ScaledInstance,
    mut cand: CycleResult,
) -> (CycleResult, bool) {
    let n = inst.n();
    let mut changed = false;
    loop {
        let (t, l) = (i128::from(cand.scaled_total), cand.length as i128);
        let w = |i: usize, j: usize| l * i128::from(inst.int_costs[[i, j]]) - t;
        let mut dist = vec![0i128; n];
        let mut pred = vec![usize::MAX; n];
        let mut last = None;
        for _ in 0..n {
            last = None;
            for u in 0..n {
                for v in 0..n {
                    if u != v && dist[u] + w(u, v) < dist[v] {
                        dist[v] = dist[u] + w(u, v);
                        pred[v] = u;
                        last = Some(v);
                    }
                }
            }
            if last.is_none() {
                break;
            }
        }
        let Some(mut x) = last else {
            return (cand, changed);
        };
        for _ in 0..n {
            x = pred[x];
        }
        let mut cyc = vec![x];
        let mut v = pred[x];
        while v != x {
            cyc.push(v);
            v = pred[v];
        }
        cyc.push(x);
        cyc.reverse();
        let better = g.cycle_result(cyc, inst);
        debug_assert_eq!(better.cmp_exact(&cand), Ordering::Less);
        cand = better;
        changed = true;
    }
}
