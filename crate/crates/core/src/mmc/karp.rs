use std::cmp::Ordering;

use super::graph::{cmp_means, CycleResult, ScaledInstance, WeightedDigraph, DEFAULT_SCALE_DIGITS};

/// Karp's minimum mean cycle at the default scaling precision.
pub fn karp_mcm(g: &WeightedDigraph) -> CycleResult {
    let inst = ScaledInstance::new(g, DEFAULT_SCALE_DIGITS)
        .expect("arc costs exceed the default fixed-point range");
    karp_scaled(g, &inst)
}

/// Karp's algorithm on the integer costs of `inst`.
///
/// `D_k(v)` is the cheapest walk of exactly `k` arcs ending at `v` from a
/// virtual source joined to every vertex at cost 0. The optimum is
/// `min_v max_k (D_n(v) - D_k(v)) / (n - k)`, evaluated with exact integer
/// cross-multiplication. The cycle is read off the predecessor walk behind
/// `D_n(v*)`.
pub fn karp_scaled(g: &WeightedDigraph, inst: &ScaledInstance) -> CycleResult {
    let n = inst.n();
    let c = &inst.int_costs;
    let mut d = vec![0i64; (n + 1) * n];
    let mut pred = vec![0u32; (n + 1) * n];
    for k in 1..=n {
        let (prev, cur) = d.split_at_mut(k * n);
        let prev = &prev[(k - 1) * n..];
        let cur = &mut cur[..n];
        for v in 0..n {
            let mut best = i64::MAX;
            let mut arg = 0;
            for u in 0..n {
                if u == v {
                    continue;
                }
                let cand = prev[u] + c[[u, v]];
                if cand < best {
                    best = cand;
                    arg = u;
                }
            }
            cur[v] = best;
            pred[k * n + v] = arg as u32;
        }
    }
    // For each v the worst ratio over k; then the best v.
    let mut best_v = 0;
    let mut best_num = 0i64;
    let mut best_den = 1usize;
    for v in 0..n {
        let dn = d[n * n + v];
        let mut num = dn - d[v];
        let mut den = n;
        for k in 1..n {
            let cand_num = dn - d[k * n + v];
            let cand_den = n - k;
            if cmp_means(cand_num, cand_den, num, den) == Ordering::Greater {
                num = cand_num;
                den = cand_den;
            }
        }
        if v == 0 || cmp_means(num, den, best_num, best_den) == Ordering::Less {
            best_v = v;
            best_num = num;
            best_den = den;
        }
    }
    // Walk v_n = v*, v_{k-1} = pred[k][v_k].
    let mut walk = vec![0usize; n + 1];
    walk[n] = best_v;
    for k in (1..=n).rev() {
        walk[k - 1] = pred[k * n + walk[k]] as usize;
    }
    let mut best: Option<CycleResult> = None;
    let mut last_seen = vec![usize::MAX; n];
    for (pos, &v) in walk.iter().enumerate() {
        let start = last_seen[v];
        last_seen[v] = pos;
        if start == usize::MAX {
            continue;
        }
        let seg = &walk[start..=pos];
        let mut seen = vec![false; n];
        if seg[..seg.len() - 1].iter().any(|&x| std::mem::replace(&mut seen[x], true)) {
            continue;
        }
        let cand = g.cycle_result(seg.to_vec(), inst);
        if best.as_ref().is_none_or(|b| cand.cmp_exact(b) == Ordering::Less) {
            best = Some(cand);
        }
    }
    let best = best.expect("a walk of n arcs on n vertices repeats a vertex");
    debug_assert_eq!(
        cmp_means(best.scaled_total, best.length, best_num, best_den),
        Ordering::Equal
    );
    best
}
