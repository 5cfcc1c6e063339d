use std::collections::HashMap;

use ndarray::Array2;

use super::cost::CostMatrix;

/// Optimal coupling between the uniform measures on the rows and the columns
/// of a cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    /// `n0 x n1`; rows sum to `1/n0`, columns to `1/n1`.
    pub gamma: Array2<f64>,
    /// Dual potentials with `u[i] + v[j] <= c[i][j]`, tight on the support.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `sum c[i][j] * gamma[i][j]`, the squared 2-Wasserstein distance.
    pub objective: f64,
}

impl TransportPlan {
    pub fn support_size(&self) -> usize {
        self.gamma.iter().filter(|&&g| g > 0.0).count()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.gamma.rows().into_iter().map(|r| r.sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        self.gamma.columns().into_iter().map(|c| c.sum()).collect()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Groups identical rows; returns (representative index per class, class of each row).
fn classes<'a, I>(rows: I) -> (Vec<usize>, Vec<usize>)
where
    I: Iterator<Item = Vec<u64>> + 'a,
{
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps = Vec::new();
    let mut class_of = Vec::new();
    for (i, key) in rows.enumerate() {
        let next = reps.len();
        let c = *seen.entry(key).or_insert(next);
        if c == next {
            reps.push(i);
        }
        class_of.push(c);
    }
    (reps, class_of)
}

/// Solves the uniform-marginal transportation problem exactly.
///
/// Masses are scaled to integers (`n1/g` units per row, `n0/g` per column with
/// `g = gcd(n0, n1)`) and routed by successive shortest paths with Dijkstra on
/// reduced costs. Zero-cost cycles left in the support are then cancelled so
/// the plan is a vertex of the transportation polytope. Identical rows (and
/// identical columns) are merged before solving and share their mass equally
/// afterwards, so duplicate points always receive identical plan rows; the
/// vertex property then holds for the merged problem.
pub fn solve_transport(c: &CostMatrix) -> TransportPlan {
    let (n0, n1) = c.shape();
    let cm = &c.entries;
    let (row_reps, row_class) = classes(
        cm.rows()
            .into_iter()
            .map(|r| r.iter().map(|x| x.to_bits()).collect()),
    );
    let (col_reps, col_class) = classes(
        cm.columns()
            .into_iter()
            .map(|r| r.iter().map(|x| x.to_bits()).collect()),
    );
    let m = row_reps.len();
    let k = col_reps.len();
    let mut row_mult = vec![0i64; m];
    row_class.iter().for_each(|&r| row_mult[r] += 1);
    let mut col_mult = vec![0i64; k];
    col_class.iter().for_each(|&c| col_mult[c] += 1);

    let g = gcd(n0 as u64, n1 as u64) as i64;
    let (a, b) = (n1 as i64 / g, n0 as i64 / g);
    let total = a * n0 as i64;
    let supply: Vec<i64> = row_mult.iter().map(|&mlt| mlt * a).collect();
    let demand: Vec<i64> = col_mult.iter().map(|&mlt| mlt * b).collect();
    let cost = Array2::from_shape_fn((m, k), |(i, j)| cm[[row_reps[i], col_reps[j]]]);

    let mut solver = Ssp::new(&cost, supply, demand);
    solver.run();
    let mut flow = solver.flow;
    cancel_cycles(&mut flow);

    let totalf = total as f64;
    let gamma = Array2::from_shape_fn((n0, n1), |(i, j)| {
        let (r, s) = (row_class[i], col_class[j]);
        flow[[r, s]] as f64 / (totalf * row_mult[r] as f64 * col_mult[s] as f64)
    });
    let u: Vec<f64> = row_class.iter().map(|&r| -solver.p_row[r]).collect();
    let v: Vec<f64> = col_class.iter().map(|&s| solver.p_col[s]).collect();
    let objective = gamma
        .iter()
        .zip(cm.iter())
        .map(|(g, c)| g * c)
        .sum();
    TransportPlan {
        gamma,
        u,
        v,
        objective,
    }
}

/// Successive shortest paths on the bipartite residual graph.
///
/// Node potentials `p` keep reduced lengths `c[i][j] + p_row[i] - p_col[j]`
/// nonnegative on forward arcs and zero on arcs carrying flow.
struct Ssp<'a> {
    cost: &'a Array2<f64>,
    supply: Vec<i64>,
    demand: Vec<i64>,
    flow: Array2<i64>,
    col_support: Vec<Vec<usize>>,
    p_row: Vec<f64>,
    p_col: Vec<f64>,
}

impl<'a> Ssp<'a> {
    fn new(cost: &'a Array2<f64>, supply: Vec<i64>, demand: Vec<i64>) -> Self {
        let (m, k) = cost.dim();
        let p_col = (0..k)
            .map(|j| cost.column(j).iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        Ssp {
            cost,
            supply,
            demand,
            flow: Array2::zeros((m, k)),
            col_support: vec![Vec::new(); k],
            p_row: vec![0.0; m],
            p_col,
        }
    }

    fn run(&mut self) {
        let (m, k) = self.cost.dim();
        let nn = m + k;
        let mut dist = vec![f64::INFINITY; nn];
        let mut done = vec![false; nn];
        let mut pred = vec![usize::MAX; nn];
        while self.supply.iter().any(|&s| s > 0) {
            dist.iter_mut().for_each(|d| *d = f64::INFINITY);
            done.iter_mut().for_each(|d| *d = false);
            pred.iter_mut().for_each(|p| *p = usize::MAX);
            for i in 0..m {
                if self.supply[i] > 0 {
                    dist[i] = 0.0;
                }
            }
            let target = loop {
                let mut best = usize::MAX;
                let mut bd = f64::INFINITY;
                for v in 0..nn {
                    if !done[v] && dist[v] < bd {
                        bd = dist[v];
                        best = v;
                    }
                }
                // The complete bipartite graph always has an augmenting path.
                assert!(best != usize::MAX, "transport: no augmenting path");
                done[best] = true;
                if best >= m {
                    let j = best - m;
                    if self.demand[j] > 0 {
                        break j;
                    }
                    for &i in &self.col_support[j] {
                        if done[i] {
                            continue;
                        }
                        let r = (self.p_col[j] - self.p_row[i] - self.cost[[i, j]]).max(0.0);
                        if bd + r < dist[i] {
                            dist[i] = bd + r;
                            pred[i] = best;
                        }
                    }
                } else {
                    let i = best;
                    for j in 0..k {
                        if done[m + j] {
                            continue;
                        }
                        let r = (self.cost[[i, j]] + self.p_row[i] - self.p_col[j]).max(0.0);
                        if bd + r < dist[m + j] {
                            dist[m + j] = bd + r;
                            pred[m + j] = i;
                        }
                    }
                }
            };
            let big_d = dist[m + target];
            for i in 0..m {
                self.p_row[i] += dist[i].min(big_d);
            }
            for j in 0..k {
                self.p_col[j] += dist[m + j].min(big_d);
            }
            // Walk back to the source row to find the bottleneck.
            let mut amount = self.demand[target];
            let mut v = m + target;
            let src = loop {
                let u = pred[v];
                if u == usize::MAX {
                    break v;
                }
                if u >= m {
                    amount = amount.min(self.flow[[v, u - m]]);
                }
                v = u;
            };
            amount = amount.min(self.supply[src]);
            debug_assert!(amount > 0);
            self.supply[src] -= amount;
            self.demand[target] -= amount;
            let mut v = m + target;
            while pred[v] != usize::MAX {
                let u = pred[v];
                if u < m {
                    self.add_flow(u, v - m, amount);
                } else {
                    self.add_flow(v, u - m, -amount);
                }
                v = u;
            }
        }
    }

    fn add_flow(&mut self, i: usize, j: usize, delta: i64) {
        let before = self.flow[[i, j]];
        let after = before + delta;
        self.flow[[i, j]] = after;
        if before == 0 && after > 0 {
            self.col_support[j].push(i);
        } else if before > 0 && after == 0 {
            self.col_support[j].retain(|&r| r != i);
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Removes cycles from the support of an integral flow by alternating pushes.
///
/// Every support arc has zero reduced cost, so each push preserves optimality.
fn cancel_cycles(flow: &mut Array2<i64>) {
    let (m, k) = flow.dim();
    let nn = m + k;
    'outer: loop {
        let mut parent: Vec<usize> = (0..nn).collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nn];
        for i in 0..m {
            for j in 0..k {
                if flow[[i, j]] == 0 {
                    continue;
                }
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, m + j));
                if ri != rj {
                    parent[ri] = rj;
                    adj[i].push(m + j);
                    adj[m + j].push(i);
                    continue;
                }
                // Tree path from column node m + j back to row i closes a cycle.
                let path = tree_path(&adj, m + j, i);
                // Cycle: i -> j (+), then alternating along the path.
                let mut arcs: Vec<(usize, usize, bool)> = vec![(i, j, true)];
                for (step, w) in path.windows(2).enumerate() {
                    let (a, b) = (w[0], w[1]);
                    let (r, c) = if a < m { (a, b - m) } else { (b, a - m) };
                    arcs.push((r, c, step % 2 == 1));
                }
                let theta = arcs
                    .iter()
                    .filter(|a| !a.2)
                    .map(|&(r, c, _)| flow[[r, c]])
                    .min()
                    .unwrap();
                for &(r, c, plus) in &arcs {
                    flow[[r, c]] += if plus { theta } else { -theta };
                }
                continue 'outer;
            }
        }
        break;
    }
}

fn tree_path(adj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut prev = vec![usize::MAX; adj.len()];
    let mut stack = vec![from];
    prev[from] = from;
    while let Some(v) = stack.pop() {
        if v == to {
            break;
        }
        for &w in &adj[v] {
            if prev[w] == usize::MAX {
                prev[w] = v;
                stack.push(w);
            }
        }
    }
    let mut path = vec![to];
    let mut v = to;
    while v != from {
        v = prev[v];
        path.push(v);
    }
    path.reverse();
    path
}
