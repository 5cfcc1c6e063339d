use std::collections::VecDeque;

use ndarray::Array2;

use super::graph::ScaledInstance;

/// Bipartite assignment instance on persons `N1` and objects `N2`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentInstance {
    /// `costs[[i, j]]` is the cost of arc `(i, j')`.
    pub costs: Array2<f64>,
}

impl AssignmentInstance {
    pub fn n(&self) -> usize {
        self.costs.nrows()
    }

    pub fn matching_cost(&self, matching: &[usize]) -> f64 {
        matching
            .iter()
            .enumerate()
            .map(|(i, &j)| self.costs[[i, j]])
            .sum()
    }
}

/// Splits every vertex `i` into a person `i` and an object `i'`; arc `(i, j')`
/// carries the integer cost of `i -> j` and diagonal arcs carry `delta`.
pub fn node_split(s: &ScaledInstance, delta: f64) -> AssignmentInstance {
    let n = s.n();
    let costs = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            delta
        } else {
            s.int_costs[[i, j]] as f64
        }
    });
    AssignmentInstance { costs }
}

/// Potentials, partial matching and bisection bracket.
///
/// Reduced costs are `c[i][j] - pi_row[i] + pi_col[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentState {
    pub pi_row: Vec<f64>,
    pub pi_col: Vec<f64>,
    pub row_match: Vec<Option<usize>>,
    pub col_owner: Vec<Option<usize>>,
    pub delta: f64,
    pub eps: f64,
    pub lb: f64,
    pub ub: f64,
}

impl AssignmentState {
    pub fn new(pi_row: Vec<f64>, pi_col: Vec<f64>, eps: f64) -> Self {
        let n = pi_row.len();
        AssignmentState {
            pi_row,
            pi_col,
            row_match: vec![None; n],
            col_owner: vec![None; n],
            delta: 0.0,
            eps,
            lb: f64::NEG_INFINITY,
            ub: f64::INFINITY,
        }
    }

    pub fn n(&self) -> usize {
        self.pi_row.len()
    }

    pub fn reduced(&self, inst: &AssignmentInstance, i: usize, j: usize) -> f64 {
        inst.costs[[i, j]] - self.pi_row[i] + self.pi_col[j]
    }

    pub fn reset_matching(&mut self) {
        self.row_match.iter_mut().for_each(|m| *m = None);
        self.col_owner.iter_mut().for_each(|m| *m = None);
    }

    fn assign(&mut self, i: usize, j: usize) {
        if let Some(old) = self.row_match[i] {
            self.col_owner[old] = None;
        }
        if let Some(o) = self.col_owner[j] {
            self.row_match[o] = None;
        }
        self.row_match[i] = Some(j);
        self.col_owner[j] = Some(i);
    }

    pub fn is_complete(&self) -> bool {
        self.row_match.iter().all(Option::is_some)
    }

    /// Person-to-object map. Panics if the matching is partial.
    pub fn matching(&self) -> Vec<usize> {
        self.row_match
            .iter()
            .map(|m| m.expect("matching is incomplete"))
            .collect()
    }

    /// True when every person holds its own diagonal object.
    pub fn is_uniform(&self) -> bool {
        self.row_match
            .iter()
            .enumerate()
            .all(|(i, m)| *m == Some(i))
    }
}

fn argmin_reduced(state: &AssignmentState, inst: &AssignmentInstance, i: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_r = f64::INFINITY;
    for j in 0..state.n() {
        let r = state.reduced(inst, i, j);
        if r < best_r {
            best_r = r;
            best = j;
        }
    }
    (best, best_r)
}

/// Auction phase with a per-person relabel budget `l`.
///
/// All object potentials first rise by `k * eps`. Then each unassigned,
/// still-eligible person takes its cheapest arc (lowest index among ties) if
/// that arc is admissible (reduced cost `<= 0`), raising the object's
/// potential by `eps` and evicting the previous holder; otherwise its own
/// potential rises by `eps`. A person that has been relabeled `l` times is
/// left for [`ssp_phase`]. Taking the cheapest arc keeps every matched arc
/// within `eps` of its person's best arc.
pub fn auction_phase(state: &mut AssignmentState, inst: &AssignmentInstance, k: u32, l: usize) {
    let n = state.n();
    let eps = state.eps;
    state.pi_col.iter_mut().for_each(|p| *p += f64::from(k) * eps);
    let mut relabels = vec![0usize; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| state.row_match[i].is_none()).collect();
    while let Some(i) = queue.pop_front() {
        let (j, r) = argmin_reduced(state, inst, i);
        if r <= 0.0 {
            let evicted = state.col_owner[j];
            state.pi_col[j] += eps;
            state.assign(i, j);
            if let Some(o) = evicted {
                if relabels[o] < l {
                    queue.push_back(o);
                }
            }
        } else {
            state.pi_row[i] += eps;
            relabels[i] += 1;
            if relabels[i] < l {
                queue.push_front(i);
            }
        }
    }
}

/// Completes the matching by successive shortest paths.
///
/// Person potentials are first shifted so each person's cheapest reduced cost
/// is zero. Arc lengths in units of `eps` are then `max(0, r / eps)` for
/// unmatched arcs `i -> j'` and `max(0, 1 - r / eps)` for matched arcs
/// `j' -> i`. Each search starts at the lowest-index free person and stops
/// when a free object is permanently labeled at distance `D`; every labeled
/// node `v` gets `pi(v) += eps * (D - w(v))` and the path is augmented. All
/// reduced costs stay `>= 0` and matched ones `<= eps`, so the final matching
/// costs at most `n * eps` more than the optimum.
pub fn ssp_phase(state: &mut AssignmentState, inst: &AssignmentInstance) {
    let n = state.n();
    let eps = state.eps;
    for i in 0..n {
        let (_, r) = argmin_reduced(state, inst, i);
        state.pi_row[i] += r;
    }
    let mut dist = vec![f64::INFINITY; 2 * n];
    let mut done = vec![false; 2 * n];
    let mut pred = vec![usize::MAX; 2 * n];
    while let Some(src) = (0..n).find(|&i| state.row_match[i].is_none()) {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        done.iter_mut().for_each(|d| *d = false);
        pred.iter_mut().for_each(|p| *p = usize::MAX);
        dist[src] = 0.0;
        let target = loop {
            let mut v = usize::MAX;
            let mut dv = f64::INFINITY;
            for (u, &du) in dist.iter().enumerate() {
                if !done[u] && du < dv {
                    dv = du;
                    v = u;
                }
            }
            assert!(v != usize::MAX, "assignment: no augmenting path");
            done[v] = true;
            if v < n {
                let i = v;
                for j in 0..n {
                    if done[n + j] || state.row_match[i] == Some(j) {
                        continue;
                    }
                    let len = (state.reduced(inst, i, j) / eps).max(0.0);
                    if dv + len < dist[n + j] {
                        dist[n + j] = dv + len;
                        pred[n + j] = i;
                    }
                }
            } else {
                let j = v - n;
                match state.col_owner[j] {
                    None => break j,
                    Some(o) => {
                        if !done[o] {
                            let len = (1.0 - state.reduced(inst, o, j) / eps).max(0.0);
                            if dv + len < dist[o] {
                                dist[o] = dv + len;
                                pred[o] = v;
                            }
                        }
                    }
                }
            }
        };
        let big_d = dist[n + target];
        for i in 0..n {
            if done[i] {
                state.pi_row[i] += eps * (big_d - dist[i]);
            }
        }
        for j in 0..n {
            if done[n + j] {
                state.pi_col[j] += eps * (big_d - dist[n + j]);
            }
        }
        // Augment: walk back object <- person <- object ... <- src.
        let mut obj = target;
        loop {
            let person = pred[n + obj];
            let next = state.row_match[person];
            state.row_match[person] = Some(obj);
            state.col_owner[obj] = Some(person);
            match next {
                Some(prev_obj) if person != src => obj = prev_obj,
                _ => break,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mmc::graph::WeightedDigraph;
    use ndarray::array;

    fn fresh(n: usize, eps: f64) -> AssignmentState {
        AssignmentState::new(vec![0.0; n], vec![0.0; n], eps)
    }

    #[test]
    fn node_split_two_vertices() {
        let g = WeightedDigraph::new(array![[0.0, 2.0], [3.0, 0.0]]).unwrap();
        let s = ScaledInstance::new(&g, 0).unwrap();
        let a = node_split(&s, -7.0);
        assert_eq!(a.costs, array![[-7.0, 2.0], [3.0, -7.0]]);
    }

    #[test]
    fn auction_with_full_matching_only_bumps_prices() {
        let inst = AssignmentInstance {
            costs: array![[0.0, 1.0], [1.0, 0.0]],
        };
        let mut st = fresh(2, 0.5);
        st.assign(0, 0);
        st.assign(1, 1);
        auction_phase(&mut st, &inst, 3, 8);
        assert_eq!(st.pi_col, vec![1.5, 1.5]);
        assert_eq!(st.pi_row, vec![0.0, 0.0]);
        assert!(st.is_uniform());
    }

    #[test]
    fn auction_finds_dominant_matching() {
        let inst = AssignmentInstance {
            costs: array![[10.0, 0.0], [0.0, 10.0]],
        };
        let mut st = fresh(2, 1.0);
        auction_phase(&mut st, &inst, 3, 8);
        assert_eq!(st.row_match, vec![Some(1), Some(0)]);
    }

    #[test]
    fn ssp_single_free_person_at_zero_cost() {
        let inst = AssignmentInstance {
            costs: array![[0.0, 5.0], [5.0, 0.0]],
        };
        let mut st = fresh(2, 1.0);
        st.assign(0, 0);
        ssp_phase(&mut st, &inst);
        assert_eq!(st.matching(), vec![0, 1]);
        assert_eq!(st.pi_row[1], 0.0);
    }

    #[test]
    fn ssp_noop_when_complete() {
        let inst = AssignmentInstance {
            costs: array![[3.0, 1.0], [2.0, 4.0]],
        };
        let mut st = fresh(2, 1.0);
        st.assign(0, 1);
        st.assign(1, 0);
        ssp_phase(&mut st, &inst);
        assert_eq!(st.matching(), vec![1, 0]);
    }

    #[test]
    fn ssp_alone_is_eps_optimal() {
        // 3x3 with the optimum off the diagonal: 1 + 2 + 1 = 4.
        let inst = AssignmentInstance {
            costs: array![[9.0, 1.0, 9.0], [9.0, 9.0, 2.0], [1.0, 9.0, 9.0]],
        };
        let mut st = fresh(3, 0.1);
        ssp_phase(&mut st, &inst);
        assert_eq!(st.matching(), vec![1, 2, 0]);
    }
}
