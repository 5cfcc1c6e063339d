use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::cost::cost_matrix;
use super::transport::{solve_transport, TransportPlan};
use crate::data::{split_by_group, Dataset, GroupedData};
use crate::error::{Error, Result};

/// Barycenter weights `(pi0, pi1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    /// Group proportions `n_s / n`.
    #[default]
    Empirical,
    Half,
    /// Explicit `pi0`; `pi1 = 1 - pi0`.
    Custom(f64),
}

impl Weights {
    pub fn resolve(self, n0: usize, n1: usize) -> Result<(f64, f64)> {
        let pi0 = match self {
            Weights::Empirical => n0 as f64 / (n0 + n1) as f64,
            Weights::Half => 0.5,
            Weights::Custom(p) => p,
        };
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::InvalidArgument(format!(
                "barycenter weight {pi0} is outside [0, 1]"
            )));
        }
        Ok((pi0, 1.0 - pi0))
    }
}

/// Anchor pairs `(x_i, x~_i)` of one group's discrete repair map.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairMap {
    pub group: u8,
    pub anchors_src: Array2<f64>,
    pub anchors_dst: Array2<f64>,
    pub weights: (f64, f64),
}

impl RepairMap {
    pub fn new(
        group: u8,
        anchors_src: Array2<f64>,
        anchors_dst: Array2<f64>,
        weights: (f64, f64),
    ) -> Result<Self> {
        if anchors_src.dim() != anchors_dst.dim() {
            return Err(Error::InvalidData(format!(
                "anchor sources {:?} and images {:?} differ in shape",
                anchors_src.dim(),
                anchors_dst.dim()
            )));
        }
        if group > 1 {
            return Err(Error::InvalidArgument(format!("group must be 0 or 1, got {group}")));
        }
        Ok(RepairMap {
            group,
            anchors_src,
            anchors_dst,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.anchors_src.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.anchors_src.ncols()
    }
}

/// Projects each point onto the barycenter through the plan.
///
/// For group 0, `x~_i = pi0 x_i + pi1 n0 sum_j gamma_ij y_j`, the conditional
/// mean of the barycenter atoms `pi0 x_i + pi1 y_j` given `x_i`. Group 1 is
/// symmetric over columns.
pub fn barycentric_pairs(
    plan: &TransportPlan,
    g: &GroupedData,
    weights: (f64, f64),
) -> Result<(RepairMap, RepairMap)> {
    let (n0, n1) = g.sizes();
    if plan.gamma.dim() != (n0, n1) {
        return Err(Error::InvalidArgument(format!(
            "plan shape {:?} does not match group sizes ({n0}, {n1})",
            plan.gamma.dim()
        )));
    }
    let (pi0, pi1) = weights;
    let mapped1 = plan.gamma.dot(&g.group1) * (n0 as f64);
    let mapped0 = plan.gamma.t().dot(&g.group0) * (n1 as f64);
    let dst0 = &g.group0 * pi0 + &mapped1 * pi1;
    let dst1 = &mapped0 * pi0 + &g.group1 * pi1;
    Ok((
        RepairMap::new(0, g.group0.clone(), dst0, weights)?,
        RepairMap::new(1, g.group1.clone(), dst1, weights)?,
    ))
}

/// Result of [`total_repair`].
#[derive(Debug, Clone)]
pub struct TotalRepair {
    pub repaired: Dataset,
    pub map0: RepairMap,
    pub map1: RepairMap,
    pub plan: TransportPlan,
}

/// Replaces the feature columns `cols` of every row by its barycentric image.
/// Other columns are left untouched.
pub fn total_repair(ds: &Dataset, cols: &[usize], weights: Weights) -> Result<TotalRepair> {
    if cols.is_empty() {
        return Err(Error::InvalidArgument("no columns selected for repair".into()));
    }
    let full = split_by_group(ds)?;
    let cost = cost_matrix(&full, Some(cols))?;
    let sub = GroupedData {
        group0: full.group0.select(Axis(1), cols),
        group1: full.group1.select(Axis(1), cols),
        row_index0: full.row_index0.clone(),
        row_index1: full.row_index1.clone(),
    };
    let (n0, n1) = sub.sizes();
    let w = weights.resolve(n0, n1)?;
    let plan = solve_transport(&cost);
    let (map0, map1) = barycentric_pairs(&plan, &sub, w)?;
    let mut features = ds.features().clone();
    for (map, rows) in [(&map0, &sub.row_index0), (&map1, &sub.row_index1)] {
        for (k, &r) in rows.iter().enumerate() {
            for (c, &col) in cols.iter().enumerate() {
                features[[r, col]] = map.anchors_dst[[k, c]];
            }
        }
    }
    Ok(TotalRepair {
        repaired: ds.with_features(features)?,
        map0,
        map1,
        plan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_biased_gaussian, SyntheticConfig};
    use crate::ot::CostMatrix;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds_from(x0: &Array2<f64>, x1: &Array2<f64>) -> Dataset {
        let features = ndarray::concatenate(Axis(0), &[x0.view(), x1.view()]).unwrap();
        let d = features.ncols();
        let mut s = vec![0u8; x0.nrows()];
        s.extend(vec![1u8; x1.nrows()]);
        Dataset::new(features, (0..d).map(|j| format!("x{j}")).collect(), s, None).unwrap()
    }

    #[test]
    fn identical_groups_are_fixed_points() {
        let x = array![[0.0, 1.0], [2.0, -1.0], [5.0, 3.0]];
        let out = total_repair(&ds_from(&x, &x), &[0, 1], Weights::Half).unwrap();
        assert_eq!(out.map0.anchors_dst, x);
        assert_eq!(out.map1.anchors_dst, x);
    }

    #[test]
    fn sorted_1d_midpoints() {
        let x0 = array![[0.0], [1.0], [4.0]];
        let x1 = array![[2.0], [3.0], [10.0]];
        let out = total_repair(&ds_from(&x0, &x1), &[0], Weights::Half).unwrap();
        assert_eq!(out.map0.anchors_dst, array![[1.0], [2.0], [7.0]]);
        assert_eq!(out.map1.anchors_dst, array![[1.0], [2.0], [7.0]]);
    }

    #[test]
    fn weighted_average_from_explicit_plan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x0 = Array2::from_shape_fn((2, 2), |_| rng.random_range(-2.0..2.0));
        let x1 = Array2::from_shape_fn((3, 2), |_| rng.random_range(-2.0..2.0));
        let ds = ds_from(&x0, &x1);
        let out = total_repair(&ds, &[0, 1], Weights::Empirical).unwrap();
        let gamma = &out.plan.gamma;
        let (pi0, pi1) = (0.4, 0.6);
        for i in 0..2 {
            let mass: f64 = gamma.row(i).sum();
            for c in 0..2 {
                let mut acc = 0.0;
                for j in 0..3 {
                    acc += gamma[[i, j]] * (pi0 * x0[[i, c]] + pi1 * x1[[j, c]]);
                }
                assert!((out.map0.anchors_dst[[i, c]] - acc / mass).abs() < 1e-12);
            }
        }
        for j in 0..3 {
            let mass: f64 = gamma.column(j).sum();
            for c in 0..2 {
                let mut acc = 0.0;
                for i in 0..2 {
                    acc += gamma[[i, j]] * (pi0 * x0[[i, c]] + pi1 * x1[[j, c]]);
                }
                assert!((out.map1.anchors_dst[[j, c]] - acc / mass).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn untouched_columns_and_errors() {
        let ds = gen_biased_gaussian(&SyntheticConfig::e1a(2).with_sizes(15, 20)).unwrap();
        let out = total_repair(&ds, &[1], Weights::Empirical).unwrap();
        for j in [0, 2, 3, 4] {
            assert_eq!(out.repaired.features().column(j), ds.features().column(j));
        }
        assert!(total_repair(&ds, &[], Weights::Empirical).is_err());
        assert!(total_repair(&ds, &[0], Weights::Custom(1.5)).is_err());
    }

    fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
        let mut grid: Vec<f64> = a.iter().chain(b).copied().collect();
        grid.sort_by(f64::total_cmp);
        let cdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
        grid.iter()
            .map(|&t| (cdf(a, t) - cdf(b, t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn repair_reduces_ks_distance() {
        let ds = gen_biased_gaussian(&SyntheticConfig::e1a(4)).unwrap();
        let out = total_repair(&ds, &[0], Weights::Empirical).unwrap();
        let split = |m: &Array2<f64>| {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (i, &s) in ds.protected().iter().enumerate() {
                if s == 0 { a.push(m[[i, 0]]) } else { b.push(m[[i, 0]]) }
            }
            (a, b)
        };
        let (a0, b0) = split(ds.features());
        let (a1, b1) = split(out.repaired.features());
        assert!(ks_statistic(&a1, &b1) < ks_statistic(&a0, &b0));
    }

    #[test]
    fn one_dimensional_map_is_monotone() {
        let ds = gen_biased_gaussian(&SyntheticConfig::e1b(9).with_sizes(30, 45)).unwrap();
        let out = total_repair(&ds, &[2], Weights::Empirical).unwrap();
        for map in [&out.map0, &out.map1] {
            let mut pairs: Vec<(f64, f64)> = map
                .anchors_src
                .column(0)
                .iter()
                .copied()
                .zip(map.anchors_dst.column(0).iter().copied())
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert!(pairs.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-12));
        }
    }

    #[test]
    fn anchors_are_cyclically_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ds = gen_biased_gaussian(&SyntheticConfig::e1b(21).with_sizes(25, 35)).unwrap();
        let out = total_repair(&ds, &[0, 1, 2], Weights::Empirical).unwrap();
        for map in [&out.map0, &out.map1] {
            let scale = map.anchors_src.iter().fold(0.0f64, |a, &b| a.max(b.abs())).powi(2);
            for _ in 0..2000 {
                let len = rng.random_range(2..=5);
                let idx: Vec<usize> = (0..len).map(|_| rng.random_range(0..map.len())).collect();
                // sum <x_{k+1} - x_k, y_k> <= 0 around the cycle
                let mut s = 0.0;
                for t in 0..len {
                    let (a, b) = (idx[t], idx[(t + 1) % len]);
                    let dx = &map.anchors_src.row(b) - &map.anchors_src.row(a);
                    s += dx.dot(&map.anchors_dst.row(a));
                }
                assert!(s <= 1e-8 * scale, "cycle {idx:?} violates monotonicity by {s}");
            }
        }
    }

    #[test]
    fn swapping_groups_gives_same_multiset() {
        let ds = gen_biased_gaussian(&SyntheticConfig::e1b(5).with_sizes(12, 18)).unwrap();
        let a = total_repair(&ds, &[0, 3], Weights::Custom(0.3)).unwrap();
        let b = total_repair(&ds.with_swapped_groups(), &[0, 3], Weights::Custom(0.7)).unwrap();
        let rows = |r: &Dataset| {
            let mut v: Vec<Vec<f64>> = r.features().rows().into_iter().map(|x| x.to_vec()).collect();
            v.sort_by(|p, q| p.partial_cmp(q).unwrap());
            v
        };
        for (p, q) in rows(&a.repaired).iter().zip(rows(&b.repaired)) {
            for (x, y) in p.iter().zip(q) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn plan_shape_checked() {
        let g = GroupedData {
            group0: array![[0.0]],
            group1: array![[1.0], [2.0]],
            row_index0: vec![0],
            row_index1: vec![1, 2],
        };
        let plan = solve_transport(&CostMatrix::from_entries(array![[1.0]]).unwrap());
        assert!(barycentric_pairs(&plan, &g, (0.5, 0.5)).is_err());
    }
}
