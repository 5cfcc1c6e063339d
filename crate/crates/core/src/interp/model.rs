use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use super::prox::SgdConfig;
use crate::error::{Error, Result};
use crate::mmc::{self, Solver, WeightedDigraph, DEFAULT_SCALE_DIGITS};
use crate::ot::RepairMap;

/// How [`InterpolationModel::eval`] maps a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalOption {
    /// Image of the maximizing anchor.
    Step1,
    /// Gradient of the Moreau envelope.
    #[default]
    Regularized,
    /// Step1 where anchors are dense around the point (or inside the
    /// configured interval), Regularized elsewhere.
    Hybrid,
}

impl EvalOption {
    /// Maps the numbered options `1`, `2`, `3`.
    pub fn from_number(k: u8) -> Result<Self> {
        match k {
            1 => Ok(EvalOption::Step1),
            2 => Ok(EvalOption::Regularized),
            3 => Ok(EvalOption::Hybrid),
            _ => Err(Error::InvalidArgument(format!(
                "option must be 1, 2 or 3, got {k}"
            ))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            EvalOption::Step1 => 1,
            EvalOption::Regularized => 2,
            EvalOption::Hybrid => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EvalOption::Step1 => "step1",
            EvalOption::Regularized => "regularized",
            EvalOption::Hybrid => "hybrid",
        }
    }
}

/// Coordinates in which the slopes of `phi` are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// Slopes `s_j = (x~_j - b) / rho`, with `b` the centroid of the images and
    /// `rho` their largest distance from it, so `|s_j| <= 1`. This keeps the
    /// regularized map interpolating whatever the data scale; the map is then
    /// `rho / eps0`-Lipschitz.
    #[default]
    UnitBall,
    /// Slopes are the raw images; the map is `1 / eps0`-Lipschitz but only
    /// interpolates when `<x~_i, x~_i - x~_j> <= 2` for all pairs.
    Raw,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::UnitBall => "unit-ball",
            Frame::Raw => "raw",
        }
    }
}

/// Points whose coordinate `column` lies in `[lo, hi]` use Step1 under
/// [`EvalOption::Hybrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step1Interval {
    pub column: usize,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub option: EvalOption,
    pub frame: Frame,
    pub solver: Solver,
    pub scale_digits: u32,
    pub sgd: SgdConfig,
    pub density_threshold: f64,
    /// Neighbourhood radius for the density rule; median nearest-anchor
    /// distance when absent.
    pub density_radius: Option<f64>,
    pub interval: Option<Step1Interval>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            option: EvalOption::Regularized,
            frame: Frame::UnitBall,
            solver: Solver::Hybrid,
            scale_digits: DEFAULT_SCALE_DIGITS,
            sgd: SgdConfig::default(),
            density_threshold: 0.05,
            density_radius: None,
            interval: None,
        }
    }
}

/// Fitted extension of one group's repair map.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationModel {
    pub group: u8,
    /// Feature names the model was fitted on; may be empty.
    pub columns: Vec<String>,
    pub anchors_src: Array2<f64>,
    pub anchors_dst: Array2<f64>,
    /// Distinct images, in order of first appearance.
    pub images: Array2<f64>,
    /// Node (row of `images`) of every anchor.
    pub node_of: Vec<usize>,
    pub psi: Vec<f64>,
    /// Minimum cycle mean of the anchor graph, in frame units.
    pub eps_star: f64,
    pub eps0: f64,
    pub frame: Frame,
    pub center: Array1<f64>,
    pub radius: f64,
    pub option: EvalOption,
    pub density_threshold: f64,
    pub density_radius: f64,
    pub interval: Option<Step1Interval>,
    pub sgd: SgdConfig,
    /// Slopes `s_j`, derived from `images`, `center` and `radius`.
    pub(crate) slopes: Array2<f64>,
}

impl InterpolationModel {
    pub fn dim(&self) -> usize {
        self.anchors_src.ncols()
    }

    pub fn n_anchors(&self) -> usize {
        self.anchors_src.nrows()
    }

    pub fn slopes(&self) -> &Array2<f64> {
        &self.slopes
    }

    /// Lipschitz constant of the regularized map.
    pub fn lipschitz_bound(&self) -> f64 {
        self.radius / self.eps0
    }

    /// Scores `<x, s_j> - psi_j` of every node.
    pub fn scores(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut s = self.slopes.dot(&x);
        s.iter_mut().zip(&self.psi).for_each(|(v, p)| *v -= p);
        s
    }

    /// `phi(u) = max_j <u, s_j> - psi_j`.
    pub fn phi(&self, u: ArrayView1<f64>) -> f64 {
        self.scores(u).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest margin by which each anchor's own score beats every other node.
    pub fn min_margin(&self) -> f64 {
        let mut out = f64::INFINITY;
        for i in 0..self.n_anchors() {
            let sc = self.scores(self.anchors_src.row(i));
            let own = sc[self.node_of[i]];
            for (j, &v) in sc.iter().enumerate() {
                if j != self.node_of[i] {
                    out = out.min(own - v);
                }
            }
        }
        out
    }

    pub(crate) fn from_frame(&self, s: ArrayView1<f64>) -> Array1<f64> {
        &s * self.radius + &self.center
    }

    /// Recomputes derived fields; used after loading.
    pub(crate) fn rebuild_slopes(&mut self) {
        let c = self.center.view().insert_axis(Axis(0));
        self.slopes = (&self.images - &c) / self.radius;
    }
}

/// Collapses identical images; returns (distinct images, node of each anchor).
fn dedup_images(dst: &Array2<f64>) -> (Array2<f64>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut keep = Vec::new();
    let node_of = dst
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let key: Vec<u64> = r.iter().map(|v| (v + 0.0).to_bits()).collect();
            let next = keep.len();
            let node = *seen.entry(key).or_insert(next);
            if node == next {
                keep.push(i);
            }
            node
        })
        .collect();
    (dst.select(Axis(0), &keep), node_of)
}

/// Arc costs `min_{i in I} <x_i, s_I - s_J>` over the members of each node.
fn graph_costs(src: &Array2<f64>, slopes: &Array2<f64>, node_of: &[usize]) -> Array2<f64> {
    let m = slopes.nrows();
    let mut costs = Array2::from_elem((m, m), f64::INFINITY);
    for (i, &a) in node_of.iter().enumerate() {
        let x = src.row(i);
        let own = x.dot(&slopes.row(a));
        let others = slopes.dot(&x);
        for b in 0..m {
            if b != a {
                let c = own - others[b];
                if c < costs[[a, b]] {
                    costs[[a, b]] = c;
                }
            }
        }
    }
    costs.diag_mut().fill(0.0);
    costs
}

/// Graph with arc costs `<x_i, x~_i - x~_j>` on the distinct images of `rm`.
pub fn build_interp_graph(rm: &RepairMap) -> Result<WeightedDigraph> {
    let (images, node_of) = dedup_images(&rm.anchors_dst);
    if images.nrows() < 2 {
        return Err(Error::InvalidData(
            "need at least two distinct anchor images".into(),
        ));
    }
    WeightedDigraph::new(graph_costs(&rm.anchors_src, &images, &node_of))
}

/// Potentials from shortest paths under `c - eps_star`, rooted at vertex 0.
///
/// Returns `psi = -dist`, so `c[i][j] >= psi_i - psi_j + eps_star` up to a
/// relaxation tolerance of `1e-12 (1 + max |c|)`, and `psi_0 = 0`. Fails with
/// the offending cycle if `eps_star` exceeds the minimum cycle mean.
pub fn potentials_from_mcm(g: &WeightedDigraph, eps_star: f64) -> Result<Vec<f64>> {
    let n = g.n();
    let c = g.costs();
    let tol = 1e-12 * (1.0 + c.iter().fold(0.0f64, |a, &b| a.max(b.abs())));
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    dist[0] = 0.0;
    let mut last = None;
    for _ in 0..n {
        last = None;
        for u in 0..n {
            let du = dist[u];
            for v in 0..n {
                if u == v {
                    continue;
                }
                let cand = du + (c[[u, v]] - eps_star);
                if cand < dist[v] - tol {
                    dist[v] = cand;
                    pred[v] = u;
                    last = Some(v);
                }
            }
        }
        if last.is_none() {
            break;
        }
    }
    if let Some(mut x) = last {
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
        return Err(Error::NegativeCycle(cyc));
    }
    let d0 = dist[0];
    Ok(dist.iter().map(|d| d0 - d).collect())
}

fn cycle_mean(g: &WeightedDigraph, cyc: &[usize]) -> f64 {
    let total: f64 = cyc.windows(2).map(|w| g.cost(w[0], w[1])).sum();
    total / (cyc.len() - 1) as f64
}

/// Median over anchors of the distance to the nearest other anchor source.
fn median_nn_distance(src: &Array2<f64>) -> f64 {
    let n = src.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| crate::data::sq_dist(src.row(i), src.row(j)))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    if n % 2 == 1 {
        nn[n / 2]
    } else {
        0.5 * (nn[n / 2 - 1] + nn[n / 2])
    }
}

/// Fits the extension of `rm`.
///
/// The optimal smoothing value is the minimum cycle mean of the anchor graph
/// (solver chosen by `cfg.solver`). That mean is then checked in floating
/// point by a Bellman-Ford pass on `c - eps_star`; if the pass still finds a
/// negative cycle, its mean replaces `eps_star`. The same pass yields `psi`.
pub fn fit_interpolation(rm: &RepairMap, cfg: &FitConfig) -> Result<InterpolationModel> {
    if rm.len() < 2 {
        return Err(Error::InvalidData("need at least two anchors".into()));
    }
    if !(cfg.density_threshold >= 0.0) {
        return Err(Error::InvalidArgument("density threshold must be nonnegative".into()));
    }
    cfg.sgd.validate()?;
    if let Some(iv) = &cfg.interval {
        if iv.column >= rm.dim() || !(iv.lo <= iv.hi) {
            return Err(Error::InvalidArgument(format!(
                "step1 interval [{}, {}] on column {} is invalid",
                iv.lo, iv.hi, iv.column
            )));
        }
    }
    let (images, node_of) = dedup_images(&rm.anchors_dst);
    if images.nrows() < 2 {
        return Err(Error::InvalidData(
            "need at least two distinct anchor images".into(),
        ));
    }
    let d = rm.dim();
    let (center, radius) = match cfg.frame {
        Frame::Raw => (Array1::zeros(d), 1.0),
        Frame::UnitBall => {
            let b = images.mean_axis(Axis(0)).expect("nonempty");
            let r = images
                .rows()
                .into_iter()
                .map(|row| crate::data::sq_dist(row, b.view()).sqrt())
                .fold(0.0f64, f64::max);
            (b, r)
        }
    };
    let mut model = InterpolationModel {
        group: rm.group,
        columns: Vec::new(),
        anchors_src: rm.anchors_src.clone(),
        anchors_dst: rm.anchors_dst.clone(),
        images,
        node_of,
        psi: Vec::new(),
        eps_star: 0.0,
        eps0: 0.0,
        frame: cfg.frame,
        center,
        radius,
        option: cfg.option,
        density_threshold: cfg.density_threshold,
        density_radius: 0.0,
        interval: cfg.interval,
        sgd: cfg.sgd.clone(),
        slopes: Array2::zeros((0, d)),
    };
    model.rebuild_slopes();
    let g = WeightedDigraph::new(graph_costs(&model.anchors_src, &model.slopes, &model.node_of))?;
    let cyc = mmc::solve(&g, cfg.solver, cfg.scale_digits)?;
    let scale = 1.0 + g.costs().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut eps_star = cyc.mean;
    let mut critical = cyc.cycle.clone();
    let psi = loop {
        if eps_star <= 1e-12 * scale {
            return Err(Error::NotCyclicallyMonotone {
                cycle: critical,
                mean: eps_star,
            });
        }
        match potentials_from_mcm(&g, eps_star) {
            Ok(psi) => break psi,
            Err(Error::NegativeCycle(c)) => {
                let m = cycle_mean(&g, &c);
                log::debug!("smoothing value lowered from {eps_star} to {m}");
                eps_star = m.min(eps_star - 1e-12 * scale);
                critical = c;
            }
            Err(e) => return Err(e),
        }
    };
    model.psi = psi;
    model.eps_star = eps_star;
    model.eps0 = eps_star / 2.0;
    model.density_radius = cfg
        .density_radius
        .unwrap_or_else(|| median_nn_distance(&model.anchors_src));
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn raw_cfg() -> FitConfig {
        FitConfig {
            frame: Frame::Raw,
            ..FitConfig::default()
        }
    }

    fn map(src: Array2<f64>, dst: Array2<f64>) -> RepairMap {
        RepairMap::new(0, src, dst, (0.5, 0.5)).unwrap()
    }

    #[test]
    fn two_anchor_graph_costs() {
        let g = build_interp_graph(&map(array![[0.0], [1.0]], array![[0.0], [1.0]])).unwrap();
        assert_eq!(g.costs(), &array![[0.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn equal_images_are_rejected() {
        let rm = map(array![[0.0], [1.0], [2.0]], array![[4.0], [4.0], [4.0]]);
        assert!(matches!(build_interp_graph(&rm), Err(Error::InvalidData(_))));
        assert!(fit_interpolation(&rm, &raw_cfg()).is_err());
    }

    #[test]
    fn graph_matches_inner_product_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0));
        let dst = Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0));
        let g = build_interp_graph(&map(src.clone(), dst.clone())).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut v = 0.0;
                if i != j {
                    for k in 0..2 {
                        v += src[[i, k]] * (dst[[i, k]] - dst[[j, k]]);
                    }
                }
                assert!((g.cost(i, j) - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_anchor_model() {
        let m = fit_interpolation(&map(array![[0.0], [1.0]], array![[0.0], [1.0]]), &raw_cfg())
            .unwrap();
        assert_eq!(m.eps_star, 0.5);
        assert_eq!(m.eps0, 0.25);
        assert_eq!(m.psi, vec![0.0, 0.5]);
    }

    #[test]
    fn identity_repair_three_points() {
        // Cycle means of <x_i, x_i - x_j> for x = (0, 1, 3): 2-cycles give
        // (x_i - x_j)^2 / 2, i.e. 0.5, 4.5, 2; 3-cycles give 7/3.
        let x = array![[0.0], [1.0], [3.0]];
        let m = fit_interpolation(&map(x.clone(), x), &raw_cfg()).unwrap();
        assert!((m.eps_star - 0.5).abs() < 1e-12);
    }

    #[test]
    fn reversed_pairing_fails() {
        let rm = map(array![[0.0], [1.0]], array![[1.0], [0.0]]);
        match fit_interpolation(&rm, &raw_cfg()) {
            Err(Error::NotCyclicallyMonotone { mean, cycle }) => {
                assert!(mean < 0.0);
                assert_eq!(cycle.len(), 3);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn potentials_two_anchor() {
        let g = WeightedDigraph::new(array![[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(potentials_from_mcm(&g, 0.5).unwrap(), vec![0.0, 0.5]);
        assert!(matches!(potentials_from_mcm(&g, 0.6), Err(Error::NegativeCycle(_))));
    }

    #[test]
    fn potentials_satisfy_all_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let c = Array2::from_shape_fn((6, 6), |_| rng.random_range(-3.0..3.0));
            let g = WeightedDigraph::new(c).unwrap();
            let lam = mmc::karp_mcm(&g).mean;
            let psi = potentials_from_mcm(&g, lam).unwrap();
            assert_eq!(psi[0], 0.0);
            for i in 0..6 {
                for j in 0..6 {
                    if i != j {
                        assert!(g.cost(i, j) >= psi[i] - psi[j] + lam - 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn margins_match_eps0() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut x: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..10.0)).collect();
        x.sort_by(f64::total_cmp);
        let src = Array2::from_shape_fn((30, 1), |(i, _)| x[i]);
        let dst = src.mapv(|v| 2.0 + 0.5 * v);
        for frame in [Frame::Raw, Frame::UnitBall] {
            let cfg = FitConfig { frame, ..FitConfig::default() };
            let m = fit_interpolation(&map(src.clone(), dst.clone()), &cfg).unwrap();
            assert!((0.5 * m.min_margin() - m.eps0).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicate_images_collapse() {
        let rm = map(array![[0.0], [0.5], [2.0]], array![[0.0], [0.0], [1.0]]);
        let m = fit_interpolation(&rm, &raw_cfg()).unwrap();
        assert_eq!(m.images.nrows(), 2);
        assert_eq!(m.node_of, vec![0, 0, 1]);
        assert!(m.min_margin() > 0.0);
    }
}
