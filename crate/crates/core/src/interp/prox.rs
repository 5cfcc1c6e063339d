use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::InterpolationModel;
use crate::error::{Error, Result};

/// Settings for the proximal subgradient solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    /// Iteration cap `T`.
    pub max_epochs: usize,
    /// Stop when the objective changes by less than this, relative.
    pub rtol1: f64,
    /// Stop when the minimum-norm subgradient is shorter than this.
    pub rtol2: f64,
    pub seed: u64,
    /// Use the exact envelope scan for one-dimensional models.
    pub exact_1d: bool,
    /// Try to identify the active pieces and solve for the prox exactly at
    /// iterations `1, 2, 4, 8, ...` and at the end.
    pub refine: bool,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            max_epochs: 100_000,
            rtol1: 1e-9,
            rtol2: 1e-7,
            seed: 0,
            exact_1d: true,
            refine: true,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("sgd epochs must be at least 1".into()));
        }
        if !(self.rtol1 > 0.0 && self.rtol2 > 0.0) {
            return Err(Error::InvalidArgument("sgd tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Exact1d,
    ActiveSet,
    Objective,
    Subgradient,
    MaxEpochs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub u: Array1<f64>,
    pub iterations: usize,
    pub reason: StopReason,
}

/// Upper envelope of lines `a_k u + b_k`, as (slope, intercept, left breakpoint).
fn upper_envelope(slopes: &[f64], psi: &[f64]) -> Vec<(f64, f64, f64)> {
    let mut lines: Vec<(f64, f64)> = slopes.iter().zip(psi).map(|(&a, &p)| (a, -p)).collect();
    lines.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let mut hull: Vec<(f64, f64, f64)> = Vec::with_capacity(lines.len());
    for (a, b) in lines {
        if let Some(last) = hull.last() {
            if last.0 == a {
                hull.pop();
            }
        }
        loop {
            let Some(&(a1, b1, x1)) = hull.last() else {
                hull.push((a, b, f64::NEG_INFINITY));
                break;
            };
            let x = (b1 - b) / (a - a1);
            if x <= x1 {
                hull.pop();
            } else {
                hull.push((a, b, x));
                break;
            }
        }
    }
    hull
}

/// Exact `prox_{eps phi}(x)` for `phi(u) = max_k s_k u - psi_k` on the line.
///
/// Scans the envelope pieces for the first `k` with `x - eps s_k` at or left
/// of the piece's right breakpoint; the prox is `x - eps s_k` if that lies in
/// the piece and the left breakpoint otherwise.
pub fn exact_prox_1d(slopes: &[f64], psi: &[f64], eps: f64, x: f64) -> f64 {
    let hull = upper_envelope(slopes, psi);
    for (k, &(s, _, left)) in hull.iter().enumerate() {
        let right = hull.get(k + 1).map_or(f64::INFINITY, |h| h.2);
        let cand = x - eps * s;
        if cand <= right {
            return if cand >= left { cand } else { left };
        }
    }
    unreachable!("the last envelope piece extends to +infinity")
}

/// Moreau envelope `min_u phi(u) + (u - x)^2 / (2 eps)` on the line.
pub fn moreau_envelope_1d(slopes: &[f64], psi: &[f64], eps: f64, x: f64) -> f64 {
    let u = exact_prox_1d(slopes, psi, eps, x);
    let phi = slopes
        .iter()
        .zip(psi)
        .map(|(s, p)| s * u - p)
        .fold(f64::NEG_INFINITY, f64::max);
    phi + (u - x) * (u - x) / (2.0 * eps)
}

pub(crate) fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn point_seed(seed: u64, x: ArrayView1<f64>) -> u64 {
    x.iter().fold(splitmix(seed), |h, v| splitmix(h ^ v.to_bits()))
}

fn objective(m: &InterpolationModel, x: ArrayView1<f64>, u: ArrayView1<f64>) -> f64 {
    let diff = &u - &x;
    m.phi(u) + diff.dot(&diff) / (2.0 * m.eps0)
}

/// Solves `A z = rhs` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut z = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * z[c]).sum();
        z[r] = (rhs[r] - s) / a[r][r];
    }
    Some(z)
}

/// Prox candidate when exactly the pieces in `set` are active:
/// `u = x - eps sum_k lambda_k s_k` with `lambda` in the simplex and equal
/// scores `mu` on `set`. Accepted only if every other score is `<= mu`.
fn kkt_candidate(m: &InterpolationModel, x: ArrayView1<f64>, set: &[usize]) -> Option<Array1<f64>> {
    let k = set.len();
    let eps = m.eps0;
    let s = &m.slopes;
    let mut a = vec![vec![0.0; k + 1]; k + 1];
    let mut rhs = vec![0.0; k + 1];
    for (r, &p) in set.iter().enumerate() {
        for (c, &q) in set.iter().enumerate() {
            a[r][c] = eps * s.row(p).dot(&s.row(q));
        }
        a[r][k] = 1.0;
        a[k][r] = 1.0;
        rhs[r] = x.dot(&s.row(p)) - m.psi[p];
    }
    rhs[k] = 1.0;
    let z = solve_dense(a, rhs)?;
    if z[..k].iter().any(|&l| l < -1e-12) {
        return None;
    }
    let mut u = x.to_owned();
    for (r, &p) in set.iter().enumerate() {
        u.scaled_add(-eps * z[r], &s.row(p));
    }
    let scores = m.scores(u.view());
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-11 * (1.0 + top.abs());
    let mu = set.iter().map(|&p| scores[p]).fold(f64::NEG_INFINITY, f64::max);
    (top <= mu + tol).then_some(u)
}

const REFINE_CANDIDATES: usize = 8;

/// Looks for the active pieces among the best-scoring ones at `u`.
fn refine(m: &InterpolationModel, x: ArrayView1<f64>, u: ArrayView1<f64>) -> Option<Array1<f64>> {
    let scores = m.scores(u);
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&p, &q| scores[q].total_cmp(&scores[p]).then(p.cmp(&q)));
    order.truncate(REFINE_CANDIDATES);
    let max_size = m.dim() + 1;
    let mut set = Vec::with_capacity(max_size);
    for last in 0..order.len() {
        // Subsets of order[..last] (at most max_size - 1 of them) plus order[last].
        let pool = &order[..last];
        let mut found = None;
        for_each_subset(pool, max_size - 1, &mut set, &mut |sub| {
            if found.is_some() {
                return;
            }
            let mut full = sub.to_vec();
            full.push(order[last]);
            found = kkt_candidate(m, x, &full);
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

fn for_each_subset(
    pool: &[usize],
    max_size: usize,
    buf: &mut Vec<usize>,
    f: &mut dyn FnMut(&[usize]),
) {
    fn rec(
        pool: &[usize],
        start: usize,
        max_size: usize,
        buf: &mut Vec<usize>,
        f: &mut dyn FnMut(&[usize]),
    ) {
        f(buf);
        if buf.len() == max_size {
            return;
        }
        for i in start..pool.len() {
            buf.push(pool[i]);
            rec(pool, i + 1, max_size, buf, f);
            buf.pop();
        }
    }
    buf.clear();
    rec(pool, 0, max_size, buf, f);
}

/// Approximates `prox_{eps0 phi}(x)` by stochastic subgradient descent on
/// `h(u) = phi(u) + |u - x|^2 / (2 eps0)`.
///
/// Starts at the first anchor source. The step uses `v = s_J + (u - x) / eps0`
/// with `J` drawn uniformly among the maximizing pieces and `eta_t = eps0 / t`,
/// so `u_t` is the running average of `x - eps0 s_J`. Stops on a relative
/// objective change below `rtol1`, a unique-piece gradient shorter than
/// `rtol2`, or after `max_epochs` steps. With `refine` set, an exact solve on
/// the apparently active pieces is attempted at iterations `1, 2, 4, ...` and
/// at the end; it is accepted only if it satisfies the optimality conditions.
/// The random stream is seeded from `cfg.seed` and the bits of `x`.
pub fn prox_sgd(m: &InterpolationModel, x: ArrayView1<f64>, cfg: &SgdConfig) -> Result<ProxResult> {
    if x.len() != m.dim() {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, model has {}",
            x.len(),
            m.dim()
        )));
    }
    if cfg.exact_1d && m.dim() == 1 {
        let s: Vec<f64> = m.slopes.column(0).to_vec();
        let u = exact_prox_1d(&s, &m.psi, m.eps0, x[0]);
        return Ok(ProxResult {
            u: Array1::from_elem(1, u),
            iterations: 0,
            reason: StopReason::Exact1d,
        });
    }
    let eps = m.eps0;
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed(cfg.seed, x));
    let mut u = m.anchors_src.row(0).to_owned();
    let mut h_prev = objective(m, x, u.view());
    let mut next_check = 1usize;
    let mut ties = Vec::new();
    let mut reason = StopReason::MaxEpochs;
    let mut t = 0;
    while t < cfg.max_epochs {
        t += 1;
        let scores = m.scores(u.view());
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tie_tol = 1e-14 * (1.0 + top.abs());
        ties.clear();
        ties.extend((0..scores.len()).filter(|&j| scores[j] >= top - tie_tol));
        let j = if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.random_range(0..ties.len())]
        };
        let mut v = (&u - &x) / eps;
        v += &m.slopes.row(j);
        if ties.len() == 1 && v.dot(&v).sqrt() < cfg.rtol2 {
            reason = StopReason::Subgradient;
            break;
        }
        u.scaled_add(-eps / t as f64, &v);
        if u.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("prox iterate at step {t}")));
        }
        if cfg.refine && t == next_check {
            next_check *= 2;
            if let Some(exact) = refine(m, x, u.view()) {
                return Ok(ProxResult {
                    u: exact,
                    iterations: t,
                    reason: StopReason::ActiveSet,
                });
            }
        }
        let h = objective(m, x, u.view());
        if (h_prev - h).abs() < cfg.rtol1 * h_prev.abs().max(1.0) {
            reason = StopReason::Objective;
            break;
        }
        h_prev = h;
    }
    if cfg.refine {
        if let Some(exact) = refine(m, x, u.view()) {
            return Ok(ProxResult {
                u: exact,
                iterations: t,
                reason: StopReason::ActiveSet,
            });
        }
    }
    Ok(ProxResult {
        u,
        iterations: t,
        reason,
    })
}
