use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// L2 penalty on the non-intercept coefficients.
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop once the gradient norm falls below this.
    pub grad_tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            lambda: 1e-4,
            max_iter: 20_000,
            grad_tol: 1e-9,
        }
    }
}

/// Fitted logistic regression, intercept first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub final_loss: f64,
    pub grad_norm: f64,
    /// False when `max_iter` ran out before `grad_tol` was met.
    pub converged: bool,
}

impl Classifier {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.coefficients[0]
            + self.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        crate::data::sigmoid(self.decision(x))
    }

    pub fn predict_one(&self, x: &[f64]) -> u8 {
        u8::from(self.probability(x) >= 0.5)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<u8>> {
        if x.ncols() + 1 != self.coefficients.len() {
            return Err(Error::InvalidArgument(format!(
                "classifier expects {} features, got {}",
                self.coefficients.len() - 1,
                x.ncols()
            )));
        }
        Ok(x.rows()
            .into_iter()
            .map(|r| self.predict_one(r.as_slice().unwrap_or(&r.to_vec())))
            .collect())
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem<'a> {
    x: ArrayView2<'a, f64>,
    y: Vec<f64>,
    lambda: f64,
}

impl Problem<'_> {
    fn margins(&self, w: &Array1<f64>) -> Array1<f64> {
        self.x.dot(&w.slice(ndarray::s![1..])) + w[0]
    }

    /// Mean negative log-likelihood plus `lambda/2 * |w_{1..}|^2`.
    fn loss(&self, w: &Array1<f64>) -> f64 {
        let z = self.margins(w);
        let n = self.y.len() as f64;
        let nll: f64 = z.iter().zip(&self.y).map(|(&z, &y)| softplus(z) - y * z).sum();
        nll / n + 0.5 * self.lambda * w.iter().skip(1).map(|v| v * v).sum::<f64>()
    }

    fn loss_grad(&self, w: &Array1<f64>) -> (f64, Array1<f64>) {
        let z = self.margins(w);
        let n = self.y.len() as f64;
        let mut nll = 0.0;
        let mut r = Array1::zeros(z.len());
        for (i, (&zi, &yi)) in z.iter().zip(&self.y).enumerate() {
            nll += softplus(zi) - yi * zi;
            r[i] = (crate::data::sigmoid(zi) - yi) / n;
        }
        let mut g = Array1::zeros(w.len());
        g[0] = r.sum();
        g.slice_mut(ndarray::s![1..]).assign(&self.x.t().dot(&r));
        let mut pen = 0.0;
        for k in 1..w.len() {
            g[k] += self.lambda * w[k];
            pen += w[k] * w[k];
        }
        (nll / n + 0.5 * self.lambda * pen, g)
    }
}

/// Penalized maximum likelihood by full-batch gradient descent with
/// Barzilai-Borwein step proposals and Armijo backtracking.
pub fn fit_logistic(x: ArrayView2<f64>, y: &[u8], cfg: &LogisticConfig) -> Result<Classifier> {
    let (n, d) = x.dim();
    if y.len() != n {
        return Err(Error::InvalidArgument(format!("{n} rows but {} labels", y.len())));
    }
    if n < d + 1 {
        return Err(Error::InvalidData(format!(
            "logistic regression needs at least {} rows, got {n}",
            d + 1
        )));
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::InvalidData("labels are constant".into()));
    }
    if !(cfg.lambda >= 0.0 && cfg.lambda.is_finite()) || cfg.max_iter == 0 {
        return Err(Error::InvalidArgument("invalid logistic configuration".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature matrix".into()));
    }
    let p = Problem {
        x,
        y: y.iter().map(|&v| f64::from(v.min(1))).collect(),
        lambda: cfg.lambda,
    };

    let mut w = Array1::<f64>::zeros(d + 1);
    let (mut f, mut g) = p.loss_grad(&w);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut gnorm = g.dot(&g).sqrt();
    while iterations < cfg.max_iter && gnorm > cfg.grad_tol {
        iterations += 1;
        let gg = g.dot(&g);
        let mut t = step;
        let mut next;
        loop {
            next = &w - &(&g * t);
            let fn_ = p.loss(&next);
            // Slack of a few ulps keeps the search alive once decreases drop below
            // the resolution of the loss.
            if fn_ <= f - 1e-4 * t * gg + 8.0 * f64::EPSILON * f.abs() || t < 1e-20 {
                break;
            }
            t *= 0.5;
        }
        let (f_new, g_new) = p.loss_grad(&next);
        let s = &next - &w;
        let yv = &g_new - &g;
        let sy = s.dot(&yv);
        step = if sy > 0.0 { s.dot(&s) / sy } else { t * 2.0 };
        step = step.clamp(1e-10, 1e10);
        let stalled = f_new >= f && t < 1e-20;
        w = next;
        f = f_new;
        g = g_new;
        gnorm = g.dot(&g).sqrt();
        if stalled {
            break;
        }
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logistic coefficients".into()));
    }
    let converged = gnorm <= cfg.grad_tol;
    if !converged {
        log::warn!("logistic regression stopped after {iterations} iterations, gradient norm {gnorm:.3e}");
    }
    Ok(Classifier {
        coefficients: w.to_vec(),
        iterations,
        final_loss: f,
        grad_norm: gnorm,
        converged,
    })
}

#[cfg(test)]
/// Objective used by [`fit_logistic`], exposed for gradient checks.
pub(crate) fn penalized_loss(x: ArrayView2<f64>, y: &[u8], lambda: f64, w: &[f64]) -> f64 {
    let p = Problem {
        x,
        y: y.iter().map(|&v| f64::from(v.min(1))).collect(),
        lambda,
    };
    p.loss(&Array1::from(w.to_vec()))
}
