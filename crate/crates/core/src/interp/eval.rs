use ndarray::{Array1, ArrayView1, Axis};

use super::model::{EvalOption, InterpolationModel};
use super::prox::{prox_sgd, SgdConfig};
use crate::data::{sq_dist, Dataset};
use crate::error::{Error, Result};

impl InterpolationModel {
    fn check_dim(&self, x: ArrayView1<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "point has {} coordinates, model has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Node maximizing `<x, s_j> - psi_j`, lowest index on ties.
    pub fn argmax_node(&self, x: ArrayView1<f64>) -> usize {
        let scores = self.scores(x);
        let mut best = 0;
        for (j, &v) in scores.iter().enumerate() {
            if v > scores[best] {
                best = j;
            }
        }
        best
    }

    /// Piecewise-constant extension: the stored image of the maximizing node.
    pub fn eval_step1(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_dim(x)?;
        Ok(self.images.row(self.argmax_node(x)).to_owned())
    }

    /// `(x - prox(x)) / eps0`, mapped back from the working frame.
    pub fn eval_regularized_with(&self, x: ArrayView1<f64>, cfg: &SgdConfig) -> Result<Array1<f64>> {
        self.check_dim(x)?;
        let p = prox_sgd(self, x, cfg)?;
        let grad = (&x - &p.u) / self.eps0;
        Ok(self.from_frame(grad.view()))
    }

    pub fn eval_regularized(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.eval_regularized_with(x, &self.sgd)
    }

    /// Whether the hybrid option routes `x` to Step1: inside the configured
    /// interval if one is set, otherwise when the fraction of anchor sources
    /// within `density_radius` reaches `density_threshold`.
    pub fn hybrid_uses_step1(&self, x: ArrayView1<f64>) -> bool {
        if let Some(iv) = &self.interval {
            let v = x[iv.column];
            return v >= iv.lo && v <= iv.hi;
        }
        let r2 = self.density_radius * self.density_radius;
        let near = self
            .anchors_src
            .axis_iter(Axis(0))
            .filter(|a| sq_dist(*a, x) <= r2)
            .count();
        near as f64 / self.n_anchors() as f64 >= self.density_threshold
    }

    /// Evaluates the extension with the model's option.
    pub fn eval(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.eval_with(x, self.option)
    }

    pub fn eval_with(&self, x: ArrayView1<f64>, option: EvalOption) -> Result<Array1<f64>> {
        match option {
            EvalOption::Step1 => self.eval_step1(x),
            EvalOption::Regularized => self.eval_regularized(x),
            EvalOption::Hybrid => {
                self.check_dim(x)?;
                if self.hybrid_uses_step1(x) {
                    self.eval_step1(x)
                } else {
                    self.eval_regularized(x)
                }
            }
        }
    }
}

/// Repairs the feature columns `cols` of every row with its group's model.
pub fn repair_new(
    m0: &InterpolationModel,
    m1: &InterpolationModel,
    ds: &Dataset,
    cols: &[usize],
) -> Result<Dataset> {
    if m0.group != 0 || m1.group != 1 {
        return Err(Error::InvalidArgument(
            "models must be given in group order 0, 1".into(),
        ));
    }
    for m in [m0, m1] {
        if m.dim() != cols.len() {
            return Err(Error::InvalidArgument(format!(
                "model for group {} has {} columns, {} selected",
                m.group,
                m.dim(),
                cols.len()
            )));
        }
    }
    if let Some(&bad) = cols.iter().find(|&&c| c >= ds.n_features()) {
        return Err(Error::InvalidArgument(format!("column index {bad} out of range")));
    }
    let mut features = ds.features().clone();
    let sub = ds.features().select(Axis(1), cols);
    for (i, &s) in ds.protected().iter().enumerate() {
        let m = if s == 0 { m0 } else { m1 };
        let y = m.eval(sub.row(i))?;
        for (k, &c) in cols.iter().enumerate() {
            features[[i, c]] = y[k];
        }
    }
    ds.with_features(features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{fit_interpolation, FitConfig, Frame, Step1Interval};
    use crate::ot::RepairMap;
    use ndarray::array;

    fn two_anchor(frame: Frame) -> InterpolationModel {
        let rm = RepairMap::new(0, array![[0.0], [1.0]], array![[0.0], [1.0]], (0.5, 0.5)).unwrap();
        fit_interpolation(&rm, &FitConfig { frame, ..FitConfig::default() }).unwrap()
    }

    fn at(m: &InterpolationModel, opt: EvalOption, x: f64) -> f64 {
        m.eval_with(array![x].view(), opt).unwrap()[0]
    }

    #[test]
    fn step1_two_anchor() {
        let m = two_anchor(Frame::Raw);
        assert_eq!(at(&m, EvalOption::Step1, 0.1), 0.0);
        assert_eq!(at(&m, EvalOption::Step1, 0.9), 1.0);
        assert_eq!(at(&m, EvalOption::Step1, 0.5), 0.0);
    }

    #[test]
    fn regularized_two_anchor() {
        let m = two_anchor(Frame::Raw);
        assert_eq!(at(&m, EvalOption::Regularized, 0.75), 1.0);
        assert_eq!(at(&m, EvalOption::Regularized, 0.5), 0.0);
        let lip = (at(&m, EvalOption::Regularized, 0.6) - at(&m, EvalOption::Regularized, 0.4)).abs();
        assert!(lip <= 0.2 / 0.25);
    }

    #[test]
    fn both_frames_interpolate() {
        for frame in [Frame::Raw, Frame::UnitBall] {
            let m = two_anchor(frame);
            for (x, y) in [(0.0, 0.0), (1.0, 1.0)] {
                assert_eq!(at(&m, EvalOption::Step1, x), y);
                assert!((at(&m, EvalOption::Regularized, x) - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hybrid_interval_override() {
        let mut m = two_anchor(Frame::Raw);
        m.option = EvalOption::Hybrid;
        m.interval = Some(Step1Interval { column: 0, lo: 0.55, hi: 0.65 });
        assert_eq!(at(&m, EvalOption::Hybrid, 0.6), 1.0);
        assert!((at(&m, EvalOption::Hybrid, 0.7) - 0.8).abs() < 1e-12);
        assert!((at(&m, EvalOption::Regularized, 0.6) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = two_anchor(Frame::Raw);
        assert!(m.eval_step1(array![0.0, 1.0].view()).is_err());
    }
}
