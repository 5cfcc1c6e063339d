use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::logistic::{fit_logistic, LogisticConfig};
use super::metrics::{accuracy, di_confidence_interval, disparate_impact, DIEstimate};
use crate::data::{kfold_split, Dataset, FoldPlan};
use crate::error::{Error, Result};
use crate::interp::prox::splitmix;
use crate::interp::{fit_interpolation, repair_new, EvalOption, FitConfig};
use crate::ot::{total_repair, Weights};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProcedureConfig {
    pub k: usize,
    pub seed: u64,
    pub option: EvalOption,
    pub weights: Weights,
    pub fit: FitConfig,
    pub logistic: LogisticConfig,
    /// Level of the per-fold and pooled DI intervals.
    pub alpha: f64,
    /// Adds wall-clock seconds to each fold. Off by default so reports stay
    /// byte-reproducible.
    pub record_timings: bool,
    /// Run folds on separate threads. Results do not depend on this.
    pub parallel: bool,
}

impl Default for ProcedureConfig {
    fn default() -> Self {
        ProcedureConfig {
            k: 10,
            seed: 0,
            option: EvalOption::Regularized,
            weights: Weights::Empirical,
            fit: FitConfig::default(),
            logistic: LogisticConfig::default(),
            alpha: 0.05,
            record_timings: false,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pass {
    Benchmark,
    Repaired,
}

impl Pass {
    pub fn name(self) -> &'static str {
        match self {
            Pass::Benchmark => "benchmark",
            Pass::Repaired => "repaired",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    /// 1-based fold id.
    pub fold: usize,
    pub pass: Pass,
    pub accuracy: f64,
    pub di: f64,
    /// Absent when a group rate is 0 or 1.
    pub di_lo: Option<f64>,
    pub di_hi: Option<f64>,
    pub p0: f64,
    pub p1: f64,
    pub n_test: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassSummary {
    pub pass: Pass,
    pub accuracy_mean: f64,
    pub accuracy_sd: f64,
    pub di_mean: f64,
    pub di_sd: f64,
    /// DI of the out-of-fold predictions pooled over all folds.
    pub pooled_di: f64,
    pub pooled_di_lo: Option<f64>,
    pub pooled_di_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiSummary {
    #[serde(flatten)]
    pub estimate: DIEstimate,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub benchmark: PassSummary,
    pub repaired: PassSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    /// Resolved configuration the report was produced with.
    pub config: serde_json::Value,
    pub option: EvalOption,
    pub seed: u64,
    /// DI of the observed labels on the whole dataset.
    pub label_di: Option<DiSummary>,
    pub folds: Vec<FoldResult>,
    pub aggregate: Aggregate,
}

impl EvalReport {
    pub fn pass_folds(&self, pass: Pass) -> impl Iterator<Item = &FoldResult> {
        self.folds.iter().filter(move |f| f.pass == pass)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per fold and pass.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let timed = self.folds.iter().any(|f| f.seconds.is_some());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![
            "fold", "pass", "option", "accuracy", "di", "di_lo", "di_hi", "p0", "p1", "n_test",
        ];
        if timed {
            header.push("seconds");
        }
        out.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for f in &self.folds {
            let mut rec = vec![
                f.fold.to_string(),
                f.pass.name().to_string(),
                self.option.number().to_string(),
                f.accuracy.to_string(),
                f.di.to_string(),
                opt(f.di_lo),
                opt(f.di_hi),
                f.p0.to_string(),
                f.p1.to_string(),
                f.n_test.to_string(),
            ];
            if timed {
                rec.push(opt(f.seconds));
            }
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

struct FoldOutcome {
    results: [FoldResult; 2],
    test_rows: Vec<usize>,
    predictions: [Vec<u8>; 2],
}

fn summarize_di(e: DIEstimate, alpha: f64) -> (Option<f64>, Option<f64>) {
    match di_confidence_interval(&e, alpha) {
        Ok((lo, hi)) => (Some(lo), Some(hi)),
        Err(_) => (None, None),
    }
}

fn score(
    fold: usize,
    pass: Pass,
    pred: &[u8],
    test: &Dataset,
    label: &[u8],
    alpha: f64,
    seconds: Option<f64>,
) -> Result<FoldResult> {
    let e = disparate_impact(pred, test.protected())?;
    let (di_lo, di_hi) = summarize_di(e, alpha);
    Ok(FoldResult {
        fold: fold + 1,
        pass,
        accuracy: accuracy(pred, label)?,
        di: e.di,
        di_lo,
        di_hi,
        p0: e.p0,
        p1: e.p1,
        n_test: pred.len(),
        seconds,
    })
}

fn run_fold(
    ds: &Dataset,
    plan: &FoldPlan,
    fold: usize,
    cols: &[usize],
    cfg: &ProcedureConfig,
) -> Result<FoldOutcome> {
    let test_rows = plan.test_indices(fold);
    let train = ds.select_rows(&plan.train_indices(fold));
    let test = ds.select_rows(&test_rows);
    let (n0, n1) = test.group_sizes();
    if n0 == 0 || n1 == 0 {
        return Err(Error::EmptyGroup(if n0 == 0 { 0 } else { 1 }));
    }
    let train_y = train.label().ok_or_else(|| Error::InvalidData("dataset has no label".into()))?;
    let test_y = test.label().expect("label present on every split");
    let timed = |t: Instant| cfg.record_timings.then(|| t.elapsed().as_secs_f64());

    let t = Instant::now();
    let clf = fit_logistic(train.features().view(), train_y, &cfg.logistic)?;
    let bench_pred = clf.predict(test.features().view())?;
    let bench = score(fold, Pass::Benchmark, &bench_pred, &test, test_y, cfg.alpha, timed(t))?;

    let t = Instant::now();
    let repaired = total_repair(&train, cols, cfg.weights)?;
    let mut fit = cfg.fit.clone();
    fit.option = cfg.option;
    fit.sgd.seed = splitmix(cfg.fit.sgd.seed ^ splitmix(cfg.seed.wrapping_add(fold as u64)));
    let m0 = fit_interpolation(&repaired.map0, &fit)?;
    let m1 = fit_interpolation(&repaired.map1, &fit)?;
    let test_rep = repair_new(&m0, &m1, &test, cols)?;
    let clf = fit_logistic(repaired.repaired.features().view(), train_y, &cfg.logistic)?;
    let rep_pred = clf.predict(test_rep.features().view())?;
    let rep = score(fold, Pass::Repaired, &rep_pred, &test, test_y, cfg.alpha, timed(t))?;

    Ok(FoldOutcome {
        results: [bench, rep],
        test_rows,
        predictions: [bench_pred, rep_pred],
    })
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(pass: Pass, idx: usize, outcomes: &[FoldOutcome], ds: &Dataset, alpha: f64) -> Result<PassSummary> {
    let acc: Vec<f64> = outcomes.iter().map(|o| o.results[idx].accuracy).collect();
    let di: Vec<f64> = outcomes.iter().map(|o| o.results[idx].di).collect();
    let (accuracy_mean, accuracy_sd) = mean_sd(&acc);
    let (di_mean, di_sd) = mean_sd(&di);
    let mut pooled = vec![0u8; ds.n_rows()];
    for o in outcomes {
        for (&r, &p) in o.test_rows.iter().zip(&o.predictions[idx]) {
            pooled[r] = p;
        }
    }
    let e = disparate_impact(&pooled, ds.protected())?;
    let (pooled_di_lo, pooled_di_hi) = summarize_di(e, alpha);
    Ok(PassSummary {
        pass,
        accuracy_mean,
        accuracy_sd,
        di_mean,
        di_sd,
        pooled_di: e.di,
        pooled_di_lo,
        pooled_di_hi,
    })
}

/// Cross-validated comparison of a logistic regression trained on raw data
/// against one trained on repaired data.
///
/// In every fold the repair is fitted on the training split only; the test
/// split is repaired out-of-sample through the fitted interpolation models.
/// Columns outside `cols` pass through unchanged. Accuracy and DI are always
/// measured on the test split.
pub fn run_procedure(ds: &Dataset, cols: &[usize], cfg: &ProcedureConfig) -> Result<EvalReport> {
    let label = ds.label().ok_or_else(|| Error::InvalidData("dataset has no label column".into()))?;
    if cols.is_empty() {
        return Err(Error::InvalidArgument("no columns selected for repair".into()));
    }
    if let Some(&c) = cols.iter().find(|&&c| c >= ds.n_features()) {
        return Err(Error::InvalidArgument(format!("column index {c} out of range")));
    }
    let plan = kfold_split(ds, cfg.k, cfg.seed)?;

    let wrap = |fold: usize, r: Result<FoldOutcome>| {
        r.map_err(|e| Error::Fold {
            fold: fold + 1,
            source: Box::new(e),
        })
    };
    let outcomes: Vec<FoldOutcome> = if cfg.parallel && cfg.k > 1 {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cfg.k);
        let mut slots: Vec<Option<Result<FoldOutcome>>> = (0..cfg.k).map(|_| None).collect();
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let plan = &plan;
                    scope.spawn(move || {
                        (w..cfg.k)
                            .step_by(workers)
                            .map(|f| (f, run_fold(ds, plan, f, cols, cfg)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (f, r) in h.join().expect("fold worker panicked") {
                    slots[f] = Some(r);
                }
            }
        });
        slots
            .into_iter()
            .enumerate()
            .map(|(f, r)| wrap(f, r.expect("every fold ran")))
            .collect::<Result<_>>()?
    } else {
        (0..cfg.k)
            .map(|f| wrap(f, run_fold(ds, &plan, f, cols, cfg)))
            .collect::<Result<_>>()?
    };

    let label_di = disparate_impact(label, ds.protected()).ok().map(|estimate| {
        let (lo, hi) = summarize_di(estimate, cfg.alpha);
        DiSummary { estimate, lo, hi }
    });
    let aggregate = Aggregate {
        benchmark: summarize(Pass::Benchmark, 0, &outcomes, ds, cfg.alpha)?,
        repaired: summarize(Pass::Repaired, 1, &outcomes, ds, cfg.alpha)?,
    };
    let mut config = serde_json::to_value(cfg)?;
    let names: Vec<&str> = cols.iter().map(|&c| ds.feature_names()[c].as_str()).collect();
    config["columns"] = serde_json::json!(names);
    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config,
        option: cfg.option,
        seed: cfg.seed,
        label_di,
        folds: outcomes.into_iter().flat_map(|o| o.results).collect(),
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_biased_gaussian, SyntheticConfig};

    fn small() -> Dataset {
        gen_biased_gaussian(&SyntheticConfig::e1a(5).with_sizes(60, 60)).unwrap()
    }

    #[test]
    fn report_structure() {
        let cfg = ProcedureConfig {
            k: 4,
            seed: 1,
            ..ProcedureConfig::default()
        };
        let r = run_procedure(&small(), &[0], &cfg).unwrap();
        assert_eq!(r.folds.len(), 8);
        assert_eq!(r.pass_folds(Pass::Benchmark).count(), 4);
        assert_eq!(r.pass_folds(Pass::Repaired).map(|f| f.fold).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(r.folds.iter().map(|f| f.n_test).sum::<usize>(), 240);
        assert!(r.folds.iter().all(|f| f.seconds.is_none()));
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.starts_with("fold,pass,option,accuracy,di"));
        assert_eq!(r.config["columns"][0], "x1");
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let ds = small();
        let cfg = ProcedureConfig {
            k: 3,
            seed: 9,
            ..ProcedureConfig::default()
        };
        let a = run_procedure(&ds, &[0, 1], &cfg).unwrap();
        let b = run_procedure(&ds, &[0, 1], &ProcedureConfig { parallel: false, ..cfg.clone() }).unwrap();
        assert_eq!(a.folds, b.folds);
        assert_eq!(a.aggregate, b.aggregate);
        assert_eq!(a.to_json().unwrap(), run_procedure(&ds, &[0, 1], &cfg).unwrap().to_json().unwrap());
    }

    #[test]
    fn timings_only_on_request() {
        let cfg = ProcedureConfig {
            k: 2,
            record_timings: true,
            ..ProcedureConfig::default()
        };
        let r = run_procedure(&small(), &[0], &cfg).unwrap();
        assert!(r.folds.iter().all(|f| f.seconds.is_some()));
        assert!(r.to_csv().unwrap().lines().next().unwrap().ends_with("seconds"));
    }

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_fold_id() {
        let ds = small();
        let cfg = ProcedureConfig {
            k: 2,
            fit: FitConfig {
                density_threshold: -1.0,
                ..FitConfig::default()
            },
            ..ProcedureConfig::default()
        };
        match run_procedure(&ds, &[0], &cfg) {
            Err(Error::Fold { fold, .. }) => assert_eq!(fold, 1),
            other => panic!("unexpected {other:?}"),
        }
        let unlabeled = Dataset::new(ds.features().clone(), ds.feature_names().to_vec(), ds.protected().to_vec(), None).unwrap();
        assert!(run_procedure(&unlabeled, &[0], &ProcedureConfig::default()).is_err());
    }
}
