//! Resolution of run settings: command-line flags override the TOML config
//! file, which overrides the built-in defaults.

use std::path::Path;

use extr_core::interp::{EvalOption, FitConfig, SgdConfig, Step1Interval};
use extr_core::mmc::Solver;
use extr_core::ot::Weights;
use serde::{Deserialize, Serialize};

use crate::args::{CommonArgs, SolverArg, WeightsArg};
use crate::error::{CliError, CliResult};

/// Keys accepted in a `--config` file; names match the long flags with
/// underscores.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub cols: Option<Vec<String>>,
    pub protected_col: Option<String>,
    pub protected_threshold: Option<f64>,
    pub label_col: Option<String>,
    pub option: Option<u8>,
    pub folds: Option<usize>,
    pub weights: Option<WeightsArg>,
    pub scale_digits: Option<u32>,
    pub solver: Option<SolverArg>,
    pub sgd_epochs: Option<usize>,
    pub rtol1: Option<f64>,
    pub rtol2: Option<f64>,
    pub density_threshold: Option<f64>,
    pub step1_interval: Option<String>,
    pub step1_column: Option<String>,
    pub with_timings: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }
}

/// Fully resolved settings, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub cols: Option<Vec<String>>,
    pub protected_col: String,
    pub protected_threshold: Option<f64>,
    pub label_col: String,
    /// Whether the label column was named explicitly; a default name that is
    /// missing from the file just means "no label".
    #[serde(skip)]
    pub label_explicit: bool,
    pub option: u8,
    pub folds: usize,
    pub weights: WeightsArg,
    pub scale_digits: u32,
    pub solver: SolverArg,
    pub sgd_epochs: usize,
    pub rtol1: f64,
    pub rtol2: f64,
    pub density_threshold: f64,
    pub step1_interval: Option<[f64; 2]>,
    pub step1_column: Option<String>,
    pub with_timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sgd = SgdConfig::default();
        let fit = FitConfig::default();
        RunConfig {
            seed: 0,
            cols: None,
            protected_col: "s".into(),
            protected_threshold: None,
            label_col: "y".into(),
            label_explicit: false,
            option: EvalOption::default().number(),
            folds: 10,
            weights: WeightsArg::Empirical,
            scale_digits: fit.scale_digits,
            solver: SolverArg::Hybrid,
            sgd_epochs: sgd.max_epochs,
            rtol1: sgd.rtol1,
            rtol2: sgd.rtol2,
            density_threshold: fit.density_threshold,
            step1_interval: None,
            step1_column: None,
            with_timings: false,
        }
    }
}

/// Parses `"a,b"`, optionally wrapped in brackets.
pub fn parse_interval(s: &str) -> CliResult<[f64; 2]> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("interval `{s}` is not of the form a,b with a <= b"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    if !(lo <= hi) {
        return Err(bad());
    }
    Ok([lo, hi])
}

impl RunConfig {
    /// Reads `--config` when given and merges it with the flags.
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        Self::merge(args, &file)
    }

    pub fn merge(args: &CommonArgs, file: &FileConfig) -> CliResult<Self> {
        let d = RunConfig::default();
        let label = args.label_col.clone().or_else(|| file.label_col.clone());
        let interval = match args.step1_interval.as_deref().or(file.step1_interval.as_deref()) {
            Some(s) => Some(parse_interval(s)?),
            None => None,
        };
        let cfg = RunConfig {
            seed: args.seed.or(file.seed).unwrap_or(d.seed),
            cols: args.cols.clone().or_else(|| file.cols.clone()),
            protected_col: args
                .protected_col
                .clone()
                .or_else(|| file.protected_col.clone())
                .unwrap_or(d.protected_col),
            protected_threshold: args.protected_threshold.or(file.protected_threshold),
            label_explicit: label.is_some(),
            label_col: label.unwrap_or(d.label_col),
            option: args.option.or(file.option).unwrap_or(d.option),
            folds: args.folds.or(file.folds).unwrap_or(d.folds),
            weights: args.weights.or(file.weights).unwrap_or(d.weights),
            scale_digits: args.scale_digits.or(file.scale_digits).unwrap_or(d.scale_digits),
            solver: args.solver.or(file.solver).unwrap_or(d.solver),
            sgd_epochs: args.sgd_epochs.or(file.sgd_epochs).unwrap_or(d.sgd_epochs),
            rtol1: args.rtol1.or(file.rtol1).unwrap_or(d.rtol1),
            rtol2: args.rtol2.or(file.rtol2).unwrap_or(d.rtol2),
            density_threshold: args
                .density_threshold
                .or(file.density_threshold)
                .unwrap_or(d.density_threshold),
            step1_interval: interval,
            step1_column: args.step1_column.clone().or_else(|| file.step1_column.clone()),
            with_timings: args.with_timings || file.with_timings.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        if !(1..=3).contains(&self.option) {
            return usage(format!("option must be 1, 2 or 3, got {}", self.option));
        }
        if self.folds < 2 {
            return usage(format!("need at least 2 folds, got {}", self.folds));
        }
        if self.scale_digits > 15 {
            return usage(format!("scale digits must be at most 15, got {}", self.scale_digits));
        }
        if self.sgd_epochs == 0 {
            return usage("sgd epochs must be positive".into());
        }
        if !(self.rtol1 > 0.0 && self.rtol2 > 0.0) {
            return usage("tolerances must be positive".into());
        }
        if !(self.density_threshold >= 0.0) {
            return usage("density threshold must be nonnegative".into());
        }
        if self.cols.as_ref().is_some_and(|c| c.is_empty()) {
            return usage("empty column list".into());
        }
        Ok(())
    }

    pub fn eval_option(&self) -> EvalOption {
        EvalOption::from_number(self.option).expect("validated")
    }

    pub fn weights(&self) -> Weights {
        match self.weights {
            WeightsArg::Empirical => Weights::Empirical,
            WeightsArg::Half => Weights::Half,
        }
    }

    pub fn solver(&self) -> Solver {
        match self.solver {
            SolverArg::Hybrid => Solver::Hybrid,
            SolverArg::Karp => Solver::Karp,
        }
    }

    pub fn sgd(&self) -> SgdConfig {
        SgdConfig {
            max_epochs: self.sgd_epochs,
            rtol1: self.rtol1,
            rtol2: self.rtol2,
            seed: self.seed,
            ..SgdConfig::default()
        }
    }

    /// Fitting settings for models over the named columns, in order.
    pub fn fit_config(&self, columns: &[String]) -> CliResult<FitConfig> {
        let interval = match self.step1_interval {
            None => None,
            Some([lo, hi]) => {
                let column = match &self.step1_column {
                    None => 0,
                    Some(name) => columns.iter().position(|c| c == name).ok_or_else(|| {
                        CliError::Usage(format!("interval column `{name}` is not among the repaired columns"))
                    })?,
                };
                Some(Step1Interval { column, lo, hi })
            }
        };
        Ok(FitConfig {
            option: self.eval_option(),
            solver: self.solver(),
            scale_digits: self.scale_digits,
            sgd: self.sgd(),
            density_threshold: self.density_threshold,
            interval,
            ..FitConfig::default()
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("run config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_flags_or_file() {
        let c = RunConfig::merge(&CommonArgs::default(), &FileConfig::default()).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.option, 2);
        assert!(!c.label_explicit);
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file: FileConfig = toml::from_str(
            "seed = 7\nfolds = 5\noption = 3\nweights = \"half\"\nstep1_interval = \"0,6000\"",
        )
        .unwrap();
        let args = CommonArgs {
            seed: Some(11),
            ..CommonArgs::default()
        };
        let c = RunConfig::merge(&args, &file).unwrap();
        assert_eq!(c.seed, 11);
        assert_eq!(c.folds, 5);
        assert_eq!(c.option, 3);
        assert_eq!(c.weights, WeightsArg::Half);
        assert_eq!(c.step1_interval, Some([0.0, 6000.0]));
        assert_eq!(c.rtol1, 1e-9);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let file: FileConfig = toml::from_str("option = 4").unwrap();
        let e = RunConfig::merge(&CommonArgs::default(), &file).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(toml::from_str::<FileConfig>("unknown_key = 1").is_err());
        let args = CommonArgs {
            folds: Some(1),
            ..CommonArgs::default()
        };
        assert!(RunConfig::merge(&args, &FileConfig::default()).is_err());
    }

    #[test]
    fn intervals() {
        assert_eq!(parse_interval("[0,6000]").unwrap(), [0.0, 6000.0]);
        assert_eq!(parse_interval(" 1.5 , 2 ").unwrap(), [1.5, 2.0]);
        assert!(parse_interval("3,1").is_err());
        assert!(parse_interval("1").is_err());
        assert!(parse_interval("a,b").is_err());
    }

    #[test]
    fn interval_column_lookup() {
        let c = RunConfig {
            step1_interval: Some([0.0, 1.0]),
            step1_column: Some("b".into()),
            ..RunConfig::default()
        };
        let fit = c.fit_config(&["a".into(), "b".into()]).unwrap();
        assert_eq!(fit.interval.unwrap().column, 1);
        assert!(c.fit_config(&["a".into()]).is_err());
    }
}
