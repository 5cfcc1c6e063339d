//! One function per subcommand. Each returns a summary for the terminal and
//! writes its files atomically.

use std::path::{Path, PathBuf};

use extr_core::data::{
    gen_biased_gaussian, load_csv_batch, load_csv_reader, load_csv_thresholded, Dataset,
    SyntheticConfig,
};
use extr_core::fairness::{run_procedure, EvalReport, ProcedureConfig};
use extr_core::interp::{fit_interpolation, read_model, repair_new, write_model, EvalOption, InterpolationModel};
use extr_core::mmc::{self, CycleResult, WeightedDigraph};
use extr_core::ndarray::Array2;
use extr_core::ot::total_repair;
use extr_core::timing::{run_bench, BenchConfig, BenchResult};
use extr_core::Error;
use serde::Serialize;

use crate::args::{BenchArgs, EvaluateArgs, Experiment, InterpolateArgs, MmcArgs, RepairArgs, SimulateArgs};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::fsio::write_atomic;

pub const MODEL_FILES: [&str; 2] = ["model_s0.txt", "model_s1.txt"];
pub const REPAIR_SUMMARY: &str = "repair.json";
pub const REPORT_JSON: &str = "report.json";
pub const FOLDS_CSV: &str = "folds.csv";
pub const AGGREGATE_CSV: &str = "aggregate.csv";

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))
}

fn ensure_distinct(input: &Path, output: &Path) -> CliResult<()> {
    let same = input == output
        || matches!(
            (input.canonicalize(), output.canonicalize()),
            (Ok(a), Ok(b)) if a == b
        );
    if same {
        return Err(CliError::Usage(format!(
            "input and output are the same file: {}",
            input.display()
        )));
    }
    Ok(())
}

fn header_of(bytes: &[u8]) -> CliResult<Vec<String>> {
    let mut rdr = csv::Reader::from_reader(bytes);
    let h = rdr.headers().map_err(Error::from)?;
    Ok(h.iter().map(str::to_string).collect())
}

/// Loads a CSV according to the resolved protected/label settings. `batch`
/// relaxes the row-count and two-group requirements for new data.
pub fn load_dataset(path: &Path, cfg: &RunConfig, batch: bool) -> CliResult<Dataset> {
    let bytes = read_bytes(path)?;
    let header = header_of(&bytes)?;
    let label = if header.iter().any(|h| *h == cfg.label_col) {
        Some(cfg.label_col.as_str())
    } else if cfg.label_explicit {
        return Err(Error::MissingColumn(cfg.label_col.clone()).into());
    } else {
        None
    };
    let ds = match cfg.protected_threshold {
        Some(t) => load_csv_thresholded(&bytes[..], &cfg.protected_col, t, label, false)?,
        None if batch => load_csv_batch(&bytes[..], &cfg.protected_col, label)?,
        None => load_csv_reader(&bytes[..], &cfg.protected_col, label)?,
    };
    Ok(ds)
}

/// Indices and names of the columns to repair.
pub fn resolve_columns(ds: &Dataset, cfg: &RunConfig) -> CliResult<(Vec<usize>, Vec<String>)> {
    let names = match &cfg.cols {
        Some(c) => c.clone(),
        None => ds.feature_names().to_vec(),
    };
    Ok((ds.feature_indices(&names)?, names))
}

fn csv_bytes(ds: &Dataset) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    ds.write_csv(&mut buf)?;
    Ok(buf)
}

fn json_bytes<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupSummary {
    pub group: u8,
    pub rows: usize,
    pub eps_star: f64,
    pub eps0: f64,
    pub lipschitz_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairSummary {
    pub config: serde_json::Value,
    pub columns: Vec<String>,
    pub groups: Vec<GroupSummary>,
    pub output: PathBuf,
    pub models: Vec<PathBuf>,
}

pub fn cmd_repair(args: &RepairArgs) -> CliResult<RepairSummary> {
    let cfg = RunConfig::resolve(&args.common)?;
    ensure_distinct(&args.input, &args.output)?;
    let ds = load_dataset(&args.input, &cfg, false)?;
    let (cols, names) = resolve_columns(&ds, &cfg)?;
    let repaired = total_repair(&ds, &cols, cfg.weights())?;
    let fit = cfg.fit_config(&names)?;
    let model_dir = match &args.model_dir {
        Some(d) => d.clone(),
        None => args.output.parent().map(Path::to_path_buf).unwrap_or_default(),
    };

    let mut groups = Vec::new();
    let mut models = Vec::new();
    for (s, map) in [(0u8, &repaired.map0), (1u8, &repaired.map1)] {
        let mut m = fit_interpolation(map, &fit)?;
        m.columns = names.clone();
        let mut buf = Vec::new();
        write_model(&m, &mut buf)?;
        let path = model_dir.join(MODEL_FILES[s as usize]);
        write_atomic(&path, &buf)?;
        groups.push(GroupSummary {
            group: s,
            rows: map.len(),
            eps_star: m.eps_star,
            eps0: m.eps0,
            lipschitz_bound: m.lipschitz_bound(),
        });
        models.push(path);
    }
    write_atomic(&args.output, &csv_bytes(&repaired.repaired)?)?;
    let summary = RepairSummary {
        config: cfg.to_json(),
        columns: names,
        groups,
        output: args.output.clone(),
        models,
    };
    write_atomic(&model_dir.join(REPAIR_SUMMARY), &json_bytes(&summary)?)?;
    Ok(summary)
}

pub fn load_models(dir: &Path) -> CliResult<(InterpolationModel, InterpolationModel)> {
    let load = |s: usize| -> CliResult<InterpolationModel> {
        let path = dir.join(MODEL_FILES[s]);
        let bytes = read_bytes(&path)?;
        let m = read_model(&bytes[..])?;
        if usize::from(m.group) != s {
            return Err(Error::ModelFormat(format!(
                "{} holds the model of group {}",
                path.display(),
                m.group
            ))
            .into());
        }
        Ok(m)
    };
    let (m0, m1) = (load(0)?, load(1)?);
    if m0.columns != m1.columns {
        return Err(Error::ModelFormat("the two models were fitted on different columns".into()).into());
    }
    Ok((m0, m1))
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpolateSummary {
    pub rows: usize,
    pub columns: Vec<String>,
    pub option: EvalOption,
    pub output: PathBuf,
}

pub fn cmd_interpolate(args: &InterpolateArgs) -> CliResult<InterpolateSummary> {
    let cfg = RunConfig::resolve(&args.common)?;
    ensure_distinct(&args.input, &args.output)?;
    let (mut m0, mut m1) = load_models(&args.model_dir)?;
    if m0.columns.is_empty() {
        return Err(Error::ModelFormat("models carry no column names".into()).into());
    }
    if let Some(c) = &cfg.cols {
        if *c != m0.columns {
            return Err(CliError::Usage(format!(
                "--cols {c:?} differs from the model columns {:?}",
                m0.columns
            )));
        }
    }
    if let Some(k) = args.common.option {
        let opt = EvalOption::from_number(k)?;
        m0.option = opt;
        m1.option = opt;
    }
    let ds = load_dataset(&args.input, &cfg, true)?;
    let cols = ds.feature_indices(&m0.columns)?;
    let out = repair_new(&m0, &m1, &ds, &cols)?;
    write_atomic(&args.output, &csv_bytes(&out)?)?;
    Ok(InterpolateSummary {
        rows: ds.n_rows(),
        columns: m0.columns.clone(),
        option: m0.option,
        output: args.output.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MmcSummary {
    pub config: serde_json::Value,
    pub n: usize,
    #[serde(flatten)]
    pub result: CycleResult,
}

/// Reads a square matrix from a header-less CSV.
pub fn read_cost_matrix(path: &Path) -> CliResult<Array2<f64>> {
    let bytes = read_bytes(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(&bytes[..]);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(Error::from)?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, v)| {
                v.parse::<f64>().map_err(|_| Error::NonNumeric {
                    row: r + 1,
                    column: (c + 1).to_string(),
                    value: v.to_string(),
                })
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidData(format!("cost matrix with {n} rows is not square")).into());
    }
    Array2::from_shape_vec((n, n), rows.into_iter().flatten().collect())
        .map_err(|e| Error::InvalidData(e.to_string()).into())
}

pub fn cmd_mmc(args: &MmcArgs) -> CliResult<MmcSummary> {
    let cfg = RunConfig::resolve(&args.common)?;
    let g = WeightedDigraph::new(read_cost_matrix(&args.input)?)?;
    let result = mmc::solve(&g, cfg.solver(), cfg.scale_digits)?;
    let summary = MmcSummary {
        config: serde_json::json!({ "solver": cfg.solver, "scale_digits": cfg.scale_digits }),
        n: g.n(),
        result,
    };
    if let Some(out) = &args.output {
        write_atomic(out, &json_bytes(&summary)?)?;
    }
    Ok(summary)
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<EvalReport> {
    let cfg = RunConfig::resolve(&args.common)?;
    let ds = load_dataset(&args.input, &cfg, false)?;
    if ds.label().is_none() {
        return Err(Error::MissingColumn(cfg.label_col.clone()).into());
    }
    let (cols, names) = resolve_columns(&ds, &cfg)?;
    let pc = ProcedureConfig {
        k: cfg.folds,
        seed: cfg.seed,
        option: cfg.eval_option(),
        weights: cfg.weights(),
        fit: cfg.fit_config(&names)?,
        record_timings: cfg.with_timings,
        ..ProcedureConfig::default()
    };
    let mut report = run_procedure(&ds, &cols, &pc)?;
    report.config = serde_json::json!({ "run": cfg.to_json(), "procedure": report.config });

    let dir = &args.output_dir;
    write_atomic(&dir.join(REPORT_JSON), report.to_json()?.as_bytes())?;
    write_atomic(&dir.join(FOLDS_CSV), report.to_csv()?.as_bytes())?;
    write_atomic(&dir.join(AGGREGATE_CSV), aggregate_csv(&report)?.as_bytes())?;
    Ok(report)
}

fn aggregate_csv(r: &EvalReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    w.write_record([
        "pass", "option", "accuracy_mean", "accuracy_sd", "di_mean", "di_sd", "pooled_di",
        "pooled_di_lo", "pooled_di_hi",
    ])
    .map_err(Error::from)?;
    for p in [&r.aggregate.benchmark, &r.aggregate.repaired] {
        w.write_record([
            p.pass.name().to_string(),
            r.option.number().to_string(),
            p.accuracy_mean.to_string(),
            p.accuracy_sd.to_string(),
            p.di_mean.to_string(),
            p.di_sd.to_string(),
            p.pooled_di.to_string(),
            opt(p.pooled_di_lo),
            opt(p.pooled_di_hi),
        ])
        .map_err(Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::io("csv", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult<Dataset> {
    let cfg = RunConfig::resolve(&args.common)?;
    let mut sc = match args.experiment {
        Experiment::E1a => SyntheticConfig::e1a(cfg.seed),
        Experiment::E1b => SyntheticConfig::e1b(cfg.seed),
        Experiment::E2 => SyntheticConfig::e2(cfg.seed),
    };
    sc.n0 = args.n0.unwrap_or(sc.n0);
    sc.n1 = args.n1.unwrap_or(sc.n1);
    let ds = gen_biased_gaussian(&sc)?;
    write_atomic(&args.output, &csv_bytes(&ds)?)?;
    Ok(ds)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub config: serde_json::Value,
    #[serde(flatten)]
    pub result: BenchResult,
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<BenchSummary> {
    let cfg = RunConfig::resolve(&args.common)?;
    let names: Vec<String> = (1..=3).map(|j| format!("x{j}")).collect();
    let bc = BenchConfig {
        n0: args.n0,
        n1: args.n1,
        k0: args.k0,
        k1: args.k1,
        reps: args.reps,
        seed: cfg.seed,
        weights: cfg.weights(),
        fit: cfg.fit_config(&names)?,
    };
    let result = run_bench(&bc)?;
    let summary = BenchSummary {
        config: cfg.to_json(),
        result,
    };
    if let Some(out) = &args.output {
        write_atomic(out, &json_bytes(&summary)?)?;
    }
    Ok(summary)
}
