//! Tabular datasets with a binary protected attribute.
//!
//! Group `0` is the unprivileged group and group `1` the privileged one. Label
//! `1` is the favorable outcome.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a CSV column ends up inside a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Feature(usize),
    Protected,
    Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Array2<f64>,
    feature_names: Vec<String>,
    protected: Vec<u8>,
    label: Option<Vec<u8>>,
    protected_name: String,
    label_name: Option<String>,
    /// Original string values for a string-valued protected column, `[level 0, level 1]`.
    protected_levels: Option<[String; 2]>,
    layout: Vec<ColumnRole>,
}

impl Dataset {
    /// Builds a dataset with the default column layout: features, then the
    /// protected column, then the label column.
    pub fn new(
        features: Array2<f64>,
        feature_names: Vec<String>,
        protected: Vec<u8>,
        label: Option<Vec<u8>>,
    ) -> Result<Self> {
        let d = features.ncols();
        let mut layout: Vec<ColumnRole> = (0..d).map(ColumnRole::Feature).collect();
        layout.push(ColumnRole::Protected);
        let label_name = label.as_ref().map(|_| "y".to_string());
        if label.is_some() {
            layout.push(ColumnRole::Label);
        }
        let ds = Dataset {
            features,
            feature_names,
            protected,
            label,
            protected_name: "s".to_string(),
            label_name,
            protected_levels: None,
            layout,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn with_names(mut self, protected_name: &str, label_name: Option<&str>) -> Self {
        self.protected_name = protected_name.to_string();
        if self.label.is_some() {
            self.label_name = Some(label_name.unwrap_or("y").to_string());
        }
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.features.nrows();
        if self.features.ncols() == 0 {
            return Err(Error::InvalidData("dataset has no feature columns".into()));
        }
        if self.feature_names.len() != self.features.ncols() {
            return Err(Error::InvalidData(format!(
                "{} feature names for {} feature columns",
                self.feature_names.len(),
                self.features.ncols()
            )));
        }
        if self.protected.len() != n {
            return Err(Error::InvalidData(format!(
                "protected vector has length {}, expected {n}",
                self.protected.len()
            )));
        }
        if self.protected.iter().any(|&s| s > 1) {
            return Err(Error::InvalidData("protected values must be 0 or 1".into()));
        }
        if let Some(y) = &self.label {
            if y.len() != n {
                return Err(Error::InvalidData(format!(
                    "label vector has length {}, expected {n}",
                    y.len()
                )));
            }
            if y.iter().any(|&v| v > 1) {
                return Err(Error::InvalidData("label values must be 0 or 1".into()));
            }
        }
        if let Some((i, j)) = self
            .features
            .indexed_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|(ix, _)| ix)
        {
            return Err(Error::InvalidData(format!(
                "non-finite feature value at row {i}, column {}",
                self.feature_names[j]
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn protected(&self) -> &[u8] {
        &self.protected
    }

    pub fn label(&self) -> Option<&[u8]> {
        self.label.as_deref()
    }

    pub fn protected_name(&self) -> &str {
        &self.protected_name
    }

    pub fn label_name(&self) -> Option<&str> {
        self.label_name.as_deref()
    }

    pub fn group_sizes(&self) -> (usize, usize) {
        let n1 = self.protected.iter().filter(|&&s| s == 1).count();
        (self.n_rows() - n1, n1)
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Resolves column names to feature indices, preserving the given order.
    pub fn feature_indices(&self, names: &[String]) -> Result<Vec<usize>> {
        names.iter().map(|c| self.feature_index(c)).collect()
    }

    /// Returns a copy with the feature matrix replaced. Shape must match.
    pub fn with_features(&self, features: Array2<f64>) -> Result<Self> {
        if features.dim() != self.features.dim() {
            return Err(Error::InvalidData(format!(
                "replacement features have shape {:?}, expected {:?}",
                features.dim(),
                self.features.dim()
            )));
        }
        let mut out = self.clone();
        out.features = features;
        out.validate()?;
        Ok(out)
    }

    /// Returns a copy with the protected attribute swapped (`s -> 1 - s`).
    pub fn with_swapped_groups(&self) -> Self {
        let mut out = self.clone();
        out.protected.iter_mut().for_each(|s| *s = 1 - *s);
        if let Some([a, b]) = out.protected_levels.take() {
            out.protected_levels = Some([b, a]);
        }
        out
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut out = self.clone();
        out.features = self.features.select(Axis(0), indices);
        out.protected = indices.iter().map(|&i| self.protected[i]).collect();
        out.label = self
            .label
            .as_ref()
            .map(|y| indices.iter().map(|&i| y[i]).collect());
        out
    }

    fn ensure_both_groups(&self) -> Result<()> {
        let (n0, n1) = self.group_sizes();
        if n0 == 0 {
            return Err(Error::EmptyGroup(0));
        }
        if n1 == 0 {
            return Err(Error::EmptyGroup(1));
        }
        Ok(())
    }

    /// Writes the dataset as CSV in its original column layout.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<&str> = self
            .layout
            .iter()
            .map(|role| match role {
                ColumnRole::Feature(j) => self.feature_names[*j].as_str(),
                ColumnRole::Protected => self.protected_name.as_str(),
                ColumnRole::Label => self.label_name.as_deref().unwrap_or("y"),
            })
            .collect();
        w.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.n_rows() {
            record.clear();
            for role in &self.layout {
                record.push(match role {
                    ColumnRole::Feature(j) => format_float(self.features[[i, *j]]),
                    ColumnRole::Protected => match &self.protected_levels {
                        Some(levels) => levels[self.protected[i] as usize].clone(),
                        None => self.protected[i].to_string(),
                    },
                    ColumnRole::Label => self.label.as_ref().map_or(0, |y| y[i]).to_string(),
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}

fn parse_binary(value: &str) -> Option<u8> {
    match value.trim() {
        "0" | "0.0" => Some(0),
        "1" | "1.0" => Some(1),
        _ => None,
    }
}

fn parse_number(value: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = value.trim().parse().map_err(|_| Error::NonNumeric {
        row,
        column: column.to_string(),
        value: value.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonNumeric {
            row,
            column: column.to_string(),
            value: value.to_string(),
        });
    }
    Ok(v)
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(rec.iter().map(|s| s.to_string()).collect());
    }
    Ok(Table { header, rows })
}

/// Parses a protected column: `{0,1}` directly, otherwise exactly two distinct
/// strings mapped to 0/1 by lexical order.
fn parse_protected(values: &[&str], column: &str) -> Result<(Vec<u8>, Option<[String; 2]>)> {
    if let Some(parsed) = values.iter().map(|v| parse_binary(v)).collect::<Option<Vec<u8>>>() {
        return Ok((parsed, None));
    }
    let levels: BTreeSet<&str> = values.iter().map(|v| v.trim()).collect();
    if levels.len() != 2 {
        return Err(Error::InvalidData(format!(
            "protected column `{column}` must be 0/1 or take exactly two distinct values, found {}",
            levels.len()
        )));
    }
    let mut it = levels.into_iter();
    let lo = it.next().unwrap().to_string();
    let hi = it.next().unwrap().to_string();
    let parsed = values
        .iter()
        .map(|v| u8::from(v.trim() == hi))
        .collect();
    Ok((parsed, Some([lo, hi])))
}

fn load_from_table(
    table: Table,
    protected_col: &str,
    label_col: Option<&str>,
    require_groups: bool,
) -> Result<Dataset> {
    let Table { header, rows } = table;
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let p_idx = find(protected_col)?;
    let l_idx = label_col.map(find).transpose()?;
    let min_rows = if require_groups { 2 } else { 1 };
    if rows.len() < min_rows {
        return Err(Error::InvalidData(format!(
            "need at least {min_rows} data rows, found {}",
            rows.len()
        )));
    }
    let mut layout = Vec::with_capacity(header.len());
    let mut feature_cols = Vec::new();
    for (c, _) in header.iter().enumerate() {
        if c == p_idx {
            layout.push(ColumnRole::Protected);
        } else if Some(c) == l_idx {
            layout.push(ColumnRole::Label);
        } else {
            layout.push(ColumnRole::Feature(feature_cols.len()));
            feature_cols.push(c);
        }
    }
    if feature_cols.is_empty() {
        return Err(Error::InvalidData("no feature columns".into()));
    }
    let n = rows.len();
    let d = feature_cols.len();
    let mut features = Array2::<f64>::zeros((n, d));
    for (r, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::InvalidData(format!(
                "row {} has {} fields, expected {}",
                r + 1,
                row.len(),
                header.len()
            )));
        }
        for (j, &c) in feature_cols.iter().enumerate() {
            features[[r, j]] = parse_number(&row[c], r + 1, &header[c])?;
        }
    }
    let pvals: Vec<&str> = rows.iter().map(|r| r[p_idx].as_str()).collect();
    let (protected, protected_levels) = parse_protected(&pvals, protected_col)?;
    let label = match l_idx {
        Some(li) => Some(
            rows.iter()
                .enumerate()
                .map(|(r, row)| {
                    parse_binary(&row[li]).ok_or_else(|| {
                        Error::InvalidData(format!(
                            "label value `{}` at row {} is not 0/1",
                            row[li],
                            r + 1
                        ))
                    })
                })
                .collect::<Result<Vec<u8>>>()?,
        ),
        None => None,
    };
    let ds = Dataset {
        features,
        feature_names: feature_cols.iter().map(|&c| header[c].clone()).collect(),
        protected,
        label,
        protected_name: protected_col.to_string(),
        label_name: label_col.map(str::to_string),
        protected_levels,
        layout,
    };
    ds.validate()?;
    if require_groups {
        ds.ensure_both_groups()?;
    }
    Ok(ds)
}

/// Loads a CSV file with a header row. Every column other than the protected
/// and label columns must be numeric.
pub fn load_csv(
    path: impl AsRef<Path>,
    protected_col: &str,
    label_col: Option<&str>,
) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, protected_col, label_col)
}

pub fn load_csv_reader<R: Read>(
    reader: R,
    protected_col: &str,
    label_col: Option<&str>,
) -> Result<Dataset> {
    load_from_table(read_table(reader)?, protected_col, label_col, true)
}

/// Loads a batch of new rows. Unlike [`load_csv_reader`] a single row is
/// enough and one group may be absent.
pub fn load_csv_batch<R: Read>(
    reader: R,
    protected_col: &str,
    label_col: Option<&str>,
) -> Result<Dataset> {
    load_from_table(read_table(reader)?, protected_col, label_col, false)
}

/// Loads a CSV whose protected attribute is derived from a numeric column:
/// `s = 1` when the value is strictly above `threshold`. The column stays a
/// feature unless `drop_column` is set.
pub fn load_csv_thresholded<R: Read>(
    reader: R,
    column: &str,
    threshold: f64,
    label_col: Option<&str>,
    drop_column: bool,
) -> Result<Dataset> {
    let mut table = read_table(reader)?;
    // A placeholder protected column lets the regular loader handle parsing.
    let placeholder = "__extr_protected__";
    table.header.push(placeholder.to_string());
    for row in &mut table.rows {
        row.push("0".to_string());
    }
    let mut ds = load_from_table(table, placeholder, label_col, false)?;
    ds.layout.retain(|r| *r != ColumnRole::Protected);
    ds.protected_name = column.to_string();
    binarize_protected_age(&ds, column, threshold, drop_column)
}

/// Replaces the protected attribute by `age > threshold` (senior = privileged).
///
/// The previous protected column is discarded. When `drop_age` is set the age
/// column is removed from the features.
pub fn binarize_protected_age(
    ds: &Dataset,
    age_col: &str,
    threshold: f64,
    drop_age: bool,
) -> Result<Dataset> {
    let a = ds.feature_index(age_col)?;
    let protected: Vec<u8> = ds
        .features
        .column(a)
        .iter()
        .map(|&age| u8::from(age > threshold))
        .collect();
    let mut out = ds.clone();
    out.protected = protected;
    out.protected_levels = None;
    out.protected_name = format!("{age_col}_gt_{}", format_float(threshold));
    if !out.layout.contains(&ColumnRole::Protected) {
        out.layout.push(ColumnRole::Protected);
    }
    if drop_age {
        if ds.n_features() == 1 {
            return Err(Error::InvalidData(
                "dropping the age column would leave no features".into(),
            ));
        }
        let keep: Vec<usize> = (0..ds.n_features()).filter(|&j| j != a).collect();
        out.features = ds.features.select(Axis(1), &keep);
        out.feature_names = keep.iter().map(|&j| ds.feature_names[j].clone()).collect();
        out.layout.retain(|r| *r != ColumnRole::Feature(a));
        for r in &mut out.layout {
            if let ColumnRole::Feature(j) = r {
                if *j > a {
                    *j -= 1;
                }
            }
        }
    }
    out.validate()?;
    Ok(out)
}

/// The two group subsamples of a dataset, with their original row positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedData {
    pub group0: Array2<f64>,
    pub group1: Array2<f64>,
    pub row_index0: Vec<usize>,
    pub row_index1: Vec<usize>,
}

impl GroupedData {
    pub fn sizes(&self) -> (usize, usize) {
        (self.group0.nrows(), self.group1.nrows())
    }

    pub fn group(&self, s: u8) -> &Array2<f64> {
        if s == 0 {
            &self.group0
        } else {
            &self.group1
        }
    }

    /// Reassembles a full matrix from per-group matrices using the stored row indices.
    pub fn merge(&self, group0: &Array2<f64>, group1: &Array2<f64>) -> Array2<f64> {
        let n = self.row_index0.len() + self.row_index1.len();
        let d = group0.ncols();
        let mut out = Array2::<f64>::zeros((n, d));
        for (k, &r) in self.row_index0.iter().enumerate() {
            out.row_mut(r).assign(&group0.row(k));
        }
        for (k, &r) in self.row_index1.iter().enumerate() {
            out.row_mut(r).assign(&group1.row(k));
        }
        out
    }
}

/// Partitions rows by protected group, preserving order within each group.
pub fn split_by_group(ds: &Dataset) -> Result<GroupedData> {
    ds.ensure_both_groups()?;
    let (row_index0, row_index1): (Vec<usize>, Vec<usize>) =
        (0..ds.n_rows()).partition(|&i| ds.protected[i] == 0);
    Ok(GroupedData {
        group0: ds.features.select(Axis(0), &row_index0),
        group1: ds.features.select(Axis(0), &row_index1),
        row_index0,
        row_index1,
    })
}

/// Two Gaussian groups with group-specific logistic label models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n0: usize,
    pub n1: usize,
    pub means0: Vec<f64>,
    pub means1: Vec<f64>,
    pub cov_diag: Vec<f64>,
    /// Intercept first.
    pub beta0: Vec<f64>,
    pub beta1: Vec<f64>,
    pub seed: u64,
}

impl SyntheticConfig {
    /// Balanced five-dimensional configuration (200 + 200 rows).
    ///
    /// The published coefficient vectors list the intercept last; they are
    /// stored here rotated into the intercept-first convention.
    pub fn e1a(seed: u64) -> Self {
        SyntheticConfig {
            n0: 200,
            n1: 200,
            means0: vec![3.0, 3.0, 2.0, 2.5, 3.5],
            means1: vec![4.0, 4.0, 3.0, 3.5, 4.5],
            cov_diag: vec![1.0, 1.0, 0.5, 0.5, 1.0],
            beta0: vec![1.0, 1.0, -1.0, -0.5, 1.0, -1.0],
            beta1: vec![-0.5, 1.0, -0.4, 1.0, -1.0, 1.0],
            seed,
        }
    }

    /// Same distributions as [`SyntheticConfig::e1a`] with 200 + 300 rows.
    pub fn e1b(seed: u64) -> Self {
        SyntheticConfig {
            n1: 300,
            ..Self::e1a(seed)
        }
    }

    /// Three-dimensional offline configuration (200 + 200 rows). Use
    /// [`SyntheticConfig::with_sizes`] for the online batch.
    pub fn e2(seed: u64) -> Self {
        SyntheticConfig {
            n0: 200,
            n1: 200,
            means0: vec![0.0, 0.0, 0.0],
            means1: vec![1.5, 2.0, 1.0],
            cov_diag: vec![1.0, 0.5, 1.0],
            beta0: vec![-0.5, 1.0, -1.0, 0.5],
            beta1: vec![0.5, 1.0, -1.0, 0.5],
            seed,
        }
    }

    pub fn with_sizes(mut self, n0: usize, n1: usize) -> Self {
        self.n0 = n0;
        self.n1 = n1;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.means0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if self.means1.len() != d || self.cov_diag.len() != d {
            return Err(Error::InvalidArgument(
                "means0, means1 and cov_diag must have equal length".into(),
            ));
        }
        if self.beta0.len() != d + 1 || self.beta1.len() != d + 1 {
            return Err(Error::InvalidArgument(format!(
                "beta vectors must have length d + 1 = {}",
                d + 1
            )));
        }
        if self.cov_diag.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(
                "cov_diag entries must be positive and finite".into(),
            ));
        }
        if self.n0 == 0 || self.n1 == 0 {
            return Err(Error::InvalidArgument("both group sizes must be positive".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Draws a labeled dataset from `cfg`. Group 0 rows come first.
///
/// Each group uses its own ChaCha8 stream (stream id = group), so changing one
/// group's size leaves the other group's draws unchanged. Within a group, each
/// row draws its `d` standard normals (ziggurat) and then one uniform for the
/// label.
pub fn gen_biased_gaussian(cfg: &SyntheticConfig) -> Result<Dataset> {
    cfg.validate()?;
    let d = cfg.dim();
    let n = cfg.n0 + cfg.n1;
    let mut features = Array2::<f64>::zeros((n, d));
    let mut protected = Vec::with_capacity(n);
    let mut label = Vec::with_capacity(n);
    let sd: Vec<f64> = cfg.cov_diag.iter().map(|v| v.sqrt()).collect();
    let mut row = 0;
    for (s, count, means, beta) in [
        (0u8, cfg.n0, &cfg.means0, &cfg.beta0),
        (1u8, cfg.n1, &cfg.means1, &cfg.beta1),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(u64::from(s));
        for _ in 0..count {
            let mut z = beta[0];
            for j in 0..d {
                let e: f64 = rng.sample(StandardNormal);
                let x = means[j] + sd[j] * e;
                features[[row, j]] = x;
                z += beta[j + 1] * x;
            }
            let u: f64 = rng.random();
            label.push(u8::from(u < sigmoid(z)));
            protected.push(s);
            row += 1;
        }
    }
    let names = (1..=d).map(|j| format!("x{j}")).collect();
    Dataset::new(features, names, protected, Some(label))
}

/// Assignment of every row to one of `k` folds (ids `0..k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Stratified K-fold split.
///
/// Strata are `(S, Y)` when labels exist, `S` otherwise. If any stratum has
/// fewer than `k` rows, falls back to stratifying by `S` alone (and then to no
/// stratification). Rows of each stratum are shuffled and dealt round-robin,
/// continuing the fold counter across strata, so fold sizes differ by at most one.
pub fn kfold_split(ds: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = ds.n_rows();
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count must satisfy 2 <= K <= n = {n}, got {k}"
        )));
    }
    let by_sy: Vec<usize> = (0..n)
        .map(|i| {
            let y = ds.label().map_or(0, |y| usize::from(y[i]));
            2 * usize::from(ds.protected[i]) + y
        })
        .collect();
    let by_s: Vec<usize> = ds.protected.iter().map(|&s| usize::from(s)).collect();
    let strata_ok = |keys: &[usize]| {
        let mut counts = [0usize; 4];
        keys.iter().for_each(|&c| counts[c] += 1);
        counts.iter().all(|&c| c == 0 || c >= k)
    };
    let keys = if strata_ok(&by_sy) {
        by_sy
    } else if strata_ok(&by_s) {
        log::warn!("a (S, Y) stratum is smaller than K = {k}; stratifying by S only");
        by_s
    } else {
        log::warn!("a protected group is smaller than K = {k}; folds are not stratified");
        vec![0; n]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0usize; n];
    let mut next = 0usize;
    for key in 0..4 {
        let mut members: Vec<usize> = (0..n).filter(|&i| keys[i] == key).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Squared Euclidean distance between two rows.
pub fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}
