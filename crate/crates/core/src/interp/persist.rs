//! Plain-text model files.
//!
//! ```text
//! extr-model v1
//! group 0
//! columns x1 x2            (may be empty)
//! option regularized
//! frame unit-ball
//! dim 2
//! anchors 3
//! nodes 3
//! eps_star 0.41
//! eps0 0.205
//! center 1.5 2
//! radius 0.8
//! density 0.05 0.31        (threshold, radius)
//! interval none            (or: interval <column> <lo> <hi>)
//! sgd 100000 1e-9 1e-7 0 true true
//! src <d values>           (one line per anchor)
//! dst <d values>           (one line per anchor)
//! node <anchors values>
//! image <d values>         (one line per node)
//! psi <nodes values>
//! ```
//!
//! Floats use the shortest representation that parses back to the same value,
//! so a saved model reloads bit for bit.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use super::model::{EvalOption, Frame, InterpolationModel, Step1Interval};
use super::prox::SgdConfig;
use crate::data::format_float;
use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;
const MAGIC: &str = "extr-model";

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(format_float).collect::<Vec<_>>().join(" ")
}

pub fn write_model<W: Write>(m: &InterpolationModel, mut w: W) -> Result<()> {
    writeln!(w, "{MAGIC} v{MODEL_VERSION}")?;
    writeln!(w, "group {}", m.group)?;
    writeln!(w, "columns {}", m.columns.join(" "))?;
    writeln!(w, "option {}", m.option.name())?;
    writeln!(w, "frame {}", m.frame.name())?;
    writeln!(w, "dim {}", m.dim())?;
    writeln!(w, "anchors {}", m.n_anchors())?;
    writeln!(w, "nodes {}", m.images.nrows())?;
    writeln!(w, "eps_star {}", format_float(m.eps_star))?;
    writeln!(w, "eps0 {}", format_float(m.eps0))?;
    writeln!(w, "center {}", join(m.center.iter().copied()))?;
    writeln!(w, "radius {}", format_float(m.radius))?;
    writeln!(
        w,
        "density {} {}",
        format_float(m.density_threshold),
        format_float(m.density_radius)
    )?;
    match &m.interval {
        None => writeln!(w, "interval none")?,
        Some(iv) => writeln!(
            w,
            "interval {} {} {}",
            iv.column,
            format_float(iv.lo),
            format_float(iv.hi)
        )?,
    }
    let s = &m.sgd;
    writeln!(
        w,
        "sgd {} {} {} {} {} {}",
        s.max_epochs,
        format_float(s.rtol1),
        format_float(s.rtol2),
        s.seed,
        s.exact_1d,
        s.refine
    )?;
    for r in m.anchors_src.rows() {
        writeln!(w, "src {}", join(r.iter().copied()))?;
    }
    for r in m.anchors_dst.rows() {
        writeln!(w, "dst {}", join(r.iter().copied()))?;
    }
    let nodes: Vec<String> = m.node_of.iter().map(usize::to_string).collect();
    writeln!(w, "node {}", nodes.join(" "))?;
    for r in m.images.rows() {
        writeln!(w, "image {}", join(r.iter().copied()))?;
    }
    writeln!(w, "psi {}", join(m.psi.iter().copied()))?;
    w.flush()?;
    Ok(())
}

pub fn save_model(m: &InterpolationModel, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_model(m, std::io::BufWriter::new(f))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<InterpolationModel> {
    let f = std::fs::File::open(path)?;
    read_model(BufReader::new(f))
}

struct Lines<R: BufRead> {
    inner: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> Lines<R> {
    /// Next line, which must start with `key`; returns the remaining fields.
    fn expect(&mut self, key: &str) -> Result<Vec<String>> {
        self.line_no += 1;
        let line = self
            .inner
            .next()
            .ok_or_else(|| Error::ModelFormat(format!("unexpected end of file, expected `{key}`")))??;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok(parts.map(str::to_string).collect()),
            other => Err(Error::ModelFormat(format!(
                "line {}: expected `{key}`, found `{}`",
                self.line_no,
                other.unwrap_or("")
            ))),
        }
    }

    fn one<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.expect(key)?;
        if v.len() != 1 {
            return Err(Error::ModelFormat(format!(
                "line {}: `{key}` takes one value",
                self.line_no
            )));
        }
        parse(&v[0], key)
    }

    fn floats(&mut self, key: &str, len: usize) -> Result<Vec<f64>> {
        let v = self.expect(key)?;
        if v.len() != len {
            return Err(Error::ModelFormat(format!(
                "line {}: `{key}` has {} values, expected {len}",
                self.line_no,
                v.len()
            )));
        }
        v.iter().map(|s| parse(s, key)).collect()
    }

    fn matrix(&mut self, key: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            data.extend(self.floats(key, cols)?);
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked per row"))
    }
}

fn parse<T: FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::ModelFormat(format!("bad value `{s}` for `{key}`")))
}

pub fn read_model<R: BufRead>(r: R) -> Result<InterpolationModel> {
    let mut lines = Lines {
        inner: r.lines(),
        line_no: 0,
    };
    let header = lines.expect(MAGIC)?;
    let expected = format!("v{MODEL_VERSION}");
    if header.len() != 1 || header[0] != expected {
        return Err(Error::ModelFormat(format!(
            "unsupported model version `{}`, this build reads {expected}",
            header.join(" ")
        )));
    }
    let group: u8 = lines.one("group")?;
    if group > 1 {
        return Err(Error::ModelFormat(format!("group {group} is not 0 or 1")));
    }
    let columns = lines.expect("columns")?;
    let option = match lines.one::<String>("option")?.as_str() {
        "step1" => EvalOption::Step1,
        "regularized" => EvalOption::Regularized,
        "hybrid" => EvalOption::Hybrid,
        o => return Err(Error::ModelFormat(format!("unknown option `{o}`"))),
    };
    let frame = match lines.one::<String>("frame")?.as_str() {
        "unit-ball" => Frame::UnitBall,
        "raw" => Frame::Raw,
        f => return Err(Error::ModelFormat(format!("unknown frame `{f}`"))),
    };
    let d: usize = lines.one("dim")?;
    let n: usize = lines.one("anchors")?;
    let nodes: usize = lines.one("nodes")?;
    if d == 0 || n < 2 || nodes < 2 || nodes > n {
        return Err(Error::ModelFormat(format!(
            "inconsistent sizes: dim {d}, anchors {n}, nodes {nodes}"
        )));
    }
    if !columns.is_empty() && columns.len() != d {
        return Err(Error::ModelFormat(format!(
            "{} column names for dimension {d}",
            columns.len()
        )));
    }
    let eps_star: f64 = lines.one("eps_star")?;
    let eps0: f64 = lines.one("eps0")?;
    let center = Array1::from(lines.floats("center", d)?);
    let radius: f64 = lines.one("radius")?;
    let density = lines.floats("density", 2)?;
    let iv = lines.expect("interval")?;
    let interval = match iv.as_slice() {
        [none] if none == "none" => None,
        [c, lo, hi] => Some(Step1Interval {
            column: parse(c, "interval")?,
            lo: parse(lo, "interval")?,
            hi: parse(hi, "interval")?,
        }),
        _ => return Err(Error::ModelFormat("malformed `interval` line".into())),
    };
    let sg = lines.expect("sgd")?;
    if sg.len() != 6 {
        return Err(Error::ModelFormat("`sgd` takes six values".into()));
    }
    let sgd = SgdConfig {
        max_epochs: parse(&sg[0], "sgd")?,
        rtol1: parse(&sg[1], "sgd")?,
        rtol2: parse(&sg[2], "sgd")?,
        seed: parse(&sg[3], "sgd")?,
        exact_1d: parse(&sg[4], "sgd")?,
        refine: parse(&sg[5], "sgd")?,
    };
    let anchors_src = lines.matrix("src", n, d)?;
    let anchors_dst = lines.matrix("dst", n, d)?;
    let node_of: Vec<usize> = lines
        .expect("node")?
        .iter()
        .map(|s| parse(s, "node"))
        .collect::<Result<_>>()?;
    if node_of.len() != n || node_of.iter().any(|&k| k >= nodes) {
        return Err(Error::ModelFormat("malformed `node` line".into()));
    }
    let images = lines.matrix("image", nodes, d)?;
    let psi = lines.floats("psi", nodes)?;
    let finite = [eps_star, eps0, radius, density[0], density[1]]
        .iter()
        .chain(center.iter())
        .chain(anchors_src.iter())
        .chain(anchors_dst.iter())
        .chain(images.iter())
        .chain(psi.iter())
        .all(|v| v.is_finite());
    if !finite || !(eps0 > 0.0) || !(radius > 0.0) {
        return Err(Error::ModelFormat("non-finite or nonpositive parameters".into()));
    }
    let mut m = InterpolationModel {
        group,
        columns,
        anchors_src,
        anchors_dst,
        images,
        node_of,
        psi,
        eps_star,
        eps0,
        frame,
        center,
        radius,
        option,
        density_threshold: density[0],
        density_radius: density[1],
        interval,
        sgd,
        slopes: Array2::zeros((0, d)),
    };
    m.rebuild_slopes();
    Ok(m)
}
