//! Signal CSV files, model and truth JSON files.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use hankel_core::{Complex64, ComplexMatrix, ExpModel1D, ExpModel2D};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Complex number as `[re, im]`.
pub type Pair = [f64; 2];

pub fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

pub fn complex(p: Pair) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub enum Signal {
    OneD(Vec<Complex64>),
    TwoD(ComplexMatrix),
}

fn open(path: &Path) -> Result<String, CliError> {
    let mut s = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(s)
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str, line: u64) -> Result<T, CliError> {
    let raw = field.ok_or_else(|| CliError::Input(format!("line {line}: missing column `{name}`")))?;
    raw.trim().parse().map_err(|_| CliError::Input(format!("line {line}: cannot parse `{name}` from {raw:?}")))
}

/// Reads a signal with header `n,re,im` (1D) or `n1,n2,re,im` (2D,
/// row-major, complete grid).
pub fn read_signal(path: &Path) -> Result<Signal, CliError> {
    let text = open(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Input(format!("line 1: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let is_2d = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["n", "re", "im"] => false,
        ["n1", "n2", "re", "im"] => true,
        _ => {
            return Err(CliError::Input(format!(
                "line 1: expected header `n,re,im` or `n1,n2,re,im`, found `{}`",
                header.join(",")
            )))
        }
    };
    let mut rows: Vec<(usize, usize, Complex64, u64)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Input(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let cols = if is_2d { 4 } else { 3 };
        if record.len() != cols {
            return Err(CliError::Input(format!("line {line}: expected {cols} columns, found {}", record.len())));
        }
        let (n1, n2, off) = if is_2d {
            (parse_field(record.get(0), "n1", line)?, parse_field(record.get(1), "n2", line)?, 2)
        } else {
            (parse_field(record.get(0), "n", line)?, 0, 1)
        };
        let re: f64 = parse_field(record.get(off), "re", line)?;
        let im: f64 = parse_field(record.get(off + 1), "im", line)?;
        if !re.is_finite() || !im.is_finite() {
            return Err(CliError::Input(format!("line {line}: non-finite sample")));
        }
        rows.push((n1, n2, Complex64::new(re, im), line));
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{}: no samples", path.display())));
    }
    if !is_2d {
        for (k, &(n, _, _, line)) in rows.iter().enumerate() {
            if n != k {
                return Err(CliError::Input(format!("line {line}: expected n = {k}, found {n}")));
            }
        }
        return Ok(Signal::OneD(rows.into_iter().map(|r| r.2).collect()));
    }
    let cols = rows.iter().map(|r| r.1).max().expect("non-empty") + 1;
    if rows.len() % cols != 0 {
        return Err(CliError::Input(format!("{} samples do not form a grid with {cols} columns", rows.len())));
    }
    let nrows = rows.len() / cols;
    for (k, &(n1, n2, _, line)) in rows.iter().enumerate() {
        if (n1, n2) != (k / cols, k % cols) {
            return Err(CliError::Input(format!(
                "line {line}: expected (n1, n2) = ({}, {}), found ({n1}, {n2})",
                k / cols,
                k % cols
            )));
        }
    }
    Ok(Signal::TwoD(ComplexMatrix::from_fn(nrows, cols, |i, j| rows[i * cols + j].2)))
}

pub fn write_signal_1d(out: &mut dyn Write, x: &[Complex64]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "re", "im"])?;
    for (n, v) in x.iter().enumerate() {
        w.write_record([n.to_string(), v.re.to_string(), v.im.to_string()])?;
    }
    w.flush()
}

pub fn write_signal_2d(out: &mut dyn Write, x: &ComplexMatrix) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n1", "n2", "re", "im"])?;
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let v = x.get(i, j);
            w.write_record([i.to_string(), j.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
    }
    w.flush()
}

/// One model term. `z` for 1D models, `z1`/`z2` for 2D ones.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermSpec {
    pub c: Pair,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z: Option<Pair>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z1: Option<Pair>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub z2: Option<Pair>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub terms: Vec<TermSpec>,
}

pub enum Model {
    OneD(ExpModel1D),
    TwoD(ExpModel2D),
}

pub fn read_model(path: &Path) -> Result<Model, CliError> {
    let spec: ModelSpec = serde_json::from_str(&open(path)?)
        .map_err(|e| CliError::Input(format!("{}: line {}: {e}", path.display(), e.line())))?;
    if spec.terms.is_empty() {
        return Err(CliError::Input("model has no terms".into()));
    }
    let c: Vec<Complex64> = spec.terms.iter().map(|t| complex(t.c)).collect();
    let bad = || CliError::Input("every term needs either `z` (1D) or both `z1` and `z2` (2D)".into());
    if spec.terms.iter().all(|t| t.z.is_some() && t.z1.is_none() && t.z2.is_none()) {
        let z: Vec<Complex64> = spec.terms.iter().map(|t| complex(t.z.expect("checked"))).collect();
        return Ok(Model::OneD(ExpModel1D::from_poles(&c, &z)?));
    }
    if spec.terms.iter().all(|t| t.z.is_none() && t.z1.is_some() && t.z2.is_some()) {
        let z1: Vec<Complex64> = spec.terms.iter().map(|t| complex(t.z1.expect("checked"))).collect();
        let z2: Vec<Complex64> = spec.terms.iter().map(|t| complex(t.z2.expect("checked"))).collect();
        return Ok(Model::TwoD(ExpModel2D::from_poles(&c, &z1, &z2)?));
    }
    Err(bad())
}

/// Known poles (and amplitudes) of a generated signal.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Truth {
    pub poles: Vec<Pair>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub second_poles: Option<Vec<Pair>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub amplitudes: Option<Vec<Pair>>,
}

pub fn read_truth(path: &Path) -> Result<Truth, CliError> {
    serde_json::from_str(&open(path)?).map_err(|e| CliError::Input(format!("{}: line {}: {e}", path.display(), e.line())))
}
