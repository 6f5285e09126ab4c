//! Labeled samples and their CSV form.
//!
//! The on-disk format is UTF-8 CSV with header `x1,...,xd,y`, one sample per
//! row. Lines starting with `#` are comments and are skipped on read, which
//! lets output files carry a provenance line ahead of the header.

use std::fmt::Write as _;

use thiserror::Error;

/// A class label, always 0 or 1.
pub type Label = u8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("point has {got} coordinates, dataset dimension is {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate in sample {index}")]
    NonFinite { index: usize },
    #[error("label {0} is not 0 or 1")]
    BadLabel(f64),
    #[error("csv: missing header line")]
    MissingHeader,
    #[error("csv: malformed header `{0}` (expected x1,...,xd,y)")]
    BadHeader(String),
    #[error("csv: row {row}, column {col}: {msg}")]
    Malformed { row: usize, col: usize, msg: String },
    #[error("csv: dataset has no rows")]
    EmptyDataset,
}

/// Read access to a set of `(x, response)` observations.
///
/// Local polynomial fitting only needs this view, so it works the same for
/// binary-labelled datasets and for real-valued responses.
pub trait Observations {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn point(&self, i: usize) -> &[f64];
    fn response(&self, i: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Binary-labelled sample with immutable order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<Label>,
}

impl Dataset {
    pub fn new(dim: usize) -> Result<Self, DataError> {
        if dim == 0 {
            return Err(DataError::ZeroDimension);
        }
        Ok(Self {
            dim,
            xs: Vec::new(),
            ys: Vec::new(),
        })
    }

    pub fn with_capacity(dim: usize, n: usize) -> Result<Self, DataError> {
        let mut d = Self::new(dim)?;
        d.xs.reserve(n * dim);
        d.ys.reserve(n);
        Ok(d)
    }

    pub fn push(&mut self, x: &[f64], y: Label) -> Result<(), DataError> {
        if x.len() != self.dim {
            return Err(DataError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(DataError::NonFinite {
                index: self.ys.len(),
            });
        }
        if y > 1 {
            return Err(DataError::BadLabel(f64::from(y)));
        }
        self.xs.extend_from_slice(x);
        self.ys.push(y);
        Ok(())
    }

    pub fn label(&self, i: usize) -> Label {
        self.ys[i]
    }

    pub fn labels(&self) -> &[Label] {
        &self.ys
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.xs.chunks(self.dim)
    }

    /// Same points with every label replaced by `1 - y`.
    pub fn flipped(&self) -> Self {
        Self {
            dim: self.dim,
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|y| 1 - y).collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim)
            .map(|i| format!("x{i}"))
            .chain(std::iter::once("y".into()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (x, y) in self.points().zip(&self.ys) {
            for v in x {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{y}");
        }
        out
    }

    /// Parses the CSV format. Rows are numbered from 1 counting every line of
    /// the input (comments included), columns from 1.
    pub fn from_csv(text: &str) -> Result<Self, DataError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(DataError::MissingHeader)?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let dim = cols.len().saturating_sub(1);
        let header_ok = dim >= 1
            && cols[dim] == "y"
            && cols[..dim]
                .iter()
                .enumerate()
                .all(|(i, c)| *c == format!("x{}", i + 1));
        if !header_ok {
            return Err(DataError::BadHeader(header.to_string()));
        }
        let mut data = Self::new(dim)?;
        let mut x = vec![0.0; dim];
        for (lineno, line) in lines {
            let row = lineno + 1;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != dim + 1 {
                return Err(DataError::Malformed {
                    row,
                    col: fields.len().min(dim + 1),
                    msg: format!("expected {} fields, found {}", dim + 1, fields.len()),
                });
            }
            for (j, f) in fields[..dim].iter().enumerate() {
                let v: f64 = f.parse().map_err(|_| DataError::Malformed {
                    row,
                    col: j + 1,
                    msg: format!("`{f}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(DataError::Malformed {
                        row,
                        col: j + 1,
                        msg: "non-finite coordinate".into(),
                    });
                }
                x[j] = v;
            }
            let y = match fields[dim] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(DataError::Malformed {
                        row,
                        col: dim + 1,
                        msg: format!("label `{other}` is not 0 or 1"),
                    });
                }
            };
            data.push(&x, y)?;
        }
        if data.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        Ok(data)
    }
}

impl Observations for Dataset {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.ys.len()
    }
    fn point(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }
    fn response(&self, i: usize) -> f64 {
        f64::from(self.ys[i])
    }
}

/// Points with real-valued responses, for exercising the regression
/// estimator on deterministic targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterData {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl ScatterData {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        Self {
            dim,
            xs: Vec::new(),
            ys: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        assert_eq!(x.len(), self.dim);
        self.xs.extend_from_slice(x);
        self.ys.push(y);
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(dim: usize, points: &[Vec<f64>], f: F) -> Self {
        let mut s = Self::new(dim);
        for p in points {
            s.push(p, f(p));
        }
        s
    }

    /// Applies `g` to every point.
    pub fn map_points<G: Fn(&[f64]) -> Vec<f64>>(&self, g: G) -> Self {
        let mut s = Self::new(self.dim);
        for i in 0..self.ys.len() {
            s.push(&g(self.point(i)), self.ys[i]);
        }
        s
    }
}

impl Observations for ScatterData {
    fn dim(&self) -> usize {
        self.dim
    }
    fn len(&self) -> usize {
        self.ys.len()
    }
    fn point(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }
    fn response(&self, i: usize) -> f64 {
        self.ys[i]
    }
}
