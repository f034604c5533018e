//! Experiment data container and CSV ingestion.

use std::path::Path;

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Observations `y` of a physical process recorded at strictly increasing
/// scalar inputs `x`. All fitting routines assume this ordering, so it is
/// validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData<S: Scalar> {
    x: Vec<S>,
    y: Vec<S>,
}

impl<S: Scalar> ExperimentData<S> {
    /// Builds a dataset, checking that `x` and `y` are nonempty, equal in
    /// length, finite, and that `x` is strictly increasing.
    pub fn new(x: Vec<S>, y: Vec<S>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Dimension(format!(
                "x has {} entries but y has {}",
                x.len(),
                y.len()
            )));
        }
        for (i, v) in x.iter().chain(y.iter()).enumerate() {
            if !v.is_finite() {
                return Err(Error::Data(format!("non-finite value at flat index {i}")));
            }
        }
        for w in x.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Data(format!(
                    "inputs must be strictly increasing; found {} after {}",
                    w[1].f64(),
                    w[0].f64()
                )));
            }
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[S] {
        &self.x
    }

    pub fn y(&self) -> &[S] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Returns a copy with the observations replaced (inputs unchanged).
    /// Used when subtracting an estimated discrepancy from the data.
    pub fn with_y(&self, y: Vec<S>) -> Result<Self> {
        Self::new(self.x.clone(), y)
    }

    /// Reads a two-column CSV with header `x,y`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        {
            let headers = rdr.headers()?;
            if headers.len() < 2 || headers.get(0) != Some("x") || headers.get(1) != Some("y") {
                return Err(Error::Data(format!(
                    "expected CSV header starting with 'x,y', found {:?}",
                    headers.iter().collect::<Vec<_>>()
                )));
            }
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |field: Option<&str>, name: &str| -> Result<S> {
                let raw = field
                    .ok_or_else(|| Error::Data(format!("row {}: missing {name}", line + 2)))?;
                let v: f64 = raw.trim().parse().map_err(|_| {
                    Error::Data(format!("row {}: cannot parse {name} value {raw:?}", line + 2))
                })?;
                Ok(S::of(v))
            };
            x.push(parse(record.get(0), "x")?);
            y.push(parse(record.get(1), "y")?);
        }
        Self::new(x, y)
    }

    /// Writes the dataset as `x,y` CSV (mainly for harness outputs).
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["x", "y"])?;
        for (xi, yi) in self.x.iter().zip(&self.y) {
            wtr.write_record([format!("{}", xi.f64()), format!("{}", yi.f64())])?;
        }
        wtr.flush()?;
        Ok(())
    }
}
