//! Column-major numeric datasets and CSV ingestion.

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

/// Numeric feature columns with an optional response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    response: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from feature columns and a response of matching length.
    pub fn new(columns: Vec<Vec<f64>>, response: Vec<f64>) -> Result<Self> {
        let names = (0..columns.len()).map(|j| format!("x{}", j + 1)).collect();
        Self::with_names(names, columns, response)
    }

    pub fn with_names(
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        response: Vec<f64>,
    ) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Input(format!(
                "{} feature names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let n = response.len();
        for (j, c) in columns.iter().enumerate() {
            if c.len() != n {
                return Err(Error::Input(format!(
                    "feature column {j} has {} rows, response has {n}",
                    c.len()
                )));
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::Data {
                    row: i + 1,
                    column: j + 1,
                    message: format!("non-finite value {}", c[i]),
                });
            }
        }
        Ok(Self {
            names,
            columns,
            response,
        })
    }

    /// Features only; the response is left empty.
    pub fn features_only(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        let mut ds = Self::with_names(names, columns, vec![0.0; n])?;
        ds.response.clear();
        Ok(ds)
    }

    /// Builds a dataset from row-major feature rows.
    pub fn from_rows(rows: &[Vec<f64>], response: Vec<f64>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); m];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Data {
                    row: i + 1,
                    column: row.len(),
                    message: format!("expected {m} values"),
                });
            }
            for (c, &v) in columns.iter_mut().zip(row) {
                c.push(v);
            }
        }
        Self::new(columns, response)
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(self.response.len(), Vec::len)
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn has_response(&self) -> bool {
        !self.response.is_empty() && self.response.len() == self.n_rows()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Rows in `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> Dataset {
        Dataset {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| c[start..end].to_vec())
                .collect(),
            response: if self.response.is_empty() {
                Vec::new()
            } else {
                self.response[start..end].to_vec()
            },
        }
    }

    /// Reads a headed CSV file. With `target` set, that column becomes the
    /// response and is excluded from the features.
    pub fn from_csv_path(path: impl AsRef<Path>, target: Option<&str>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file, target)
    }

    pub fn from_csv_reader<R: Read>(reader: R, target: Option<&str>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(csv_error)?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
            return Err(Error::Data {
                row: 1,
                column: 1,
                message: "missing header row".into(),
            });
        }
        let target_idx = match target {
            Some(t) => Some(
                header
                    .iter()
                    .position(|h| h == t)
                    .ok_or_else(|| Error::Data {
                        row: 1,
                        column: 0,
                        message: format!("target column `{t}` not found in header"),
                    })?,
            ),
            None => None,
        };
        let width = header.len();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); width];
        for (r, record) in rdr.records().enumerate() {
            // line 1 is the header
            let line = r + 2;
            let record = record.map_err(csv_error)?;
            if record.len() != width {
                return Err(Error::Data {
                    row: line,
                    column: record.len().min(width) + 1,
                    message: format!("expected {width} fields, found {}", record.len()),
                });
            }
            for (c, field) in record.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Data {
                    row: line,
                    column: c + 1,
                    message: format!("`{field}` is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Data {
                        row: line,
                        column: c + 1,
                        message: format!("`{field}` is not finite"),
                    });
                }
                cols[c].push(v);
            }
        }
        let mut names = Vec::with_capacity(width);
        let mut columns = Vec::with_capacity(width);
        let mut response = Vec::new();
        for (c, (name, col)) in header.into_iter().zip(cols).enumerate() {
            if Some(c) == target_idx {
                response = col;
            } else {
                names.push(name);
                columns.push(col);
            }
        }
        if target_idx.is_some() {
            Self::with_names(names, columns, response)
        } else {
            Self::features_only(names, columns)
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        kind => Error::Data {
            row,
            column: 0,
            message: format!("{kind:?}"),
        },
    }
}
