//! Paired observations, ranks and the empirical copula.

mod bilinear;
mod copula;
mod ranks;

use std::fs::File;
use std::path::Path;

pub use bilinear::{
    centered_primitive_grid, rank_bilinear_statistic, HaarCell, Primitive, RankBilinear, Sine,
    SIMPSON_PANELS,
};
pub use copula::EmpiricalCopula;
pub use ranks::{compute_ranks, RankData};

use crate::error::{Error, Result};

/// An i.i.d. sample `(x_i, y_i)`, `i = 1..n`, all values finite, `n >= 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSample {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::argument(format!(
                "xs has {} values but ys has {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::SampleTooSmall {
                n: xs.len(),
                min: 2,
            });
        }
        for (row, (&x, &y)) in xs.iter().zip(&ys).enumerate() {
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column: "x",
                    value: x,
                });
            }
            if !y.is_finite() {
                return Err(Error::NonFinite {
                    row: row + 1,
                    column: "y",
                    value: y,
                });
            }
        }
        Ok(PairedSample { xs, ys })
    }

    pub fn n(&self) -> usize {
        self.xs.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn has_x_ties(&self) -> bool {
        has_ties(&self.xs)
    }

    pub fn has_y_ties(&self) -> bool {
        has_ties(&self.ys)
    }

    /// The same xs re-paired with `ys` permuted by `perm`.
    pub fn repaired(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n() {
            return Err(Error::argument("permutation length differs from n"));
        }
        let ys = perm.iter().map(|&i| self.ys[i]).collect();
        Ok(PairedSample {
            xs: self.xs.clone(),
            ys,
        })
    }
}

fn has_ties(v: &[f64]) -> bool {
    let mut s = v.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    s.windows(2).any(|w| w[0] == w[1])
}

/// Options for [`ingest_csv`] and [`crate::functional::ingest_table_csv`].
#[derive(Debug, Clone, Copy)]
pub struct CsvOptions {
    pub header: bool,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            header: false,
            delimiter: b',',
        }
    }
}

pub(crate) fn csv_reader(path: &Path, options: &CsvOptions) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(options.header)
        .delimiter(options.delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file))
}

pub(crate) fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads a two-column numeric CSV file.
///
/// Rows that do not hold exactly two decimal numbers are rejected with their
/// line number; non-finite values are rejected rather than dropped.
pub fn ingest_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<PairedSample> {
    let path = path.as_ref();
    let mut reader = csv_reader(path, options)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("'{s}' is not a number"),
            })
        };
        let x = parse(&record[0])?;
        let y = parse(&record[1])?;
        for (value, column) in [(x, "x"), (y, "y")] {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    row: xs.len() + 1,
                    column,
                    value,
                });
            }
        }
        xs.push(x);
        ys.push(y);
    }
    PairedSample::new(xs, ys)
}
