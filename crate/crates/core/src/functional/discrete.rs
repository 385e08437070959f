use std::path::Path;

use crate::error::{Error, Result};
use crate::sample::{csv_error, csv_reader, CsvOptions};

/// An r×s table of counts with no empty row or column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let r = counts.len();
        let s = counts.first().map_or(0, Vec::len);
        if r < 2 || s < 2 {
            return Err(Error::argument(format!(
                "contingency table must be at least 2×2, got {r}×{s}"
            )));
        }
        if counts.iter().any(|row| row.len() != s) {
            return Err(Error::argument("contingency table rows differ in length"));
        }
        if let Some(a) = counts.iter().position(|row| row.iter().all(|&c| c == 0)) {
            return Err(Error::argument(format!("row {} is all zero", a + 1)));
        }
        if let Some(b) = (0..s).find(|&b| counts.iter().all(|row| row[b] == 0)) {
            return Err(Error::argument(format!("column {} is all zero", b + 1)));
        }
        Ok(ContingencyTable { counts })
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.counts[0].len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn transpose(&self) -> Self {
        let counts = (0..self.cols())
            .map(|b| self.counts.iter().map(|row| row[b]).collect())
            .collect();
        ContingencyTable { counts }
    }
}

/// Reads a CSV matrix of nonnegative integer counts.
pub fn ingest_table_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<ContingencyTable> {
    let path = path.as_ref();
    let mut reader = csv_reader(path, options)?;
    let mut counts = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<u64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("'{f}' is not a nonnegative integer count"),
                })
            })
            .collect::<Result<Vec<u64>>>()?;
        counts.push(row);
    }
    ContingencyTable::new(counts)
}

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITER: usize = 10_000;

/// Largest nontrivial eigenvalue of `K_ab = Σ_j P(Y=y_j|X=x_a)·P(X=x_b|Y=y_j)`,
/// the squared maximal canonical correlation of the table.
///
/// K is similar to the PSD matrix `BBᵀ` with `B = D_r^{-1/2} N D_c^{-1/2}`,
/// whose top eigenvector `√(row sums)` carries the trivial eigenvalue 1. That
/// direction is deflated and the next eigenvalue found by power iteration.
pub fn discrete_ml(table: &ContingencyTable) -> Result<f64> {
    let r = table.rows();
    let s = table.cols();
    let counts = table.counts();
    let row_sums: Vec<f64> = counts
        .iter()
        .map(|row| row.iter().sum::<u64>() as f64)
        .collect();
    let col_sums: Vec<f64> = (0..s)
        .map(|b| counts.iter().map(|row| row[b]).sum::<u64>() as f64)
        .collect();
    let total: f64 = row_sums.iter().sum();

    let b: Vec<Vec<f64>> = (0..r)
        .map(|a| {
            (0..s)
                .map(|j| counts[a][j] as f64 / (row_sums[a] * col_sums[j]).sqrt())
                .collect()
        })
        .collect();
    let trivial: Vec<f64> = row_sums.iter().map(|x| (x / total).sqrt()).collect();
    let mut m = vec![vec![0.0; r]; r];
    for a in 0..r {
        for c in 0..r {
            let bb: f64 = (0..s).map(|j| b[a][j] * b[c][j]).sum();
            m[a][c] = bb - trivial[a] * trivial[c];
        }
    }

    // two deterministic starts guard against one being orthogonal to the
    // leading eigenvector
    let starts = [
        (0..r).map(|a| 1.0 + a as f64).collect::<Vec<f64>>(),
        (0..r).map(|a| ((a as f64 + 1.0) * 1.618_033_988_75).sin()).collect(),
    ];
    let mut best: f64 = 0.0;
    for start in starts {
        best = best.max(power_iteration(&m, &trivial, start)?);
    }
    Ok(best.clamp(0.0, 1.0))
}

fn power_iteration(m: &[Vec<f64>], trivial: &[f64], mut x: Vec<f64>) -> Result<f64> {
    let project = |x: &mut Vec<f64>| {
        let d: f64 = x.iter().zip(trivial).map(|(a, b)| a * b).sum();
        for (xi, ti) in x.iter_mut().zip(trivial) {
            *xi -= d * ti;
        }
    };
    let normalize = |x: &mut Vec<f64>| -> bool {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return false;
        }
        for v in x.iter_mut() {
            *v /= norm;
        }
        true
    };
    project(&mut x);
    if !normalize(&mut x) {
        return Ok(0.0);
    }
    let mut lambda = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        let mut y: Vec<f64> = m
            .iter()
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect();
        let rayleigh: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        project(&mut y);
        if !normalize(&mut y) {
            return Ok(0.0);
        }
        let converged = (rayleigh - lambda).abs() <= POWER_TOLERANCE * rayleigh.abs().max(1.0);
        lambda = rayleigh;
        x = y;
        if converged {
            return Ok(lambda);
        }
    }
    Err(Error::numeric(format!(
        "power iteration did not converge in {POWER_MAX_ITER} iterations"
    )))
}
