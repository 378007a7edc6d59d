//! Sampled kernels and their 2x2 minor scans.

use std::io::{Read, Write};
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mrl::fmt_f64;
use crate::verdict::{Accumulator, OrderVerdict, Tol, Witness};

/// Minors with a zero entry that are negative by less than this pass.
const ZERO_ENTRY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    /// Consecutive rows and columns only; needs strictly positive entries.
    Adjacent,
    AllPairs,
}

#[derive(Debug)]
pub struct Tp2Grid {
    rows: Vec<f64>,
    cols: Vec<f64>,
    values: Vec<f64>,
    verdict: OnceLock<OrderVerdict>,
}

impl Clone for Tp2Grid {
    fn clone(&self) -> Self {
        Tp2Grid {
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            values: self.values.clone(),
            verdict: OnceLock::new(),
        }
    }
}

impl PartialEq for Tp2Grid {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.values == other.values
    }
}

fn check_labels(what: &str, labels: &[f64]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::PreconditionFailed(format!("no {what} labels")));
    }
    if labels.iter().any(|v| !v.is_finite()) || labels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::PreconditionFailed(format!("{what} labels must be finite and strictly increasing")));
    }
    Ok(())
}

impl Tp2Grid {
    /// `values` is row-major with `rows.len() * cols.len()` entries.
    pub fn new(rows: Vec<f64>, cols: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_labels("row", &rows)?;
        check_labels("column", &cols)?;
        if values.len() != rows.len() * cols.len() {
            return Err(Error::PreconditionFailed(format!(
                "{} entries for a {}x{} grid",
                values.len(),
                rows.len(),
                cols.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::PreconditionFailed(format!(
                "entry ({}, {}) = {} is not a finite nonnegative number",
                k / cols.len(),
                k % cols.len(),
                values[k]
            )));
        }
        Ok(Tp2Grid {
            rows,
            cols,
            values,
            verdict: OnceLock::new(),
        })
    }

    pub fn from_rows(rows: Vec<f64>, cols: Vec<f64>, table: Vec<Vec<f64>>) -> Result<Self> {
        if table.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::PreconditionFailed("ragged table".into()));
        }
        Tp2Grid::new(rows, cols, table.into_iter().flatten().collect())
    }

    /// Samples `f(row, col)` on the label grid.
    pub fn sample<F>(rows: &[f64], cols: &[f64], f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<f64> + Sync,
    {
        let table = rows
            .par_iter()
            .map(|&r| cols.iter().map(|&c| f(r, c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Tp2Grid::from_rows(rows.to_vec(), cols.to_vec(), table)
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    pub fn cols(&self) -> &[f64] {
        &self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.cols.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// All-pairs verdict at the default tolerance, computed once.
    pub fn verdict(&self) -> &OrderVerdict {
        self.verdict.get_or_init(|| {
            tp2_check(self, ScanMode::AllPairs, Tol::default()).expect("all-pairs scan has no preconditions")
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.cols.iter().map(|&c| fmt_f64(c)));
        w.write_record(&header)?;
        for (i, &r) in self.rows.iter().enumerate() {
            let mut rec = vec![fmt_f64(r)];
            rec.extend(self.row(i).iter().map(|&v| fmt_f64(v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
        let mut records = rdr.records();
        let header = records
            .next()
            .ok_or_else(|| Error::Config("empty grid file".into()))?
            .map_err(|e| Error::Config(e.to_string()))?;
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("`{s}` is not a number")))
        };
        let cols = header.iter().skip(1).map(num).collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        let mut table = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
            let mut it = rec.iter();
            let label = it.next().ok_or_else(|| Error::Config("empty grid row".into()))?;
            rows.push(num(label)?);
            table.push(it.map(num).collect::<Result<Vec<_>>>()?);
        }
        Tp2Grid::from_rows(rows, cols, table).map_err(|e| Error::Config(e.to_string()))
    }
}

/// `det / max(|p11 p22|, |p12 p21|)`, with the zero-entry slack applied.
pub fn normalized_minor(p11: f64, p12: f64, p21: f64, p22: f64) -> (f64, f64) {
    let d = p11 * p22;
    let o = p12 * p21;
    let det = d - o;
    let scale = d.abs().max(o.abs()).max(f64::MIN_POSITIVE);
    let mut m = det / scale;
    if det < 0.0 && det > -ZERO_ENTRY_SLACK && (p11 == 0.0 || p12 == 0.0 || p21 == 0.0 || p22 == 0.0) {
        m = 0.0;
    }
    (m, det)
}

/// Scans 2x2 minors `det [[p(r1,c1), p(r1,c2)], [p(r2,c1), p(r2,c2)]]`, `r1 < r2`, `c1 < c2`.
pub fn tp2_check(grid: &Tp2Grid, mode: ScanMode, tol: Tol) -> Result<OrderVerdict> {
    let (nr, nc) = (grid.rows.len(), grid.cols.len());
    match mode {
        ScanMode::Adjacent => {
            if let Some(k) = grid.values.iter().position(|&v| v <= 0.0) {
                return Err(Error::ModeInvalid { row: k / nc, col: k % nc });
            }
            let mut acc = Accumulator::new(tol);
            for i in 0..nr.saturating_sub(1) {
                for j in 0..nc.saturating_sub(1) {
                    push_minor(grid, &mut acc, i, i + 1, j, j + 1);
                }
            }
            Ok(acc.finish())
        }
        ScanMode::AllPairs => {
            let pairs: Vec<(usize, usize)> = (0..nr).flat_map(|i| (i + 1..nr).map(move |k| (i, k))).collect();
            let parts: Vec<Accumulator> = pairs
                .par_iter()
                .map(|&(i, k)| {
                    let mut acc = Accumulator::new(tol);
                    for j in 0..nc {
                        for l in j + 1..nc {
                            push_minor(grid, &mut acc, i, k, j, l);
                        }
                    }
                    acc
                })
                .collect();
            Ok(parts.into_iter().fold(Accumulator::new(tol), Accumulator::merge).finish())
        }
    }
}

fn push_minor(grid: &Tp2Grid, acc: &mut Accumulator, i: usize, k: usize, j: usize, l: usize) {
    let (m, det) = normalized_minor(grid.get(i, j), grid.get(i, l), grid.get(k, j), grid.get(k, l));
    acc.push(
        m,
        Witness::Window {
            r1: grid.rows[i],
            r2: grid.rows[k],
            c1: grid.cols[j],
            c2: grid.cols[l],
            value: det,
        },
    );
}
