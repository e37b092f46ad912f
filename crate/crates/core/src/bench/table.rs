//! CSV output of replication reports and raw per-replicate errors.
//!
//! Report columns, in order:
//! `cell_id, dist, n, alpha, method, endpoint, rmse, bias, variance,
//! coverage_mean, efficiency, mc_stderr_rmse, failures`.
//! Each method contributes a `lower`, an `upper` and a `both` row; the `both`
//! row carries summed MSE (`rmse = √(mse_l + mse_u)`), summed variance, `NaN`
//! bias and the summed-MSE efficiency.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Endpoint, RawRecord, ReplicationReport};
use crate::Result;

pub const CSV_COLUMNS: [&str; 13] = [
    "cell_id",
    "dist",
    "n",
    "alpha",
    "method",
    "endpoint",
    "rmse",
    "bias",
    "variance",
    "coverage_mean",
    "efficiency",
    "mc_stderr_rmse",
    "failures",
];

pub const RAW_COLUMNS: [&str; 9] = [
    "cell_id", "replicate", "method", "endpoint", "estimate", "truth", "error", "coverage", "failed",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub cell_id: String,
    pub dist: String,
    pub n: usize,
    pub alpha: f64,
    pub method: String,
    pub endpoint: String,
    pub rmse: f64,
    pub bias: f64,
    pub variance: f64,
    pub coverage_mean: f64,
    pub efficiency: f64,
    pub mc_stderr_rmse: f64,
    pub failures: usize,
}

impl CsvRow {
    /// Field-wise equality treating `NaN` as equal to itself.
    pub fn same_values(&self, other: &CsvRow) -> bool {
        let eq = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        self.cell_id == other.cell_id
            && self.dist == other.dist
            && self.n == other.n
            && eq(self.alpha, other.alpha)
            && self.method == other.method
            && self.endpoint == other.endpoint
            && eq(self.rmse, other.rmse)
            && eq(self.bias, other.bias)
            && eq(self.variance, other.variance)
            && eq(self.coverage_mean, other.coverage_mean)
            && eq(self.efficiency, other.efficiency)
            && eq(self.mc_stderr_rmse, other.mc_stderr_rmse)
            && self.failures == other.failures
    }
}

pub fn csv_rows(reports: &[ReplicationReport]) -> Vec<CsvRow> {
    let mut rows = Vec::new();
    for report in reports {
        for m in &report.methods {
            for endpoint in [Endpoint::Lower, Endpoint::Upper, Endpoint::Both] {
                let s = m.endpoint(endpoint);
                rows.push(CsvRow {
                    cell_id: report.cell_id.clone(),
                    dist: report.dist.clone(),
                    n: report.n,
                    alpha: report.alpha,
                    method: m.method.label().into(),
                    endpoint: endpoint.label().into(),
                    rmse: s.rmse,
                    bias: s.bias,
                    variance: s.variance,
                    coverage_mean: m.coverage_mean,
                    efficiency: s.efficiency,
                    mc_stderr_rmse: s.mc_stderr_rmse,
                    failures: m.failures,
                });
            }
        }
    }
    rows
}

fn write_rows<W: Write, T: Serialize>(columns: &[&str], rows: &[T], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(columns)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(reports: &[ReplicationReport], writer: W) -> Result<()> {
    write_rows(&CSV_COLUMNS, &csv_rows(reports), writer)
}

pub fn emit_csv(reports: &[ReplicationReport], path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    write_csv(reports, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(reader: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<CsvRow>, _>>()?;
    Ok(rows)
}

pub fn write_raw<W: Write>(records: &[RawRecord], writer: W) -> Result<()> {
    write_rows(&RAW_COLUMNS, records, writer)
}

pub fn emit_raw(records: &[RawRecord], path: &Path) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    write_raw(records, &mut file)?;
    file.flush()?;
    Ok(())
}

pub fn read_raw<R: Read>(reader: R) -> Result<Vec<RawRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let rows = r.deserialize().collect::<std::result::Result<Vec<RawRecord>, _>>()?;
    Ok(rows)
}
