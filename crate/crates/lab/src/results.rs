//! The CSV result schema shared by every command.

use std::io::{Read, Write};
use std::path::Path;

use noma_core::link::RateReport;
use serde::{Deserialize, Serialize};

use crate::LabError;

/// Header written by every command, in this exact column order.
pub const CSV_HEADER: &str = "experiment,sweep_var,sweep_value,cluster,user,rate,sum_rate,source,trials,stderr";

/// One user's rate at one sweep point from one source. `cluster` and `user`
/// are 1-based; `stderr` is empty for analytic sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub sweep_var: String,
    pub sweep_value: f64,
    pub cluster: usize,
    pub user: usize,
    pub rate: f64,
    pub sum_rate: f64,
    pub source: String,
    pub trials: u64,
    pub stderr: Option<f64>,
}

/// Rows for every user of `report`, optionally restricted to one 0-based cluster.
pub fn report_rows(
    experiment: &str,
    sweep_var: &str,
    sweep_value: f64,
    report: &RateReport,
    only_cluster: Option<usize>,
) -> Vec<ResultRow> {
    report
        .rate
        .indexed()
        .filter(|((n, _), _)| only_cluster.is_none_or(|c| c == *n))
        .map(|((n, k), &rate)| ResultRow {
            experiment: experiment.to_string(),
            sweep_var: sweep_var.to_string(),
            sweep_value,
            cluster: n + 1,
            user: k + 1,
            rate,
            sum_rate: report.sum_rate,
            source: report.source.as_str().to_string(),
            trials: report.trials,
            stderr: report.stderr.as_ref().map(|s| s[(n, k)]),
        })
        .collect()
}

pub fn write_rows<W: Write>(out: W, rows: &[ResultRow]) -> Result<(), LabError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ResultRow>, LabError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(LabError::Parse(format!("unexpected CSV header {:?}", header.join(","))));
    }
    r.deserialize().map(|row| row.map_err(LabError::from)).collect()
}

pub fn write_csv(path: &Path, rows: &[ResultRow]) -> Result<(), LabError> {
    let file = std::fs::File::create(path).map_err(|e| LabError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    write_rows(std::io::BufWriter::new(file), rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, LabError> {
    let file = std::fs::File::open(path).map_err(|e| LabError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    read_rows(std::io::BufReader::new(file))
}
