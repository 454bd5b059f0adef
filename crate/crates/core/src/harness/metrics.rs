use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Scheme;
use crate::error::{Error, Result};

/// One row per interval per scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub interval: u32,
    pub scheme: Scheme,
    pub total_energy_j: f64,
    pub total_life_consumed: f64,
    pub tasks_generated: u64,
    pub tasks_scheduled: u64,
    pub avg_delay_s: f64,
    pub budget_spent_usd: f64,
    pub algo_runtime_s: f64,
}

pub const METRICS_HEADER: [&str; 9] = [
    "interval",
    "scheme",
    "total_energy_j",
    "total_life_consumed",
    "tasks_generated",
    "tasks_scheduled",
    "avg_delay_s",
    "budget_spent_usd",
    "algo_runtime_s",
];

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(Error::Config(format!("unknown format {s:?}"))),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv {
        path: "<metrics>".into(),
        source: e,
    }
}

pub fn write_csv<W: Write>(rows: &[IntervalMetrics], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<IntervalMetrics>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err)
}

pub fn write_jsonl<W: Write>(rows: &[IntervalMetrics], mut out: W) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<IntervalMetrics>> {
    let mut rows = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            rows.push(serde_json::from_str(&line)?);
        }
    }
    Ok(rows)
}

/// Writes `rows` to `path` in `format`.
pub fn emit(rows: &[IntervalMetrics], format: Format, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        Format::Csv => write_csv(rows, file),
        Format::Jsonl => write_jsonl(rows, file),
    }
}

/// Whole-run aggregates for one scheme.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: Option<Scheme>,
    pub intervals: u32,
    pub total_energy_j: f64,
    pub mean_energy_j: f64,
    pub total_life_consumed: f64,
    pub mean_life_consumed: f64,
    pub tasks_generated: u64,
    pub tasks_scheduled: u64,
    pub tasks_delivered: u64,
    pub tasks_processed_onboard: u64,
    pub tasks_expired: u64,
    pub avg_delay_s: f64,
    pub budget_spent_usd: f64,
    pub runtime_mean_s: f64,
    pub runtime_std_s: f64,
    pub runtime_per_task_ms: f64,
    pub energy_series: Vec<f64>,
    pub life_series: Vec<f64>,
    /// Tasks the scheme decided on each interval, carried ones included.
    pub pool_series: Vec<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_sats: usize,
    pub seed: u64,
    pub budget_per_interval_usd: f64,
    pub schemes: Vec<SchemeSummary>,
}

impl Summary {
    pub fn scheme(&self, s: Scheme) -> Option<&SchemeSummary> {
        self.schemes.iter().find(|x| x.scheme == Some(s))
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One constellation size in a runtime benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuntimeRow {
    pub n_sats: usize,
    pub mean_interval_s: f64,
    pub std_interval_s: f64,
    pub mean_task_ms: f64,
    pub std_task_ms: f64,
}

pub fn write_runtime_csv<W: Write>(rows: &[RuntimeRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    if rows.is_empty() {
        w.write_record([
            "n_sats",
            "mean_interval_s",
            "std_interval_s",
            "mean_task_ms",
            "std_task_ms",
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// One level of a parameter sweep for one scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: f64,
    pub scheme: Scheme,
    pub mean_energy_j: f64,
    pub mean_life_consumed: f64,
    pub avg_delay_s: f64,
    pub tasks_generated: u64,
    pub tasks_scheduled: u64,
    pub budget_spent_usd: f64,
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    if rows.is_empty() {
        w.write_record([
            "level",
            "scheme",
            "mean_energy_j",
            "mean_life_consumed",
            "avg_delay_s",
            "tasks_generated",
            "tasks_scheduled",
            "budget_spent_usd",
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
