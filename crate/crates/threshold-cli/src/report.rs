use std::io::Write;

use serde_json::{json, Value};
use threshold_lab::asymptotics_validator::{RateFit, SweepReport};
use threshold_lab::linalg::RMatrix;

use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn matrix(m: &RMatrix) -> Value {
    Value::from(m.row_iter().map(|r| r.iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

pub fn vector<'a>(v: impl IntoIterator<Item = &'a f64>) -> Value {
    Value::from(v.into_iter().copied().collect::<Vec<f64>>())
}

pub fn print_json(v: &Value) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out).map_err(|e| CliError::Internal(e.to_string()))
}

/// CSV writer preceded by the metadata comment line.
pub struct Table<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> Table<W> {
    pub fn new(mut out: W, tolerance: f64, header: &[String]) -> Result<Self, CliError> {
        writeln!(out, "# threshold-lab {VERSION} tolerance={}", sci(tolerance)).map_err(io)?;
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(header).map_err(io)?;
        Ok(Self { inner })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.inner.write_record(fields).map_err(io)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(io)
    }
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(format!("write failed: {e}"))
}

pub fn sweep_csv<W: Write>(out: W, tolerance: f64, report: &SweepReport) -> Result<(), CliError> {
    let header = ["lambda", "predicted_norm", "computed_norm", "abs_err", "rel_err"].map(String::from);
    let mut t = Table::new(out, tolerance, &header)?;
    for r in &report.rows {
        t.row(&[r.lambda, r.predicted, r.computed, r.abs_err, r.rel_err].map(sci))?;
    }
    t.finish()
}

fn rate(r: &RateFit) -> Value {
    json!({ "power": r.power, "log_power": r.log_power, "fit_quality": r.fit_quality })
}

pub fn sweep_summary(report: &SweepReport) -> Value {
    json!({
        "scale": report.scale,
        "points": report.rows.len(),
        "lambda_max": report.rows.first().map(|r| r.lambda),
        "lambda_min": report.rows.last().map(|r| r.lambda),
        "fitted_rate": rate(&report.fitted_rate),
        "power_fit": rate(&report.power_fit),
        "log_fit": rate(&report.log_fit),
        "fit_quality": report.fit_quality,
        "scaled_growth": report.scaled_growth,
        "consistent": report.consistent,
        "warnings": report.warnings,
    })
}
