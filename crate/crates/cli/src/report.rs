//! CSV tables and the pass/fail report. Floats use Rust's shortest round-trip form.

use std::fs::File;
use std::path::Path;

use anyhow::{Context, Result};

pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// A named data table written as `<subcommand>_<name>.csv`.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self { name, header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|v| num(*v)).collect());
    }
}

/// One checked metric.
#[derive(Clone, Debug)]
pub struct ReportRow {
    pub metric: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl ReportRow {
    /// Passes when `value <= tolerance`.
    pub fn within(metric: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { metric: metric.into(), value, tolerance: Some(tolerance), pass: value <= tolerance }
    }

    /// Reported without a check.
    pub fn info(metric: impl Into<String>, value: f64) -> Self {
        Self { metric: metric.into(), value, tolerance: None, pass: true }
    }

    /// A yes/no outcome, reported as 1 or 0.
    pub fn verdict(metric: impl Into<String>, ok: bool) -> Self {
        Self { metric: metric.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: None, pass: ok }
    }
}

/// Everything a subcommand produced for one run.
#[derive(Default)]
pub struct Output {
    pub rows: Vec<ReportRow>,
    pub tables: Vec<Table>,
}

impl Output {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, run_id: &str, subcommand: &str, echo: &str, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    w.write_record(["run_id", "subcommand", "parameters", "metric", "value", "tolerance", "pass"])?;
    for r in rows {
        let tol = r.tolerance.map(num).unwrap_or_default();
        let pass = if r.pass { "pass" } else { "fail" };
        w.write_record([run_id, subcommand, echo, &r.metric, &num(r.value), &tol, pass])?;
    }
    w.flush()?;
    Ok(())
}
