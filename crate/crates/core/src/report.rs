//! JSON and CSV report files.
//!
//! JSON field order is fixed and floats are written with exactly four
//! decimals, so identical runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::layout::GridLayout;
use crate::model::CLASS_COUNT;
use crate::replay::{RunReport, SweepTable};

fn fixed(value: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{value:.4}")).expect("formatted float is valid JSON")
}

#[derive(Debug, Serialize)]
struct ConfigEcho {
    rows: usize,
    cols: usize,
    bitwidth: usize,
    bit_order: String,
    codec: String,
    st: u8,
    lambda1: Box<RawValue>,
    lambda2: Box<RawValue>,
    pi0: Box<RawValue>,
    aggregation: String,
    trace: String,
}

#[derive(Debug, Serialize)]
struct RunReportJson<'a> {
    cycles: u64,
    mean_bus_delay: Box<RawValue>,
    max_bus_delay: Box<RawValue>,
    normalized_delay: Option<Box<RawValue>>,
    class_histogram: &'a [u64],
    retention_rate: Box<RawValue>,
    control_transitions: u64,
    tsv_overhead_percent: Box<RawValue>,
    config: ConfigEcho,
}

/// A run report as read back from its JSON file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RunReportFile {
    pub cycles: u64,
    pub mean_bus_delay: f64,
    pub max_bus_delay: f64,
    pub normalized_delay: Option<f64>,
    pub class_histogram: Vec<u64>,
    pub retention_rate: f64,
    pub control_transitions: u64,
    pub tsv_overhead_percent: f64,
    pub config: serde_json::Value,
}

impl RunReportFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: RunReportFile =
            serde_json::from_str(&text).map_err(|e| Error::InvalidParameter {
                name: "report",
                reason: format!("{}: {e}", path.display()),
            })?;
        if file.class_histogram.len() != CLASS_COUNT {
            return Err(Error::InvalidParameter {
                name: "report",
                reason: format!(
                    "{}: class_histogram has {} bins, expected {CLASS_COUNT}",
                    path.display(),
                    file.class_histogram.len()
                ),
            });
        }
        Ok(file)
    }
}

/// Renders the JSON run report.
pub fn render_run_report(report: &RunReport, layout: &GridLayout, config: &RunConfig) -> String {
    let json = RunReportJson {
        cycles: report.cycles,
        mean_bus_delay: fixed(report.mean_bus_delay),
        max_bus_delay: fixed(report.max_bus_delay),
        normalized_delay: report.normalized_delay.map(fixed),
        class_histogram: &report.class_histogram,
        retention_rate: fixed(report.retention_rate),
        control_transitions: report.control_transitions,
        tsv_overhead_percent: fixed(layout.tsv_overhead_percent()),
        config: ConfigEcho {
            rows: layout.rows(),
            cols: layout.cols(),
            bitwidth: layout.bit_width(),
            bit_order: layout.order().to_string(),
            codec: config.codec_spec().name().to_string(),
            st: config.st.value(),
            lambda1: fixed(config.params.lambda1()),
            lambda2: fixed(config.params.lambda2()),
            pi0: fixed(config.params.pi0()),
            aggregation: report.aggregation.to_string(),
            trace: config.trace.to_string(),
        },
    };
    let mut text = serde_json::to_string_pretty(&json).expect("report serializes");
    text.push('\n');
    text
}

pub fn write_run_report(
    report: &RunReport,
    layout: &GridLayout,
    config: &RunConfig,
    path: &Path,
) -> Result<()> {
    std::fs::write(path, render_run_report(report, layout, config))?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// `class,count_before,count_after`, one row per class.
pub fn write_histogram_csv<W: Write>(before: &[u64], after: &[u64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "count_before", "count_after"])
        .map_err(csv_error)?;
    for (class, (b, a)) in before.iter().zip(after).enumerate() {
        w.write_record([class.to_string(), b.to_string(), a.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `st,mean_bus_delay,max_bus_delay,normalized_delay,retention_rate`,
/// one row per swept threshold. Normalized delay is empty when the
/// baseline has no delay.
pub fn write_sweep_csv<W: Write>(table: &SweepTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "st",
        "mean_bus_delay",
        "max_bus_delay",
        "normalized_delay",
        "retention_rate",
    ])
    .map_err(csv_error)?;
    for row in &table.rows {
        let normalized = table
            .normalized(row)
            .map(|v| format!("{v:.4}"))
            .unwrap_or_default();
        w.write_record([
            row.st.to_string(),
            format!("{:.4}", row.report.mean_bus_delay),
            format!("{:.4}", row.report.max_bus_delay),
            normalized,
            format!("{:.4}", row.report.retention_rate),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
