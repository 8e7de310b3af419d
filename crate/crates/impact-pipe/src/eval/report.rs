//! Report files and the comparison table.
//!
//! A report file is one column-titled data line plus a `# key=value`
//! footer. Metrics are stored at full precision (`undefined` when the
//! denominator was zero); the rendered table rounds to whole percents.

use super::{ConfusionMatrix, EvalReport, MetricSet, Provenance};
use crate::error::{PipeError, Result};
use std::path::Path;

const REPORT_HEADER: &str = "tp,fn,fp,tn,sensitivity,specificity,accuracy,precision";

fn metric_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "undefined".into(),
    }
}

pub fn report_to_string(report: &EvalReport) -> String {
    let m = &report.matrix;
    let ms = &report.metrics;
    let mut out = String::new();
    out.push_str(REPORT_HEADER);
    out.push('\n');
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        m.true_pos,
        m.false_neg,
        m.false_pos,
        m.true_neg,
        metric_cell(ms.sensitivity),
        metric_cell(ms.specificity),
        metric_cell(ms.accuracy),
        metric_cell(ms.precision),
    ));
    out.push('\n');
    out.push_str(&format!("# model_id={}\n", report.provenance.model_id));
    out.push_str(&format!("# dataset_id={}\n", report.provenance.dataset_id));
    out.push_str(&format!("# seed={}\n", report.provenance.seed));
    out.push_str(&format!("# version={}\n", crate::VERSION));
    if let Some(ts) = &report.provenance.timestamp {
        out.push_str(&format!("# timestamp={ts}\n"));
    }
    out
}

pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_to_string(report)).map_err(|e| PipeError::io(path, e))
}

pub fn parse_report(body: &str, path: &Path) -> Result<EvalReport> {
    let mut lines = body.lines();
    match lines.next() {
        Some(h) if h == REPORT_HEADER => {}
        other => {
            return Err(PipeError::Schema {
                path: path.into(),
                what: format!(
                    "report header '{REPORT_HEADER}' (found '{}')",
                    other.unwrap_or("")
                ),
            })
        }
    }
    let data = lines.next().ok_or_else(|| PipeError::Structure {
        path: path.into(),
        what: "missing report data row".into(),
    })?;
    let fields: Vec<&str> = data.split(',').collect();
    if fields.len() != 8 {
        return Err(PipeError::Structure {
            path: path.into(),
            what: format!("report row has {} fields, expected 8", fields.len()),
        });
    }
    let count = |s: &str| -> Result<u64> {
        s.parse().map_err(|_| PipeError::Data {
            path: path.into(),
            row: 1,
            what: format!("bad count '{s}'"),
        })
    };
    let metric = |s: &str| -> Result<Option<f64>> {
        if s == "undefined" {
            return Ok(None);
        }
        s.parse().map(Some).map_err(|_| PipeError::Data {
            path: path.into(),
            row: 1,
            what: format!("bad metric '{s}'"),
        })
    };
    let matrix = ConfusionMatrix {
        true_pos: count(fields[0])?,
        false_neg: count(fields[1])?,
        false_pos: count(fields[2])?,
        true_neg: count(fields[3])?,
    };
    let metrics = MetricSet {
        sensitivity: metric(fields[4])?,
        specificity: metric(fields[5])?,
        accuracy: metric(fields[6])?,
        precision: metric(fields[7])?,
    };

    let mut footer = std::collections::BTreeMap::new();
    for line in lines {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                footer.insert(k.to_string(), v.to_string());
            }
        }
    }
    let need = |k: &str| -> Result<String> {
        footer.get(k).cloned().ok_or_else(|| PipeError::Schema {
            path: path.into(),
            what: format!("report footer key '{k}'"),
        })
    };
    let provenance = Provenance {
        model_id: need("model_id")?,
        dataset_id: need("dataset_id")?,
        seed: need("seed")?.parse().map_err(|_| PipeError::Data {
            path: path.into(),
            row: 0,
            what: "bad seed in footer".into(),
        })?,
        timestamp: footer.get("timestamp").cloned(),
    };
    Ok(EvalReport {
        matrix,
        metrics,
        provenance,
    })
}

/// Side-by-side table over one or more reports: metric rows, one column
/// per run, whole-percent cells.
pub fn render_table(reports: &[EvalReport]) -> String {
    let pct = |v: Option<f64>| -> String {
        match v {
            Some(x) => format!("{}%", (x * 100.0).round() as i64),
            None => "undef".into(),
        }
    };
    let mut columns: Vec<Vec<String>> = Vec::new();
    let labels = [
        "dataset size",
        "sensitivity",
        "specificity",
        "accuracy",
        "precision",
    ];
    for r in reports {
        columns.push(vec![
            r.provenance.model_id.clone(),
            r.matrix.total().to_string(),
            pct(r.metrics.sensitivity),
            pct(r.metrics.specificity),
            pct(r.metrics.accuracy),
            pct(r.metrics.precision),
        ]);
    }
    let mut out = String::new();
    let head_width = 14;
    let col_width = columns
        .iter()
        .flat_map(|c| c.iter().map(|s| s.len()))
        .max()
        .unwrap_or(8)
        .max(8)
        + 2;
    out.push_str(&format!("{:<head_width$}", ""));
    for c in &columns {
        out.push_str(&format!("{:>col_width$}", c[0]));
    }
    out.push('\n');
    for (i, label) in labels.iter().enumerate() {
        out.push_str(&format!("{label:<head_width$}"));
        for c in &columns {
            out.push_str(&format!("{:>col_width$}", c[i + 1]));
        }
        out.push('\n');
    }
    out
}
