use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub t: f64,
    pub value: f64,
    pub derivative: Option<f64>,
    pub flag: Option<bool>,
}

impl Row {
    pub fn new(t: f64, value: f64) -> Self {
        Self { t, value, derivative: None, flag: None }
    }
}

/// One CSV file; `suffix` is appended to the output prefix.
#[derive(Debug, Clone)]
pub struct Table {
    pub suffix: Option<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: String,
    pub landmark: String,
    pub value: Option<f64>,
    pub target: Option<String>,
    pub pass: Option<bool>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub tables: Vec<Table>,
    pub summary: Summary,
}

/// `{:.11e}`: twelve significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Central differences inside, one-sided at the ends.
pub fn derivatives(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    (0..n)
        .map(|k| {
            if n < 2 {
                0.0
            } else if k == 0 {
                (v[1] - v[0]) / (t[1] - t[0])
            } else if k == n - 1 {
                (v[k] - v[k - 1]) / (t[k] - t[k - 1])
            } else {
                (v[k + 1] - v[k - 1]) / (t[k + 1] - t[k - 1])
            }
        })
        .collect()
}

/// Rows with the derivative and a flag marking `v[k+1] - v[k] > margin`.
pub fn flagged_rows(t: &[f64], v: &[f64], margin: f64) -> Vec<Row> {
    let d = derivatives(t, v);
    (0..t.len())
        .map(|k| Row {
            t: t[k],
            value: v[k],
            derivative: Some(d[k]),
            flag: Some(k + 1 < t.len() && v[k + 1] - v[k] > margin),
        })
        .collect()
}

fn table_path(prefix: &Path, suffix: Option<&str>) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    if let Some(s) = suffix {
        name.push("-");
        name.push(s);
    }
    name.push(".csv");
    PathBuf::from(name)
}

pub fn write_csv(path: &Path, rows: &[Row]) -> Result<(), CliError> {
    let with_derivative = rows.iter().any(|r| r.derivative.is_some());
    let with_flag = rows.iter().any(|r| r.flag.is_some());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t", "value"];
    if with_derivative {
        header.push("derivative");
    }
    if with_flag {
        header.push("flag");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![fmt_num(r.t), fmt_num(r.value)];
        if with_derivative {
            rec.push(r.derivative.map(fmt_num).unwrap_or_default());
        }
        if with_flag {
            rec.push(match r.flag {
                Some(true) => "1".into(),
                Some(false) => "0".into(),
                None => String::new(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every table and the JSON summary; returns the written paths.
pub fn write_report(prefix: &Path, report: &Report) -> Result<Vec<PathBuf>, CliError> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut written = Vec::new();
    for table in &report.tables {
        let path = table_path(prefix, table.suffix.as_deref());
        write_csv(&path, &table.rows)?;
        written.push(path);
    }
    let mut json = prefix.as_os_str().to_owned();
    json.push(".json");
    let json = PathBuf::from(json);
    std::fs::write(&json, serde_json::to_string_pretty(&report.summary)? + "\n")?;
    written.push(json);
    Ok(written)
}
