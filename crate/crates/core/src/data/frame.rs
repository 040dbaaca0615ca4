//! Timestamped multivariate load series and CSV ingestion.

use std::collections::HashMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use crate::error::{Error, Result};

/// Hourly load series with aligned weather covariates.
///
/// Timestamps are epoch seconds (naive, no timezone arithmetic), strictly
/// increasing and equally spaced. `features[j]` is the j-th covariate column.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFrame {
    pub timestamps: Vec<i64>,
    pub load: Vec<f64>,
    pub load_name: String,
    pub features: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
}

/// Column mapping for [`load_csv`]. `features: None` takes every column
/// other than the timestamp and load columns, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub timestamp: String,
    pub load: String,
    pub features: Option<Vec<String>>,
}

impl CsvSchema {
    pub fn new(timestamp: impl Into<String>, load: impl Into<String>) -> Self {
        Self {
            timestamp: timestamp.into(),
            load: load.into(),
            features: None,
        }
    }

    pub fn with_features<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.features = Some(names.into_iter().map(Into::into).collect());
        self
    }
}

/// Per-column counts of values repaired by interpolation during ingestion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub rows: usize,
    pub filled: Vec<(String, usize)>,
}

impl IngestReport {
    pub fn total_filled(&self) -> usize {
        self.filled.iter().map(|(_, n)| n).sum()
    }
}

impl SeriesFrame {
    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    /// Number of model input channels: the load plus every covariate.
    pub fn dims(&self) -> usize {
        1 + self.features.len()
    }

    /// Row-major `N x D` matrix with the load in column 0.
    pub fn to_matrix(&self) -> Vec<f64> {
        let d = self.dims();
        let mut out = Vec::with_capacity(self.len() * d);
        for i in 0..self.len() {
            out.push(self.load[i]);
            out.extend(self.features.iter().map(|c| c[i]));
        }
        out
    }

    pub fn with_load(&self, load: Vec<f64>) -> Result<Self> {
        if load.len() != self.len() {
            return Err(Error::Contract(format!(
                "replacement load has {} rows, frame has {}",
                load.len(),
                self.len()
            )));
        }
        Ok(Self {
            load,
            ..self.clone()
        })
    }

    /// Keeps only the named covariates, in the order given.
    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let mut features = Vec::with_capacity(names.len());
        let mut feature_names = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let idx = self
                .feature_names
                .iter()
                .position(|f| f == n)
                .ok_or_else(|| Error::Schema(format!("unknown feature `{n}`")))?;
            features.push(self.features[idx].clone());
            feature_names.push(n.to_string());
        }
        Ok(Self {
            features,
            feature_names,
            ..self.clone()
        })
    }

    /// Rows `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            timestamps: self.timestamps[start..end].to_vec(),
            load: self.load[start..end].to_vec(),
            load_name: self.load_name.clone(),
            features: self.features.iter().map(|c| c[start..end].to_vec()).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
        let mut header = vec!["timestamp".to_string(), self.load_name.clone()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header).map_err(|e| csv_err(path, e))?;
        for i in 0..self.len() {
            let mut rec = vec![format_timestamp(self.timestamps[i]), self.load[i].to_string()];
            rec.extend(self.features.iter().map(|c| c[i].to_string()));
            w.write_record(&rec).map_err(|e| csv_err(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format(e.to_string()).in_file(path)
}

pub fn format_timestamp(ts: i64) -> String {
    match DateTime::from_timestamp(ts, 0) {
        Some(dt) => dt.naive_utc().format("%Y-%m-%dT%H:%M:%S").to_string(),
        None => ts.to_string(),
    }
}

/// ISO-8601 (with or without offset, `T` or space separator) or integer
/// epoch seconds.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    const FORMATS: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    FORMATS.iter().find_map(|f| {
        NaiveDateTime::parse_from_str(s, f)
            .ok()
            .map(|dt| dt.and_utc().timestamp())
    })
}

fn is_missing(s: &str) -> bool {
    let s = s.trim();
    s.is_empty()
        || ["nan", "na", "null", "none"]
            .iter()
            .any(|m| s.eq_ignore_ascii_case(m))
}

/// Columns read from a CSV, before validation and repair.
struct RawTable {
    timestamps: Vec<i64>,
    columns: Vec<(String, Vec<Option<f64>>)>,
}

fn read_raw(path: &Path, ts_col: &str, cols: Option<&[String]>, exclude: &[&str]) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => csv_err(path, e),
        })?;
    let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")).in_file(path))
    };
    let ts_idx = find(ts_col)?;
    let wanted: Vec<String> = match cols {
        Some(c) => c.to_vec(),
        None => headers
            .iter()
            .filter(|h| *h != ts_col && !exclude.contains(h))
            .map(str::to_string)
            .collect(),
    };
    let idx = wanted.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<(i64, Vec<Option<f64>>)> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        // header is line 1
        let lineno = line + 2;
        let raw_ts = rec.get(ts_idx).unwrap_or("");
        let ts = parse_timestamp(raw_ts).ok_or_else(|| {
            Error::Format(format!("line {lineno}: unparseable timestamp `{raw_ts}`")).in_file(path)
        })?;
        let mut vals = Vec::with_capacity(idx.len());
        for (&i, name) in idx.iter().zip(&wanted) {
            let cell = rec.get(i).unwrap_or("");
            if is_missing(cell) {
                vals.push(None);
            } else {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Format(format!("line {lineno}: column `{name}`: bad number `{cell}`"))
                        .in_file(path)
                })?;
                vals.push(if v.is_finite() { Some(v) } else { None });
            }
        }
        rows.push((ts, vals));
    }

    rows.sort_by_key(|r| r.0);
    check_spacing(rows.iter().map(|r| r.0)).map_err(|e| e.in_file(path))?;

    let timestamps: Vec<i64> = rows.iter().map(|r| r.0).collect();
    let mut columns: Vec<(String, Vec<Option<f64>>)> = wanted
        .into_iter()
        .map(|n| (n, Vec::with_capacity(rows.len())))
        .collect();
    for (_, vals) in rows {
        for (c, v) in columns.iter_mut().zip(vals) {
            c.1.push(v);
        }
    }
    Ok(RawTable { timestamps, columns })
}

fn check_spacing(ts: impl Iterator<Item = i64>) -> Result<()> {
    let ts: Vec<i64> = ts.collect();
    if ts.len() < 2 {
        return Ok(());
    }
    let step = ts[1] - ts[0];
    for (i, w) in ts.windows(2).enumerate() {
        let d = w[1] - w[0];
        if d == 0 {
            return Err(Error::Format(format!(
                "duplicate timestamp {}",
                format_timestamp(w[0])
            )));
        }
        if d != step {
            return Err(Error::Format(format!(
                "timestamps not equally spaced: gap of {d}s after row {i} (expected {step}s)"
            )));
        }
    }
    Ok(())
}

/// Fills missing cells by linear interpolation between the nearest present
/// neighbours (edge runs copy the nearest present value). Returns the number
/// of cells filled.
///
/// A column may have at most `max(1, floor(0.05 * N))` missing cells.
pub fn repair_column(name: &str, col: &[Option<f64>]) -> Result<(Vec<f64>, usize)> {
    let n = col.len();
    let missing = col.iter().filter(|v| v.is_none()).count();
    let allowed = ((n as f64 * 0.05).floor() as usize).max(1);
    if missing > allowed || (missing > 0 && missing == n) {
        return Err(Error::DataQuality {
            column: name.to_string(),
            missing,
            rows: n,
        });
    }
    let mut out = vec![0.0; n];
    let mut last: Option<usize> = None;
    let mut i = 0;
    while i < n {
        match col[i] {
            Some(v) => {
                out[i] = v;
                last = Some(i);
                i += 1;
            }
            None => {
                let run_end = (i..n).find(|&j| col[j].is_some());
                match (last, run_end) {
                    (Some(l), Some(r)) => {
                        let (a, b) = (col[l].unwrap(), col[r].unwrap());
                        for (j, slot) in out.iter_mut().enumerate().take(r).skip(i) {
                            let t = (j - l) as f64 / (r - l) as f64;
                            *slot = a + t * (b - a);
                        }
                        i = r;
                    }
                    (Some(l), None) => {
                        out[i..].fill(col[l].unwrap());
                        i = n;
                    }
                    (None, Some(r)) => {
                        out[i..r].fill(col[r].unwrap());
                        i = r;
                    }
                    (None, None) => unreachable!("all-missing column rejected above"),
                }
            }
        }
    }
    Ok((out, missing))
}

/// Reads an hourly load file.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<(SeriesFrame, IngestReport)> {
    let mut cols = vec![schema.load.clone()];
    let feat_spec = schema.features.clone();
    if let Some(f) = &feat_spec {
        cols.extend(f.iter().cloned());
    }
    let raw = if feat_spec.is_some() {
        read_raw(path, &schema.timestamp, Some(&cols), &[])?
    } else {
        // load first, then every remaining column
        let mut all = read_raw(path, &schema.timestamp, None, &[])?;
        let pos = all
            .columns
            .iter()
            .position(|(n, _)| *n == schema.load)
            .ok_or_else(|| Error::Schema(format!("missing column `{}`", schema.load)).in_file(path))?;
        let load = all.columns.remove(pos);
        all.columns.insert(0, load);
        all
    };
    build_frame(raw).map_err(|e| e.in_file(path))
}

/// Reads a load file and left-joins covariates from a second CSV on the
/// timestamp. Load timestamps absent from the covariate file count as
/// missing cells.
pub fn load_csv_with_features(
    path: &Path,
    schema: &CsvSchema,
    features_path: &Path,
    features_timestamp: &str,
) -> Result<(SeriesFrame, IngestReport)> {
    let base = read_raw(path, &schema.timestamp, Some(std::slice::from_ref(&schema.load)), &[])?;
    let feats = read_raw(
        features_path,
        features_timestamp,
        schema.features.as_deref(),
        &[],
    )?;
    let index: HashMap<i64, usize> = feats
        .timestamps
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, i))
        .collect();
    let mut columns = base.columns;
    for (name, vals) in feats.columns {
        let joined = base
            .timestamps
            .iter()
            .map(|t| index.get(t).and_then(|&i| vals[i]))
            .collect();
        columns.push((name, joined));
    }
    build_frame(RawTable {
        timestamps: base.timestamps,
        columns,
    })
    .map_err(|e| e.in_file(path))
}

fn build_frame(raw: RawTable) -> Result<(SeriesFrame, IngestReport)> {
    let mut report = IngestReport {
        rows: raw.timestamps.len(),
        filled: Vec::new(),
    };
    let mut cols = raw.columns.into_iter();
    let (load_name, load_raw) = cols.next().expect("load column always present");
    let (load, n) = repair_column(&load_name, &load_raw)?;
    report.filled.push((load_name.clone(), n));
    let mut features = Vec::new();
    let mut feature_names = Vec::new();
    for (name, raw) in cols {
        let (v, n) = repair_column(&name, &raw)?;
        report.filled.push((name.clone(), n));
        features.push(v);
        feature_names.push(name);
    }
    Ok((
        SeriesFrame {
            timestamps: raw.timestamps,
            load,
            load_name,
            features,
            feature_names,
        },
        report,
    ))
}
