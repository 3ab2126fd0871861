//! Loading, cleaning and time-alignment of hourly wind-speed and demand series.
//!
//! Rows that cannot be used (blank or unparseable values, bad timestamps,
//! negative or non-finite numbers, repeated timestamps) are dropped and counted
//! in a [`GapReport`]. Nothing is interpolated.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hourly series of nonnegative observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    label: String,
    timestamps: Vec<NaiveDateTime>,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from already-clean data.
    ///
    /// Timestamps must be strictly increasing and on the hour; values finite and `>= 0`.
    pub fn new(
        label: impl Into<String>,
        timestamps: Vec<NaiveDateTime>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let label = label.into();
        if timestamps.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{label}: {} timestamps vs {} values",
                timestamps.len(),
                values.len()
            )));
        }
        if timestamps.is_empty() {
            return Err(Error::Empty("time series"));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "{label}: timestamps not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(t) = timestamps.iter().find(|t| !is_on_the_hour(t)) {
            return Err(Error::InvalidParameter(format!(
                "{label}: timestamp {t} is not on the hour"
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{label}: value {v} is negative or not finite"
            )));
        }
        Ok(Self {
            label,
            timestamps,
            values,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn timestamps(&self) -> &[NaiveDateTime] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    fn coverage(&self) -> String {
        format!(
            "{} ({} rows, {} .. {})",
            self.label,
            self.len(),
            self.timestamps[0],
            self.timestamps[self.len() - 1]
        )
    }
}

/// Column names to read from a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub timestamp: String,
    pub value: String,
}

impl ColumnMap {
    pub fn new(timestamp: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            timestamp: timestamp.into(),
            value: value.into(),
        }
    }
}

/// Summary of the rows dropped while loading one file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GapReport {
    pub label: String,
    pub rows_read: usize,
    pub rows_kept: usize,
    pub missing_values: usize,
    pub unparseable_values: usize,
    pub invalid_values: usize,
    pub bad_timestamps: usize,
    pub duplicate_timestamps: usize,
    /// Hours between the first and last kept timestamp with no observation.
    pub missing_hours: usize,
}

impl GapReport {
    pub fn dropped(&self) -> usize {
        self.rows_read - self.rows_kept
    }
}

impl fmt::Display for GapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: read {} rows, kept {}, dropped {} (missing {}, unparseable {}, negative/non-finite {}, \
             bad timestamp {}, duplicate timestamp {}); {} hourly gaps in coverage",
            self.label,
            self.rows_read,
            self.rows_kept,
            self.dropped(),
            self.missing_values,
            self.unparseable_values,
            self.invalid_values,
            self.bad_timestamps,
            self.duplicate_timestamps,
            self.missing_hours
        )
    }
}

fn is_on_the_hour(t: &NaiveDateTime) -> bool {
    t.minute() == 0 && t.second() == 0 && t.nanosecond() == 0
}

/// Parses an ISO-8601 timestamp. Offsets are converted to UTC.
pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.naive_utc());
    }
    const FORMATS: [&str; 5] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M:%S%.f",
    ];
    FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
}

/// Loads one series from a CSV file with a header row.
///
/// The result is sorted by timestamp. When a timestamp repeats, the row that
/// appears first in the file is kept. Any row whose timestamp carries minutes
/// or seconds makes the whole load fail, since only hourly data is accepted.
pub fn load_series_csv(path: &Path, columns: &ColumnMap) -> Result<(TimeSeries, GapReport)> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    let find = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
            available: headers.iter().collect::<Vec<_>>().join(", "),
        })
    };
    let t_col = find(&columns.timestamp)?;
    let v_col = find(&columns.value)?;

    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| columns.value.clone());
    let mut report = GapReport {
        label: label.clone(),
        ..GapReport::default()
    };

    // (timestamp, file order, value)
    let mut rows: Vec<(NaiveDateTime, usize, f64)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        report.rows_read += 1;
        let Some(ts) = record.get(t_col).and_then(parse_timestamp) else {
            report.bad_timestamps += 1;
            continue;
        };
        if !is_on_the_hour(&ts) {
            return Err(Error::SubHourly {
                path: path.to_path_buf(),
                timestamp: ts.to_string(),
            });
        }
        let raw = record.get(v_col).unwrap_or("");
        if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
            report.missing_values += 1;
            continue;
        }
        let Ok(value) = raw.parse::<f64>() else {
            report.unparseable_values += 1;
            continue;
        };
        if !value.is_finite() || value < 0.0 {
            report.invalid_values += 1;
            continue;
        }
        rows.push((ts, line, value));
    }

    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let before = rows.len();
    rows.dedup_by(|later, earlier| later.0 == earlier.0);
    report.duplicate_timestamps = before - rows.len();
    report.rows_kept = rows.len();

    if rows.is_empty() {
        return Err(Error::NoValidRows {
            path: path.to_path_buf(),
            report: report.to_string(),
        });
    }
    let span_hours = (rows[rows.len() - 1].0 - rows[0].0).num_hours() as usize + 1;
    report.missing_hours = span_hours - rows.len();

    let (timestamps, values) = rows.into_iter().map(|(t, _, v)| (t, v)).unzip();
    let series = TimeSeries {
        label,
        timestamps,
        values,
    };
    Ok((series, report))
}

/// Writes a series as `timestamp,<value_column>` CSV.
pub fn write_series_csv(series: &TimeSeries, path: &Path, value_column: &str) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    writer
        .write_record(["timestamp", value_column])
        .map_err(|e| Error::csv(path, e))?;
    for (t, v) in series.timestamps.iter().zip(&series.values) {
        writer
            .write_record([t.format("%Y-%m-%dT%H:%M:%S").to_string(), v.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Rescales demand so that its mean equals `target_mean`.
pub fn normalize_demand(series: &TimeSeries, target_mean: f64) -> Result<TimeSeries> {
    if series.is_empty() {
        return Err(Error::Empty("demand series"));
    }
    if !(target_mean > 0.0 && target_mean.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "target mean must be positive, got {target_mean}"
        )));
    }
    let mean = series.mean();
    if !(mean > 0.0) {
        return Err(Error::Degenerate(format!(
            "{}: cannot normalise a series with mean {mean}",
            series.label
        )));
    }
    let scale = target_mean / mean;
    Ok(TimeSeries {
        label: series.label.clone(),
        timestamps: series.timestamps.clone(),
        values: series.values.iter().map(|v| v * scale).collect(),
    })
}

/// One time-aligned observation of both wind speeds and demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointRecord {
    pub timestamp: NaiveDateTime,
    /// Wind speed at the leader's site (m/s).
    pub w1: f64,
    /// Wind speed at the follower's site (m/s).
    pub w2: f64,
    /// Demand (MW).
    pub demand: f64,
}

/// Historic records common to all three input series.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSeries {
    records: Vec<JointRecord>,
}

impl JointSeries {
    pub fn from_records(records: Vec<JointRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty("joint series"));
        }
        for r in &records {
            for v in [r.w1, r.w2, r.demand] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "record at {} has invalid value {v}",
                        r.timestamp
                    )));
                }
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[JointRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Historic means of `(w1, w2, demand)`.
    pub fn means(&self) -> [f64; 3] {
        let n = self.records.len() as f64;
        let mut sum = [0.0; 3];
        for r in &self.records {
            sum[0] += r.w1;
            sum[1] += r.w2;
            sum[2] += r.demand;
        }
        sum.map(|s| s / n)
    }
}

/// Inner join of the three series on timestamp.
pub fn align_series(w1: &TimeSeries, w2: &TimeSeries, demand: &TimeSeries) -> Result<JointSeries> {
    if w1.is_empty() || w2.is_empty() || demand.is_empty() {
        return Err(Error::Empty("series passed to align_series"));
    }
    let index = |s: &TimeSeries| -> HashMap<NaiveDateTime, f64> {
        s.timestamps.iter().copied().zip(s.values.iter().copied()).collect()
    };
    let w2_at = index(w2);
    let demand_at = index(demand);

    let records: Vec<JointRecord> = w1
        .timestamps
        .iter()
        .zip(&w1.values)
        .filter_map(|(t, &v1)| {
            let v2 = *w2_at.get(t)?;
            let d = *demand_at.get(t)?;
            Some(JointRecord {
                timestamp: *t,
                w1: v1,
                w2: v2,
                demand: d,
            })
        })
        .collect();

    if records.is_empty() {
        return Err(Error::EmptyIntersection {
            coverage: [w1, w2, demand]
                .iter()
                .map(|s| s.coverage())
                .collect::<Vec<_>>()
                .join("; "),
        });
    }
    Ok(JointSeries { records })
}
