//! Connection-log handling: CSV ingestion, day-of-week partitioning,
//! occupancy bucketing, and supervised task assembly.

pub mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, TimeDelta, Timelike};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report;

/// Column names every connection-log CSV must carry, in this exact order.
pub const CSV_HEADER: [&str; 5] = ["ap_id", "date", "time", "mac", "building"];

/// Names of the supervised feature columns, in row order.
pub const FEATURE_NAMES: [&str; 7] = [
    "location_code",
    "minute_sin",
    "minute_cos",
    "day_of_week",
    "count_now",
    "count_lag1",
    "count_lag2",
];

const DATE_FORMAT: &str = "%Y-%m-%d";
const TIME_FORMAT: &str = "%H:%M";
const MINUTES_PER_DAY: f64 = 1440.0;

/// Errors from the data pipeline.
#[derive(Debug, Error)]
pub enum DataError {
    /// Filesystem failure while reading or writing a dataset file.
    #[error("{path}: {source}")]
    Io {
        /// File being read or written.
        path: PathBuf,
        /// Underlying I/O failure.
        #[source]
        source: std::io::Error,
    },
    /// CSV-level failure not tied to a single row.
    #[error("{path}: {source}")]
    Csv {
        /// File being read or written.
        path: PathBuf,
        /// Underlying CSV failure.
        #[source]
        source: csv::Error,
    },
    /// The file's header row does not match [`CSV_HEADER`].
    #[error("{path}: expected header `ap_id,date,time,mac,building`, got `{got}`")]
    BadHeader {
        /// File being read.
        path: PathBuf,
        /// Header actually found.
        got: String,
    },
    /// Every row of the file was malformed.
    #[error("{path}: no valid records")]
    NoValidRows {
        /// File being read.
        path: PathBuf,
    },
    /// Bucket width must be positive and divide one hour.
    #[error("bucket width {0} min must be positive and divide 60")]
    BadBucketWidth(u32),
    /// Series passed to one call must share a single bucket width.
    #[error("mixed bucket widths: {0} min and {1} min")]
    MixedBucketWidth(u32, u32),
    /// Horizon must be a positive multiple of the bucket width.
    #[error("horizon {horizon} min is not a positive multiple of bucket width {bucket} min")]
    BadHorizon {
        /// Requested prediction horizon in minutes.
        horizon: u32,
        /// Bucket width of the input series in minutes.
        bucket: u32,
    },
    /// No series yielded a single (features, target) row.
    #[error("no supervised rows: every series is shorter than the horizon")]
    NoSupervisedRows,
    /// Week-based split needs more calendar weeks than the data spans.
    #[error("data spans {weeks} calendar week(s), need at least {needed}")]
    InsufficientSpan {
        /// Weeks actually covered.
        weeks: u32,
        /// Weeks required by the split.
        needed: u32,
    },
    /// Malformed train/test split specification.
    #[error("invalid split: {0}")]
    BadSplit(&'static str),
    /// Malformed synthetic-generator configuration.
    #[error("invalid synth config: {0}")]
    BadSynthConfig(&'static str),
}

/// Day of week, used to partition logs into per-day prediction tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayOfWeek {
    /// Monday.
    Monday,
    /// Tuesday.
    Tuesday,
    /// Wednesday.
    Wednesday,
    /// Thursday.
    Thursday,
    /// Friday.
    Friday,
    /// Saturday.
    Saturday,
    /// Sunday.
    Sunday,
}

impl DayOfWeek {
    /// All seven days, Monday first.
    pub const ALL: [DayOfWeek; 7] = [
        DayOfWeek::Monday,
        DayOfWeek::Tuesday,
        DayOfWeek::Wednesday,
        DayOfWeek::Thursday,
        DayOfWeek::Friday,
        DayOfWeek::Saturday,
        DayOfWeek::Sunday,
    ];

    /// Zero-based index with Monday = 0.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Lowercase English name, used in file names and reports.
    pub fn name(self) -> &'static str {
        match self {
            DayOfWeek::Monday => "monday",
            DayOfWeek::Tuesday => "tuesday",
            DayOfWeek::Wednesday => "wednesday",
            DayOfWeek::Thursday => "thursday",
            DayOfWeek::Friday => "friday",
            DayOfWeek::Saturday => "saturday",
            DayOfWeek::Sunday => "sunday",
        }
    }

    /// Day of week of a calendar date.
    pub fn from_date(date: NaiveDate) -> Self {
        Self::ALL[date.weekday().num_days_from_monday() as usize]
    }
}

impl fmt::Display for DayOfWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One row of a connection log: a device seen at an access point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionRecord {
    /// Access point identifier.
    pub ap_id: String,
    /// Observation time at minute resolution.
    pub timestamp: NaiveDateTime,
    /// Device MAC address (treated as an opaque string).
    pub mac: String,
    /// Building the access point belongs to.
    pub building: String,
}

/// Identifies one occupancy series: an access point within a building.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocationKey {
    /// Access point identifier.
    pub ap_id: String,
    /// Building the access point belongs to.
    pub building: String,
}

impl fmt::Display for LocationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.building, self.ap_id)
    }
}

/// One fixed-width time bucket and its occupancy count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupancyBucket {
    /// Inclusive start of the bucket.
    pub start: NaiveDateTime,
    /// Number of distinct devices seen during the bucket.
    pub count: u32,
}

/// Occupancy counts for one location in strictly increasing bucket order.
///
/// Buckets are contiguous within each calendar day (gaps inside a day are
/// zero-filled between the day's first and last observed bucket) but the
/// series may jump across days, so consumers must not assume one unbroken run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancySeries {
    /// Location the counts belong to.
    pub location: LocationKey,
    /// Bucket width in minutes.
    pub bucket_minutes: u32,
    /// Counts in strictly increasing start order.
    pub buckets: Vec<OccupancyBucket>,
}

/// One supervised example: features describing a bucket, target at +horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedRow {
    /// Location the example was taken from.
    pub location: LocationKey,
    /// Bucket the features describe.
    pub bucket_start: NaiveDateTime,
    /// Feature vector, columns as in [`FEATURE_NAMES`].
    pub features: Vec<f64>,
    /// Occupancy count one horizon later.
    pub target: u32,
}

/// Supervised dataset for one prediction horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedSet {
    /// Bucket width of the underlying series in minutes.
    pub bucket_minutes: u32,
    /// Prediction horizon in minutes.
    pub horizon_minutes: u32,
    /// Examples in location-major, then chronological order.
    pub rows: Vec<SupervisedRow>,
}

/// Week-based train/test split: weeks `1..=train_weeks` train, `test_week` tests.
///
/// Week 1 starts on the Monday of the week containing the earliest row;
/// rows after the test week are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Number of leading whole weeks used for training.
    #[serde(default = "default_train_weeks")]
    pub train_weeks: u32,
    /// One-based index of the week held out for testing.
    #[serde(default = "default_test_week")]
    pub test_week: u32,
}

fn default_train_weeks() -> u32 {
    5
}

fn default_test_week() -> u32 {
    6
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_weeks: default_train_weeks(),
            test_week: default_test_week(),
        }
    }
}

impl SplitSpec {
    fn validate(&self) -> Result<(), DataError> {
        if self.train_weeks == 0 {
            return Err(DataError::BadSplit("need at least one training week"));
        }
        if self.test_week <= self.train_weeks {
            return Err(DataError::BadSplit(
                "test week must follow the training weeks",
            ));
        }
        Ok(())
    }
}

/// A row skipped during ingestion, with the 1-based line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRow {
    /// Line number in the source file (the header is line 1).
    pub line: u64,
    /// Why the row was rejected.
    pub reason: String,
}

/// Result of ingesting a connection-log CSV.
#[derive(Debug, Clone)]
pub struct IngestReport {
    /// Rows that parsed cleanly, in file order.
    pub records: Vec<ConnectionRecord>,
    /// Rows that were rejected.
    pub skipped: Vec<SkippedRow>,
}

/// Reads a connection-log CSV, skipping and reporting malformed rows.
///
/// The file must start with the exact header `ap_id,date,time,mac,building`;
/// dates are `YYYY-MM-DD` and times are `HH:MM`. At least one row must parse.
pub fn ingest_csv(path: &Path) -> Result<IngestReport, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));

    let headers = reader.headers().map_err(|source| DataError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(DataError::BadHeader {
            path: path.to_path_buf(),
            got: headers.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for row in reader.records() {
        match row {
            Ok(row) => {
                let line = row.position().map_or(0, |p| p.line());
                match parse_row(&row) {
                    Ok(record) => records.push(record),
                    Err(reason) => skipped.push(SkippedRow { line, reason }),
                }
            }
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line());
                skipped.push(SkippedRow {
                    line,
                    reason: err.to_string(),
                });
            }
        }
    }

    if records.is_empty() {
        return Err(DataError::NoValidRows {
            path: path.to_path_buf(),
        });
    }
    if !skipped.is_empty() {
        log::warn!(
            "{}: skipped {} malformed row(s)",
            path.display(),
            skipped.len()
        );
    }
    Ok(IngestReport { records, skipped })
}

fn parse_row(row: &csv::StringRecord) -> Result<ConnectionRecord, String> {
    if row.len() != CSV_HEADER.len() {
        return Err(format!(
            "expected {} fields, got {}",
            CSV_HEADER.len(),
            row.len()
        ));
    }
    let field = |i: usize| row.get(i).unwrap_or("").trim();
    let ap_id = field(0);
    let date = field(1);
    let time = field(2);
    let mac = field(3);
    let building = field(4);
    if ap_id.is_empty() || mac.is_empty() || building.is_empty() {
        return Err("empty ap_id, mac, or building".to_string());
    }
    let date = NaiveDate::parse_from_str(date, DATE_FORMAT)
        .map_err(|e| format!("bad date `{date}`: {e}"))?;
    let time = NaiveTime::parse_from_str(time, TIME_FORMAT)
        .map_err(|e| format!("bad time `{time}`: {e}"))?;
    Ok(ConnectionRecord {
        ap_id: ap_id.to_string(),
        timestamp: date.and_time(time),
        mac: mac.to_string(),
        building: building.to_string(),
    })
}

/// Writes records as a connection-log CSV (atomically, via a temp file).
pub fn write_records_csv(path: &Path, records: &[ConnectionRecord]) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(CSV_HEADER)
        .map_err(|source| DataError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
    for r in records {
        writer
            .write_record([
                r.ap_id.as_str(),
                &r.timestamp.format(DATE_FORMAT).to_string(),
                &r.timestamp.format(TIME_FORMAT).to_string(),
                r.mac.as_str(),
                r.building.as_str(),
            ])
            .map_err(|source| DataError::Csv {
                path: path.to_path_buf(),
                source,
            })?;
    }
    let bytes = writer.into_inner().expect("writing to Vec cannot fail");
    report::write_atomic(path, &bytes).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Splits records into seven lists by day of week, Monday first.
///
/// Relative order within each list matches the input order.
pub fn split_by_day_of_week(records: &[ConnectionRecord]) -> [Vec<ConnectionRecord>; 7] {
    let mut parts: [Vec<ConnectionRecord>; 7] = Default::default();
    for r in records {
        parts[DayOfWeek::from_date(r.timestamp.date()).index()].push(r.clone());
    }
    parts
}

fn floor_to_bucket(ts: NaiveDateTime, bucket_minutes: u32) -> NaiveDateTime {
    let minute = ts.hour() * 60 + ts.minute();
    let floored = minute - minute % bucket_minutes;
    ts.date()
        .and_hms_opt(floored / 60, floored % 60, 0)
        .expect("floored minute is a valid time of day")
}

/// Counts distinct devices per fixed-width bucket per location.
///
/// Within each calendar day the output is zero-filled between a location's
/// first and last observed bucket. Series come back sorted by location and
/// empty input yields no series.
pub fn bucket_counts(
    records: &[ConnectionRecord],
    bucket_minutes: u32,
) -> Result<Vec<OccupancySeries>, DataError> {
    if bucket_minutes == 0 || 60 % bucket_minutes != 0 {
        return Err(DataError::BadBucketWidth(bucket_minutes));
    }

    type DayBuckets<'a> = BTreeMap<NaiveDateTime, HashSet<&'a str>>;
    let mut per_location: BTreeMap<(&str, &str), BTreeMap<NaiveDate, DayBuckets>> = BTreeMap::new();
    for r in records {
        let start = floor_to_bucket(r.timestamp, bucket_minutes);
        per_location
            .entry((r.ap_id.as_str(), r.building.as_str()))
            .or_default()
            .entry(start.date())
            .or_default()
            .entry(start)
            .or_default()
            .insert(r.mac.as_str());
    }

    let step = TimeDelta::minutes(i64::from(bucket_minutes));
    let mut out = Vec::with_capacity(per_location.len());
    for ((ap_id, building), days) in per_location {
        let mut buckets = Vec::new();
        for day in days.values() {
            let first = *day.keys().next().expect("day group is non-empty");
            let last = *day.keys().next_back().expect("day group is non-empty");
            let mut t = first;
            while t <= last {
                let count = day.get(&t).map_or(0, |macs| macs.len() as u32);
                buckets.push(OccupancyBucket { start: t, count });
                t += step;
            }
        }
        out.push(OccupancySeries {
            location: LocationKey {
                ap_id: ap_id.to_string(),
                building: building.to_string(),
            },
            bucket_minutes,
            buckets,
        });
    }
    Ok(out)
}

/// Builds supervised (features, target) rows from occupancy series.
///
/// Each bucket whose +horizon bucket exists within the same contiguous run
/// yields one row. Count lags reach one and two buckets back and clamp to the
/// start of the run. The location code is the series' rank among all input
/// locations in sorted order.
pub fn build_supervised(
    series: &[OccupancySeries],
    horizon_minutes: u32,
) -> Result<SupervisedSet, DataError> {
    if series.is_empty() {
        return Err(DataError::NoSupervisedRows);
    }
    let bucket_minutes = series[0].bucket_minutes;
    for s in series {
        if s.bucket_minutes != bucket_minutes {
            return Err(DataError::MixedBucketWidth(
                bucket_minutes,
                s.bucket_minutes,
            ));
        }
    }
    if bucket_minutes == 0
        || horizon_minutes == 0
        || !horizon_minutes.is_multiple_of(bucket_minutes)
    {
        return Err(DataError::BadHorizon {
            horizon: horizon_minutes,
            bucket: bucket_minutes,
        });
    }
    let shift = (horizon_minutes / bucket_minutes) as usize;

    let mut locations: Vec<&LocationKey> = series.iter().map(|s| &s.location).collect();
    locations.sort();
    locations.dedup();
    let codes: BTreeMap<&LocationKey, f64> = locations
        .iter()
        .enumerate()
        .map(|(i, loc)| (*loc, i as f64))
        .collect();

    let step = TimeDelta::minutes(i64::from(bucket_minutes));
    let mut rows = Vec::new();
    for s in series {
        let code = codes[&s.location];
        let buckets = &s.buckets;
        let mut run_start = 0;
        for i in 0..buckets.len() {
            if i > 0 && buckets[i].start - buckets[i - 1].start != step {
                run_start = i;
            }
            let target_index = i + shift;
            if target_index >= buckets.len() {
                continue;
            }
            if buckets[target_index].start - buckets[i].start
                != TimeDelta::minutes(i64::from(horizon_minutes))
            {
                continue;
            }
            let lag = |k: usize| buckets[i.saturating_sub(k).max(run_start)].count;
            let start = buckets[i].start;
            let minute = f64::from(start.hour() * 60 + start.minute());
            let phase = std::f64::consts::TAU * minute / MINUTES_PER_DAY;
            rows.push(SupervisedRow {
                location: s.location.clone(),
                bucket_start: start,
                features: vec![
                    code,
                    phase.sin(),
                    phase.cos(),
                    DayOfWeek::from_date(start.date()).index() as f64,
                    f64::from(buckets[i].count),
                    f64::from(lag(1)),
                    f64::from(lag(2)),
                ],
                target: buckets[target_index].count,
            });
        }
    }

    if rows.is_empty() {
        return Err(DataError::NoSupervisedRows);
    }
    Ok(SupervisedSet {
        bucket_minutes,
        horizon_minutes,
        rows,
    })
}

/// Writes a supervised set as CSV (atomically, via a temp file).
///
/// Emits the header even when the set has no rows.
pub fn write_supervised_csv(path: &Path, set: &SupervisedSet) -> Result<(), DataError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["ap_id", "building", "bucket_start"];
    header.extend(FEATURE_NAMES);
    header.push("target");
    let csv_err = |source| DataError::Csv {
        path: path.to_path_buf(),
        source,
    };
    writer.write_record(&header).map_err(csv_err)?;
    for row in &set.rows {
        let mut fields = vec![
            row.location.ap_id.clone(),
            row.location.building.clone(),
            row.bucket_start.format("%Y-%m-%d %H:%M").to_string(),
        ];
        fields.extend(row.features.iter().map(|v| v.to_string()));
        fields.push(row.target.to_string());
        writer.write_record(&fields).map_err(csv_err)?;
    }
    let bytes = writer.into_inner().expect("writing to Vec cannot fail");
    report::write_atomic(path, &bytes).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn week_anchor(first: NaiveDateTime) -> NaiveDate {
    let date = first.date();
    date - TimeDelta::days(i64::from(date.weekday().num_days_from_monday()))
}

/// Splits a supervised set into train and test parts by calendar week.
///
/// Week 1 opens on the Monday of the week holding the earliest row. Rows in
/// weeks `1..=train_weeks` train, rows in `test_week` test, later rows are
/// dropped. Fails unless the data reaches the test week.
pub fn split_train_test(
    set: &SupervisedSet,
    spec: &SplitSpec,
) -> Result<(SupervisedSet, SupervisedSet), DataError> {
    spec.validate()?;
    let first = set
        .rows
        .iter()
        .map(|r| r.bucket_start)
        .min()
        .ok_or(DataError::NoSupervisedRows)?;
    let anchor = week_anchor(first);
    let week = |ts: NaiveDateTime| -> u32 { ((ts.date() - anchor).num_days() / 7) as u32 + 1 };

    let last_week = set
        .rows
        .iter()
        .map(|r| week(r.bucket_start))
        .max()
        .expect("set has rows");
    if last_week < spec.test_week {
        return Err(DataError::InsufficientSpan {
            weeks: last_week,
            needed: spec.test_week,
        });
    }

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut dropped = 0usize;
    for row in &set.rows {
        let w = week(row.bucket_start);
        if w <= spec.train_weeks {
            train.push(row.clone());
        } else if w == spec.test_week {
            test.push(row.clone());
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::debug!(
            "split dropped {dropped} row(s) outside the first {} weeks",
            spec.test_week
        );
    }

    let part = |rows: Vec<SupervisedRow>| SupervisedSet {
        bucket_minutes: set.bucket_minutes,
        horizon_minutes: set.horizon_minutes,
        rows,
    };
    Ok((part(train), part(test)))
}
