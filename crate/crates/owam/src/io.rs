//! CSV ingestion onto a uniform grid, and canonical wide output.
//!
//! Wide files carry a header `timestamp,<sensor>,...`; long files carry
//! `timestamp,sensor,value`. Timestamps are integer epoch seconds or ISO-8601
//! (naive times are read as UTC). Empty cells are missing and are repaired
//! by linear interpolation, with nearest-value extension at the edges.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime};
use owam_core::series::repair_gaps;
use owam_core::{Dataset, IndicatorKind, SensorId, SensorSeries};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    #[default]
    Wide,
    Long,
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "wide" => Ok(Self::Wide),
            "long" => Ok(Self::Long),
            other => Err(format!("unknown layout {other:?}, expected wide or long")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub layout: Layout,
    /// Grid spacing in seconds.
    pub sample_interval: i64,
    pub indicator: IndicatorKind,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            layout: Layout::Wide,
            sample_interval: owam_core::series::DEFAULT_SAMPLE_INTERVAL,
            indicator: IndicatorKind::FlowCount,
        }
    }
}

/// A loaded dataset and the number of grid cells repaired per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub dataset: Dataset,
    pub repaired: Vec<(SensorId, usize)>,
}

/// Parses integer epoch seconds, RFC 3339, or a naive `YYYY-MM-DD[ T]HH:MM[:SS[.f]]`.
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.timestamp());
    }
    const FORMATS: [&str; 4] = [
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M",
        "%Y-%m-%dT%H:%M",
    ];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|t| t.and_utc().timestamp())
}

pub fn load_csv(path: &Path, opts: &LoadOptions) -> Result<Loaded> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, path, opts)
}

/// Like [`load_csv`] over any reader; `path` only labels error messages.
pub fn read_csv<R: Read>(reader: R, path: &Path, opts: &LoadOptions) -> Result<Loaded> {
    if opts.sample_interval <= 0 {
        return Err(Error::Config(format!(
            "sample interval must be positive, got {}",
            opts.sample_interval
        )));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();

    // Sensor order as first seen; cells as (timestamp, value-or-missing, line).
    let mut order: Vec<String> = Vec::new();
    let mut cells: BTreeMap<String, Vec<(i64, Option<f64>, u64)>> = BTreeMap::new();
    let mut timestamps: Vec<(i64, u64)> = Vec::new();

    match opts.layout {
        Layout::Wide => {
            if header.len() < 2 {
                return Err(parse_err(
                    1,
                    "wide layout needs a timestamp and at least one sensor column".into(),
                ));
            }
            for name in header.iter().skip(1) {
                let name = name.trim();
                if name.is_empty() {
                    return Err(parse_err(1, "empty sensor name in header".into()));
                }
                if cells.insert(name.to_owned(), Vec::new()).is_some() {
                    return Err(parse_err(1, format!("duplicate sensor column {name:?}")));
                }
                order.push(name.to_owned());
            }
            let mut last: Option<i64> = None;
            for rec in rdr.records() {
                let rec = rec
                    .map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
                let line = rec.position().map_or(0, |p| p.line());
                let t = parse_timestamp(&rec[0]).ok_or_else(|| {
                    parse_err(line, format!("unparseable timestamp {:?}", &rec[0]))
                })?;
                if last.is_some_and(|prev| t <= prev) {
                    return Err(parse_err(line, format!("timestamp {t} does not increase")));
                }
                last = Some(t);
                timestamps.push((t, line));
                for (name, raw) in order.iter().zip(rec.iter().skip(1)) {
                    let v = parse_value(raw)
                        .map_err(|m| parse_err(line, format!("sensor {name}: {m}")))?;
                    cells
                        .get_mut(name)
                        .expect("declared in header")
                        .push((t, v, line));
                }
            }
        }
        Layout::Long => {
            let names: Vec<&str> = header.iter().map(str::trim).collect();
            if names != ["timestamp", "sensor", "value"] {
                return Err(parse_err(
                    1,
                    format!("long layout expects header timestamp,sensor,value, got {names:?}"),
                ));
            }
            for rec in rdr.records() {
                let rec = rec
                    .map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
                let line = rec.position().map_or(0, |p| p.line());
                let t = parse_timestamp(&rec[0]).ok_or_else(|| {
                    parse_err(line, format!("unparseable timestamp {:?}", &rec[0]))
                })?;
                let name = rec[1].trim();
                if name.is_empty() {
                    return Err(parse_err(line, "empty sensor name".into()));
                }
                let v = parse_value(&rec[2])
                    .map_err(|m| parse_err(line, format!("sensor {name}: {m}")))?;
                let entry = cells.entry(name.to_owned()).or_insert_with(|| {
                    order.push(name.to_owned());
                    Vec::new()
                });
                if entry.last().is_some_and(|&(prev, _, _)| t <= prev) {
                    return Err(parse_err(
                        line,
                        format!("timestamp {t} does not increase for sensor {name}"),
                    ));
                }
                entry.push((t, v, line));
                timestamps.push((t, line));
            }
        }
    }

    let (t0, t1) = match (
        timestamps.iter().map(|p| p.0).min(),
        timestamps.iter().map(|p| p.0).max(),
    ) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(parse_err(1, "no data rows".into())),
    };
    let step = opts.sample_interval;
    for &(t, line) in &timestamps {
        if (t - t0) % step != 0 {
            return Err(parse_err(
                line,
                format!("timestamp {t} is off the {step}-second grid starting at {t0}"),
            ));
        }
    }
    let n = ((t1 - t0) / step + 1) as usize;

    let mut series = Vec::with_capacity(order.len());
    let mut repaired = Vec::with_capacity(order.len());
    for name in &order {
        let mut grid = vec![None; n];
        for &(t, v, _) in &cells[name] {
            grid[((t - t0) / step) as usize] = v;
        }
        let id = SensorId::new(name.as_str())?;
        let (values, filled) =
            repair_gaps(&grid).ok_or_else(|| owam_core::Error::EmptySensor(name.clone()))?;
        repaired.push((id.clone(), filled));
        series.push(SensorSeries::new(id, t0, step, values)?);
    }
    Ok(Loaded {
        dataset: Dataset::new(series, opts.indicator)?,
        repaired,
    })
}

fn parse_value(raw: &str) -> Result<Option<f64>, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("unparseable value {raw:?}"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("value {raw} must be finite and non-negative"));
    }
    Ok(Some(v))
}

/// Canonical wide CSV: epoch-second timestamps and shortest round-trip floats.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["timestamp".to_owned()];
    header.extend(dataset.sensor_ids().map(|id| id.as_str().to_owned()));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..dataset.n_steps() {
        row.clear();
        row.push(dataset.timestamp(i).to_string());
        row.extend(dataset.series().iter().map(|s| s.values()[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(dataset, std::io::BufWriter::new(file))
}
