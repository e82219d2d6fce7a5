//! Uniformly sampled sensor streams and the multi-sensor [`Dataset`].

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::math::floor_fraction;

/// Default sampling interval of the supported datasets, in seconds.
pub const DEFAULT_SAMPLE_INTERVAL: i64 = 300;

/// Opaque, non-empty sensor identifier.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SensorId(String);

impl SensorId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::InvalidValue(
                "sensor id must be non-empty".to_owned(),
            ));
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<&str> for SensorId {
    type Error = Error;

    fn try_from(value: &str) -> Result<Self> {
        Self::new(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReading {
    /// Seconds since the Unix epoch.
    pub timestamp: i64,
    pub value: f64,
}

/// What the readings of a dataset measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndicatorKind {
    #[default]
    FlowCount,
    Speed,
}

/// One sensor's stream on a uniform grid `start + i * sample_interval`.
///
/// Storing the grid origin and step instead of a timestamp per reading makes
/// the "strictly increasing, evenly spaced" invariant hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSeries {
    id: SensorId,
    start: i64,
    sample_interval: i64,
    values: Vec<f64>,
}

impl SensorSeries {
    pub fn new(id: SensorId, start: i64, sample_interval: i64, values: Vec<f64>) -> Result<Self> {
        if sample_interval <= 0 {
            return Err(Error::InvalidValue(format!(
                "sample interval must be positive, got {sample_interval}"
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidValue(format!(
                "sensor `{id}` reading {i} is {v}; readings must be finite and non-negative"
            )));
        }
        Ok(Self {
            id,
            start,
            sample_interval,
            values,
        })
    }

    pub fn id(&self) -> &SensorId {
        &self.id
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn sample_interval(&self) -> i64 {
        self.sample_interval
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

    pub fn timestamp(&self, index: usize) -> i64 {
        self.start + index as i64 * self.sample_interval
    }

    pub fn readings(&self) -> impl Iterator<Item = SensorReading> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &value)| SensorReading {
                timestamp: self.timestamp(i),
                value,
            })
    }

    fn slice(&self, range: Range<usize>) -> Self {
        Self {
            id: self.id.clone(),
            start: self.timestamp(range.start),
            sample_interval: self.sample_interval,
            values: self.values[range].to_vec(),
        }
    }
}

/// A set of time-aligned sensor series sharing one timestamp grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    series: Vec<SensorSeries>,
    indicator: IndicatorKind,
}

impl Dataset {
    pub fn new(series: Vec<SensorSeries>, indicator: IndicatorKind) -> Result<Self> {
        if series.len() < 2 {
            return Err(Error::InvalidValue(format!(
                "a dataset needs at least 2 sensors, got {}",
                series.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for s in &series {
            if !seen.insert(s.id()) {
                return Err(Error::DuplicateSensor(s.id().as_str().to_owned()));
            }
        }
        let first = &series[0];
        for s in &series[1..] {
            if s.start != first.start
                || s.sample_interval != first.sample_interval
                || s.len() != first.len()
            {
                return Err(Error::Misaligned {
                    first: first.id().as_str().to_owned(),
                    second: s.id().as_str().to_owned(),
                });
            }
        }
        Ok(Self { series, indicator })
    }

    pub fn series(&self) -> &[SensorSeries] {
        &self.series
    }

    pub fn indicator(&self) -> IndicatorKind {
        self.indicator
    }

    pub fn n_sensors(&self) -> usize {
        self.series.len()
    }

    pub fn n_steps(&self) -> usize {
        self.series[0].len()
    }

    pub fn start(&self) -> i64 {
        self.series[0].start
    }

    pub fn sample_interval(&self) -> i64 {
        self.series[0].sample_interval
    }

    pub fn timestamp(&self, index: usize) -> i64 {
        self.series[0].timestamp(index)
    }

    pub fn sensor_ids(&self) -> impl Iterator<Item = &SensorId> {
        self.series.iter().map(SensorSeries::id)
    }

    pub fn position(&self, id: &SensorId) -> Option<usize> {
        self.series.iter().position(|s| s.id() == id)
    }

    pub fn get(&self, id: &SensorId) -> Option<&SensorSeries> {
        self.series.iter().find(|s| s.id() == id)
    }

    pub fn require(&self, id: &SensorId) -> Result<&SensorSeries> {
        self.get(id)
            .ok_or_else(|| Error::UnknownSensor(id.as_str().to_owned()))
    }

    /// Sub-dataset over the step range `range`.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start > range.end || range.end > self.n_steps() {
            return Err(Error::InvalidValue(format!(
                "step range {}..{} outside 0..{}",
                range.start,
                range.end,
                self.n_steps()
            )));
        }
        Ok(Self {
            series: self.series.iter().map(|s| s.slice(range.clone())).collect(),
            indicator: self.indicator,
        })
    }

    /// Temporal split: the first part holds the first `floor(fraction * n_steps)` steps.
    pub fn split(&self, fraction: f64) -> Result<(Self, Self)> {
        let n = self.n_steps();
        let cut = split_index(n, fraction)?;
        Ok((self.slice(0..cut)?, self.slice(cut..n)?))
    }
}

/// Index at which [`Dataset::split`] cuts a stream of `n_steps` steps.
pub fn split_index(n_steps: usize, fraction: f64) -> Result<usize> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidValue(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let cut = floor_fraction(fraction, n_steps);
    if cut < 1 || cut >= n_steps {
        return Err(Error::InvalidValue(format!(
            "split of {n_steps} steps at {fraction} leaves an empty part"
        )));
    }
    Ok(cut)
}

/// Fills missing cells of one column.
///
/// Interior gaps are linearly interpolated between the nearest valid
/// neighbours; leading and trailing gaps copy the nearest valid value.
/// Returns the repaired column and the number of cells filled, or `None`
/// when the column has no valid cell at all.
pub fn repair_gaps(cells: &[Option<f64>]) -> Option<(Vec<f64>, usize)> {
    let valid: Vec<usize> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|_| i))
        .collect();
    let (&first, &last) = (valid.first()?, valid.last()?);
    let mut out = Vec::with_capacity(cells.len());
    let mut filled = 0;
    let mut next = 0; // index into `valid` of the first valid cell at or after i
    for (i, cell) in cells.iter().enumerate() {
        match cell {
            Some(v) => {
                out.push(*v);
                next += 1;
            }
            None => {
                filled += 1;
                let v = if i < first {
                    cells[first].unwrap_or_default()
                } else if i > last {
                    cells[last].unwrap_or_default()
                } else {
                    let (lo, hi) = (valid[next - 1], valid[next]);
                    let (a, b) = (cells[lo].unwrap_or_default(), cells[hi].unwrap_or_default());
                    a + (b - a) * (i - lo) as f64 / (hi - lo) as f64
                };
                out.push(v);
            }
        }
    }
    Some((out, filled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn id(s: &str) -> SensorId {
        SensorId::new(s).unwrap()
    }

    fn dataset(n: usize) -> Dataset {
        let a = SensorSeries::new(id("a"), 0, 300, (0..n).map(|i| i as f64).collect()).unwrap();
        let b = SensorSeries::new(id("b"), 0, 300, vec![1.0; n]).unwrap();
        Dataset::new(vec![a, b], IndicatorKind::FlowCount).unwrap()
    }

    #[test]
    fn midpoint_is_interpolated() {
        let (out, filled) = repair_gaps(&[Some(4.0), None, Some(8.0)]).unwrap();
        assert_eq!(out, vec![4.0, 6.0, 8.0]);
        assert_eq!(filled, 1);
    }

    #[test]
    fn boundary_gaps_take_nearest_value() {
        let (out, filled) = repair_gaps(&[None, None, Some(2.0), None, Some(5.0), None]).unwrap();
        assert_eq!(out, vec![2.0, 2.0, 2.0, 3.5, 5.0, 5.0]);
        assert_eq!(filled, 4);
        assert!(repair_gaps(&[None, None]).is_none());
    }

    #[test]
    fn split_floors_the_cut() {
        let (a, b) = dataset(100).split(0.8).unwrap();
        assert_eq!((a.n_steps(), b.n_steps()), (80, 20));
        let (a, b) = dataset(100).split(0.5).unwrap();
        assert_eq!((a.n_steps(), b.n_steps()), (50, 50));
        let (a, b) = dataset(7).split(0.8).unwrap();
        assert_eq!((a.n_steps(), b.n_steps()), (5, 2));
        assert_eq!(b.start(), 5 * 300);
        assert_eq!(b.series()[0].values()[0], 5.0);
    }

    #[test]
    fn split_rejects_empty_parts() {
        assert!(dataset(1).split(0.5).is_err());
        assert!(dataset(10).split(0.0).is_err());
        assert!(dataset(10).split(1.0).is_err());
        assert!(dataset(10).split(0.05).is_err());
    }

    #[test]
    fn dataset_invariants() {
        let a = SensorSeries::new(id("a"), 0, 300, vec![1.0; 3]).unwrap();
        assert!(Dataset::new(vec![a.clone()], IndicatorKind::Speed).is_err());
        assert!(matches!(
            Dataset::new(vec![a.clone(), a.clone()], IndicatorKind::Speed),
            Err(Error::DuplicateSensor(_))
        ));
        let shifted = SensorSeries::new(id("b"), 300, 300, vec![1.0; 3]).unwrap();
        assert!(matches!(
            Dataset::new(vec![a, shifted], IndicatorKind::Speed),
            Err(Error::Misaligned { .. })
        ));
        assert!(SensorSeries::new(id("c"), 0, 300, vec![-1.0]).is_err());
        assert!(SensorSeries::new(id("c"), 0, 300, vec![f64::NAN]).is_err());
        assert!(SensorId::new("  ").is_err());
    }

    #[test]
    fn readings_walk_the_grid() {
        let ds = dataset(4);
        let ts: Vec<i64> = ds.series()[0].readings().map(|r| r.timestamp).collect();
        assert_eq!(ts, vec![0, 300, 600, 900]);
    }
}
