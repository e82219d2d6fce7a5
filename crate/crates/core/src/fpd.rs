//! Flow probability distributions: one normalised histogram of sub-interval
//! volumes per aggregation window.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::series::{SensorId, SensorSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FpdConfig {
    /// Aggregation window in seconds.
    pub window: i64,
    /// Width of one bin in seconds; must equal the series sample interval.
    pub bin_interval: i64,
}

impl Default for FpdConfig {
    fn default() -> Self {
        Self {
            window: 3600,
            bin_interval: 300,
        }
    }
}

impl FpdConfig {
    pub fn new(window: i64, bin_interval: i64) -> Result<Self> {
        let cfg = Self {
            window,
            bin_interval,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bin_interval <= 0 || self.window <= 0 || self.window % self.bin_interval != 0 {
            return Err(Error::Config(format!(
                "FPD window {} must be a positive multiple of the bin interval {}",
                self.window, self.bin_interval
            )));
        }
        if self.window / self.bin_interval < 2 {
            return Err(Error::Config(format!(
                "FPD window {} holds fewer than 2 bins of {}",
                self.window, self.bin_interval
            )));
        }
        Ok(())
    }

    /// Number of bins `B` per distribution.
    pub fn bins(&self) -> usize {
        (self.window / self.bin_interval) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fpd {
    pub sensor: SensorId,
    pub window_start: i64,
    pub probs: Vec<f64>,
}

/// Normalises one window of volumes into a distribution over its bins.
///
/// An all-zero window maps to the uniform distribution.
pub fn aggregate_window(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidValue("empty FPD window".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidValue(format!(
            "FPD input {v} is negative or non-finite"
        )));
    }
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        let u = 1.0 / values.len() as f64;
        return Ok(alloc::vec![u; values.len()]);
    }
    Ok(values.iter().map(|v| v / total).collect())
}

/// One [`Fpd`] per complete, non-overlapping window of `series`, in order.
///
/// Windows start at the first reading; a trailing partial window is dropped.
pub fn fpd_stream(series: &SensorSeries, cfg: &FpdConfig) -> Result<Vec<Fpd>> {
    fpd_range(series, cfg, 0, series.len())
}

/// Like [`fpd_stream`], restricted to windows that lie fully inside steps
/// `[from, to)`, with windows anchored at step 0 of the series.
///
/// `from` must be a multiple of the bin count so that streams computed in
/// pieces line up with [`fpd_stream`].
pub fn fpd_range(
    series: &SensorSeries,
    cfg: &FpdConfig,
    from: usize,
    to: usize,
) -> Result<Vec<Fpd>> {
    cfg.validate()?;
    if series.sample_interval() != cfg.bin_interval {
        return Err(Error::Config(format!(
            "series `{}` is sampled every {} s but FPD bins are {} s",
            series.id(),
            series.sample_interval(),
            cfg.bin_interval
        )));
    }
    let b = cfg.bins();
    if !from.is_multiple_of(b) {
        return Err(Error::InvalidValue(format!(
            "FPD range start {from} is not aligned to {b}-step windows"
        )));
    }
    let to = to.min(series.len());
    let values = series.values();
    let mut out = Vec::new();
    let mut start = from;
    while start + b <= to {
        out.push(Fpd {
            sensor: series.id().clone(),
            window_start: series.timestamp(start),
            probs: aggregate_window(&values[start..start + b])?,
        });
        start += b;
    }
    Ok(out)
}
