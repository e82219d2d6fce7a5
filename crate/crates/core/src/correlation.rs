//! Neighbour selection by Pearson correlation of outlier-score streams.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::autoencoder::OutlierScoreSeries;
use crate::error::{Error, Result};
use crate::math::{floor_fraction, sqrt};
use crate::series::SensorId;

/// Sample Pearson correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub r: f64,
    /// Set when either input has zero variance; `r` is then 0.
    pub degenerate: bool,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Pearson> {
    if x.len() != y.len() {
        return Err(Error::Dimension {
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidValue(format!(
            "pearson needs at least 2 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Pearson {
            r: 0.0,
            degenerate: true,
        });
    }
    Ok(Pearson {
        r: (sxy / (sqrt(sxx) * sqrt(syy))).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// How correlation coefficients become ranks and weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// Rank by `|r|`, weight `|r|`.
    #[default]
    Absolute,
    /// Rank by `r`, weight `max(r, 0)`.
    Signed,
}

/// Span of score history used for correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum History {
    /// Every aligned score seen so far.
    #[default]
    Expanding,
    /// Only the most recent `n` aligned scores.
    Sliding(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SelectorConfig {
    pub theta: f64,
    pub mode: WeightMode,
    pub history: History,
}

impl SelectorConfig {
    pub fn with_theta(theta: f64) -> Self {
        Self {
            theta,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborWeight {
    pub neighbor: SensorId,
    pub r: f64,
    pub weight: f64,
    pub selected: bool,
}

/// Every candidate neighbour of `target` ranked best first; the first `k`
/// entries are the selected ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationWeightMap {
    pub target: SensorId,
    pub theta: f64,
    pub k: usize,
    pub entries: Vec<NeighborWeight>,
}

impl CorrelationWeightMap {
    /// Map that selects nothing (`theta = 0`).
    pub fn target_only(target: SensorId) -> Self {
        Self {
            target,
            theta: 0.0,
            k: 0,
            entries: Vec::new(),
        }
    }

    /// Map with an explicit selection, used by tests and fixed fusions.
    pub fn fixed(target: SensorId, selected: Vec<(SensorId, f64)>) -> Self {
        let k = selected.len();
        let entries = selected
            .into_iter()
            .map(|(neighbor, weight)| NeighborWeight {
                neighbor,
                r: weight,
                weight,
                selected: true,
            })
            .collect();
        Self {
            target,
            theta: f64::NAN,
            k,
            entries,
        }
    }

    pub fn selected(&self) -> impl Iterator<Item = &NeighborWeight> {
        self.entries.iter().take(self.k)
    }

    pub fn selected_ids(&self) -> Vec<SensorId> {
        self.selected().map(|e| e.neighbor.clone()).collect()
    }
}

/// `floor(theta * n_sensors)`, capped at the number of possible neighbours.
pub fn neighbor_count(theta: f64, n_sensors: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Config(format!(
            "theta must lie in [0, 1], got {theta}"
        )));
    }
    Ok(floor_fraction(theta, n_sensors).min(n_sensors.saturating_sub(1)))
}

/// Correlates `target`'s score stream with every other stream in `scores`
/// and selects the top `floor(theta * N)` neighbours.
///
/// Ties in the ranking key fall back to sensor-id order.
pub fn compute_weights(
    scores: &BTreeMap<SensorId, OutlierScoreSeries>,
    target: &SensorId,
    cfg: &SelectorConfig,
) -> Result<CorrelationWeightMap> {
    let k = neighbor_count(cfg.theta, scores.len())?;
    let target_series = scores
        .get(target)
        .ok_or_else(|| Error::UnknownSensor(target.as_str().to_owned()))?;
    let n = target_series.len();
    let from = match cfg.history {
        History::Expanding => 0,
        History::Sliding(w) => n.saturating_sub(w),
    };
    let tv: Vec<f64> = target_series.scores[from..].iter().map(|s| s.1).collect();

    let mut entries = Vec::with_capacity(scores.len().saturating_sub(1));
    for (id, series) in scores {
        if id == target {
            continue;
        }
        let aligned = series.len() == n
            && series
                .scores
                .iter()
                .zip(&target_series.scores)
                .all(|(a, b)| a.0 == b.0);
        if !aligned {
            return Err(Error::Misaligned {
                first: target.as_str().to_owned(),
                second: id.as_str().to_owned(),
            });
        }
        let r = if tv.len() < 2 {
            0.0
        } else {
            let nv: Vec<f64> = series.scores[from..].iter().map(|s| s.1).collect();
            pearson(&tv, &nv)?.r
        };
        let weight = match cfg.mode {
            WeightMode::Absolute => r.abs(),
            WeightMode::Signed => r.max(0.0),
        };
        entries.push(NeighborWeight {
            neighbor: id.clone(),
            r,
            weight,
            selected: false,
        });
    }
    let key = |e: &NeighborWeight| match cfg.mode {
        WeightMode::Absolute => e.r.abs(),
        WeightMode::Signed => e.r,
    };
    entries.sort_by(|a, b| {
        key(b)
            .partial_cmp(&key(a))
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.neighbor.cmp(&b.neighbor))
    });
    for e in entries.iter_mut().take(k) {
        e.selected = true;
    }
    Ok(CorrelationWeightMap {
        target: target.clone(),
        theta: cfg.theta,
        k,
        entries,
    })
}
