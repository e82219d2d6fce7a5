//! Sliding-window samples that fuse the target with weighted neighbours.

use alloc::vec::Vec;
use core::ops::Range;

use crate::correlation::CorrelationWeightMap;
use crate::error::{Error, Result};
use crate::series::Dataset;

/// Input window length: one hour of 5-minute steps.
pub const INPUT_STEPS: usize = 12;

/// One forecasting example.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedSample {
    /// Row-major `INPUT_STEPS x features`; column 0 is the raw target, column
    /// `j > 0` the `j`-th selected neighbour multiplied by its weight.
    pub x: Vec<f64>,
    /// Target value one step after the window.
    pub y: f64,
    /// Dataset step index of `y`.
    pub step: usize,
}

/// Resolved column sources for one weight map.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionPlan {
    /// Dataset series indices, target first.
    pub columns: Vec<usize>,
    /// Neighbour weights, aligned with `columns[1..]`.
    pub weights: Vec<f64>,
}

impl FusionPlan {
    pub fn new(dataset: &Dataset, map: &CorrelationWeightMap) -> Result<Self> {
        let position = |id| {
            dataset
                .position(id)
                .ok_or_else(|| Error::UnknownSensor(id.as_str().into()))
        };
        let mut columns = Vec::with_capacity(map.k + 1);
        columns.push(position(&map.target)?);
        let mut weights = Vec::with_capacity(map.k);
        for e in map.selected() {
            columns.push(position(&e.neighbor)?);
            weights.push(e.weight);
        }
        Ok(Self { columns, weights })
    }

    pub fn features(&self) -> usize {
        self.columns.len()
    }

    /// Raw, unweighted values of every column over `range`.
    pub fn raw_columns<'a>(&self, dataset: &'a Dataset, range: Range<usize>) -> Vec<&'a [f64]> {
        self.columns
            .iter()
            .map(|&c| &dataset.series()[c].values()[range.clone()])
            .collect()
    }

    /// Samples whose target step lies in `targets`; windows may reach back
    /// before `targets.start` but never before step 0.
    pub fn samples(&self, dataset: &Dataset, targets: Range<usize>) -> Vec<FusedSample> {
        let first = targets.start.max(INPUT_STEPS);
        let last = targets.end.min(dataset.n_steps());
        let d = self.features();
        let series = dataset.series();
        let mut out = Vec::with_capacity(last.saturating_sub(first));
        for step in first..last {
            let mut x = Vec::with_capacity(INPUT_STEPS * d);
            for t in step - INPUT_STEPS..step {
                x.push(series[self.columns[0]].values()[t]);
                for (c, w) in self.columns[1..].iter().zip(&self.weights) {
                    x.push(w * series[*c].values()[t]);
                }
            }
            out.push(FusedSample {
                x,
                y: series[self.columns[0]].values()[step],
                step,
            });
        }
        out
    }
}

/// Every sample of `dataset` under `map`, stride 1.
pub fn build_samples(dataset: &Dataset, map: &CorrelationWeightMap) -> Result<Vec<FusedSample>> {
    if dataset.n_steps() <= INPUT_STEPS {
        return Err(Error::InvalidValue(alloc::format!(
            "need more than {INPUT_STEPS} steps to build a sample, got {}",
            dataset.n_steps()
        )));
    }
    let plan = FusionPlan::new(dataset, map)?;
    Ok(plan.samples(dataset, 0..dataset.n_steps()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{IndicatorKind, SensorId, SensorSeries};
    use alloc::vec;

    fn dataset(n: usize) -> Dataset {
        let mk = |name: &str, f: fn(usize) -> f64| {
            SensorSeries::new(
                SensorId::new(name).unwrap(),
                0,
                300,
                (0..n).map(f).collect(),
            )
            .unwrap()
        };
        Dataset::new(
            vec![
                mk("t", |i| i as f64),
                mk("a", |i| 2.0 * i as f64),
                mk("b", |i| 1000.0 + i as f64),
            ],
            IndicatorKind::Speed,
        )
        .unwrap()
    }

    fn id(s: &str) -> SensorId {
        SensorId::new(s).unwrap()
    }

    #[test]
    fn shape_and_count() {
        let ds = dataset(100);
        let map = CorrelationWeightMap::fixed(id("t"), vec![(id("a"), 0.5), (id("b"), 0.25)]);
        let samples = build_samples(&ds, &map).unwrap();
        assert_eq!(samples.len(), 88);
        assert!(samples.iter().all(|s| s.x.len() == 12 * 3));
        let s = &samples[0];
        assert_eq!(s.step, 12);
        assert_eq!(s.y, 12.0);
        assert_eq!(&s.x[..3], &[0.0, 0.0, 250.0]);
        assert_eq!(&s.x[33..], &[11.0, 11.0, 0.25 * 1011.0]);
    }

    #[test]
    fn zero_weights_zero_columns() {
        let ds = dataset(40);
        let map = CorrelationWeightMap::fixed(id("t"), vec![(id("a"), 0.0), (id("b"), 0.0)]);
        for s in build_samples(&ds, &map).unwrap() {
            for row in s.x.chunks(3) {
                assert_eq!(&row[1..], &[0.0, 0.0]);
            }
        }
    }

    #[test]
    fn target_only() {
        let ds = dataset(40);
        let samples = build_samples(&ds, &CorrelationWeightMap::target_only(id("t"))).unwrap();
        assert!(samples.iter().all(|s| s.x.len() == 12));
    }

    #[test]
    fn unknown_sensor_or_short_data() {
        let ds = dataset(40);
        let map = CorrelationWeightMap::fixed(id("t"), vec![(id("zz"), 1.0)]);
        assert!(matches!(
            build_samples(&ds, &map),
            Err(Error::UnknownSensor(_))
        ));
        let short = dataset(12);
        assert!(build_samples(&short, &CorrelationWeightMap::target_only(id("t"))).is_err());
    }

    #[test]
    fn ranged_samples_reach_back_into_history() {
        let ds = dataset(50);
        let plan = FusionPlan::new(&ds, &CorrelationWeightMap::target_only(id("t"))).unwrap();
        let s = plan.samples(&ds, 30..35);
        assert_eq!(s.len(), 5);
        assert_eq!(s[0].x[0], 18.0);
    }
}
