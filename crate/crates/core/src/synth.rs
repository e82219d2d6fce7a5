//! Seeded synthetic multi-sensor traffic with injected anomalies.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::series::{Dataset, IndicatorKind, SensorId, SensorSeries, DEFAULT_SAMPLE_INTERVAL};

/// Steps in one simulated day at the default 5-minute rate.
pub const STEPS_PER_DAY: usize = 288;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasePattern {
    /// Two-peak daily profile, each sensor with its own level and phase.
    #[default]
    Diurnal,
    /// Constant `base_level` on every sensor.
    Flat,
    /// `Diurnal` on five days of seven; days 5 and 6 of each week follow a
    /// lower single-peak profile.
    Weekly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnomalyKind {
    Spike,
    Drop,
    Shift,
}

/// Multiplies the affected sensors by `magnitude` on `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnomalySpec {
    pub sensor_ids: Vec<SensorId>,
    pub start: i64,
    pub end: i64,
    pub kind: AnomalyKind,
    pub magnitude: f64,
}

impl AnomalySpec {
    fn validate(&self, known: &BTreeSet<&SensorId>) -> Result<()> {
        if self.start >= self.end {
            return Err(Error::InvalidValue(format!(
                "anomaly window [{}, {}) is empty",
                self.start, self.end
            )));
        }
        if !(self.magnitude.is_finite() && self.magnitude > 0.0) {
            return Err(Error::InvalidValue(format!(
                "anomaly magnitude must be positive, got {}",
                self.magnitude
            )));
        }
        match self.kind {
            AnomalyKind::Spike if self.magnitude <= 1.0 => Err(Error::InvalidValue(format!(
                "spike magnitude must exceed 1, got {}",
                self.magnitude
            ))),
            AnomalyKind::Drop if self.magnitude >= 1.0 => Err(Error::InvalidValue(format!(
                "drop magnitude must be below 1, got {}",
                self.magnitude
            ))),
            _ => Ok(()),
        }?;
        for id in &self.sensor_ids {
            if !known.contains(id) {
                return Err(Error::UnknownSensor(id.as_str().to_owned()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_sensors: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub base_pattern: BasePattern,
    /// Mean level of the base signal.
    pub base_level: f64,
    /// Standard deviation of additive Gaussian noise, in signal units.
    pub noise_sigma: f64,
    pub anomalies: Vec<AnomalySpec>,
    /// Epoch seconds of the first step.
    pub start: i64,
    pub sample_interval: i64,
}

impl SynthConfig {
    pub fn new(n_sensors: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            n_sensors,
            n_steps,
            seed,
            base_pattern: BasePattern::Diurnal,
            base_level: 100.0,
            noise_sigma: 0.0,
            anomalies: Vec::new(),
            start: 0,
            sample_interval: DEFAULT_SAMPLE_INTERVAL,
        }
    }

    pub fn timestamp(&self, step: usize) -> i64 {
        self.start + step as i64 * self.sample_interval
    }
}

/// Canonical id of the `index`-th synthetic sensor.
pub fn sensor_name(index: usize) -> SensorId {
    SensorId::new(format!("s{index:03}")).expect("non-empty")
}

/// Daily profile in `[0.3, 1.7]` for a day fraction `x`.
fn diurnal_profile(x: f64) -> f64 {
    1.0 + 0.5 * libm::sin(TAU * (x - 0.25)) + 0.2 * libm::sin(2.0 * TAU * x)
}

/// Weekend profile in `[0.45, 1.15]`: one broad midday hump.
fn weekend_profile(x: f64) -> f64 {
    0.8 + 0.35 * libm::sin(TAU * (x - 0.3))
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<Dataset> {
    if cfg.n_sensors < 2 {
        return Err(Error::InvalidValue(format!(
            "need at least 2 sensors, got {}",
            cfg.n_sensors
        )));
    }
    if cfg.n_steps < STEPS_PER_DAY {
        return Err(Error::InvalidValue(format!(
            "need at least one simulated day ({STEPS_PER_DAY} steps), got {}",
            cfg.n_steps
        )));
    }
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "noise sigma must be finite and non-negative, got {}",
            cfg.noise_sigma
        )));
    }
    if !(cfg.base_level > 0.0 && cfg.base_level.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "base level must be positive, got {}",
            cfg.base_level
        )));
    }
    let ids: Vec<SensorId> = (0..cfg.n_sensors).map(sensor_name).collect();
    let known: BTreeSet<&SensorId> = ids.iter().collect();
    for a in &cfg.anomalies {
        a.validate(&known)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidValue(format!("noise distribution: {e}")))?;
    let day = STEPS_PER_DAY as f64 * DEFAULT_SAMPLE_INTERVAL as f64 / cfg.sample_interval as f64;

    let mut series = Vec::with_capacity(cfg.n_sensors);
    for id in ids {
        let (level, phase) = match cfg.base_pattern {
            BasePattern::Flat => (cfg.base_level, 0.0),
            BasePattern::Diurnal | BasePattern::Weekly => (
                cfg.base_level * rng.random_range(0.7..1.3),
                rng.random_range(-0.04..0.04),
            ),
        };
        let mut values = Vec::with_capacity(cfg.n_steps);
        for step in 0..cfg.n_steps {
            let base = match cfg.base_pattern {
                BasePattern::Flat => level,
                BasePattern::Diurnal => {
                    let x = (step as f64 % day) / day + phase;
                    level * diurnal_profile(x)
                }
                BasePattern::Weekly => {
                    let x = (step as f64 % day) / day + phase;
                    if (step as f64 / day) as usize % 7 >= 5 {
                        level * weekend_profile(x)
                    } else {
                        level * diurnal_profile(x)
                    }
                }
            };
            let eps = if cfg.noise_sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            values.push(base + eps);
        }
        for a in cfg.anomalies.iter().filter(|a| a.sensor_ids.contains(&id)) {
            for (step, v) in values.iter_mut().enumerate() {
                let t = cfg.timestamp(step);
                if t >= a.start && t < a.end {
                    *v *= a.magnitude;
                }
            }
        }
        for v in &mut values {
            *v = v.max(0.0);
        }
        series.push(SensorSeries::new(
            id,
            cfg.start,
            cfg.sample_interval,
            values,
        )?);
    }
    Dataset::new(series, IndicatorKind::FlowCount)
}

/// Ready-made experiment datasets built on [`generate_synthetic`].
pub mod scenario {
    use super::*;

    /// One anomaly episode on a step grid.
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Episode {
        pub start: usize,
        pub len: usize,
        pub kind: AnomalyKind,
        pub magnitude: f64,
    }

    /// Random spike/drop episodes of 30 to 90 minutes, starting at a random
    /// step inside roughly `rate` of all hours.
    pub fn random_episodes(rng: &mut ChaCha8Rng, n_steps: usize, rate: f64) -> Vec<Episode> {
        let hours = n_steps / 12;
        let mut out = Vec::new();
        for h in 0..hours {
            if rng.random::<f64>() >= rate {
                continue;
            }
            let start = h * 12 + rng.random_range(1..11);
            let len = rng.random_range(6..19);
            if start + len >= n_steps {
                continue;
            }
            let spike = rng.random::<bool>();
            out.push(Episode {
                start,
                len,
                kind: if spike {
                    AnomalyKind::Spike
                } else {
                    AnomalyKind::Drop
                },
                magnitude: if spike {
                    rng.random_range(2.0..3.0)
                } else {
                    rng.random_range(0.3..0.5)
                },
            });
        }
        out
    }

    fn push_episodes(cfg: &mut SynthConfig, ids: Vec<SensorId>, episodes: &[Episode], lead: usize) {
        for e in episodes {
            let start = e.start.saturating_sub(lead);
            cfg.anomalies.push(AnomalySpec {
                sensor_ids: ids.clone(),
                start: cfg.timestamp(start),
                end: cfg.timestamp(start + e.len),
                kind: e.kind,
                magnitude: e.magnitude,
            });
        }
    }

    /// A target whose anomaly schedule is shared by a planted group of
    /// upstream sensors, among sensors with independent schedules.
    #[derive(Debug, Clone, PartialEq)]
    pub struct PlantedScenario {
        pub config: SynthConfig,
        pub target: SensorId,
        pub planted: Vec<SensorId>,
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct PlantedParams {
        pub n_sensors: usize,
        pub n_planted: usize,
        pub n_days: usize,
        /// Fraction of hours in which an episode starts.
        pub rate: f64,
        /// Steps by which planted sensors see an episode before the target.
        pub lead: usize,
        pub noise_sigma: f64,
        pub base_pattern: BasePattern,
        /// Sensors after the planted group that share the target's episodes
        /// only before `decoy_until` of the stream, and draw their own after.
        pub n_decoys: usize,
        pub decoy_until: f64,
    }

    impl Default for PlantedParams {
        fn default() -> Self {
            Self {
                n_sensors: 20,
                n_planted: 5,
                n_days: 14,
                rate: 0.1,
                lead: 2,
                noise_sigma: 5.0,
                base_pattern: BasePattern::Weekly,
                n_decoys: 5,
                decoy_until: 0.6,
            }
        }
    }

    /// Sensor `s000` is the target and `s001..=s{n_planted}` share its
    /// episodes, `lead` steps earlier. The next `n_decoys` sensors do the
    /// same until `decoy_until`; every other sensor draws its own.
    pub fn planted_correlation(seed: u64, p: &PlantedParams) -> Result<PlantedScenario> {
        if p.n_planted + p.n_decoys + 1 > p.n_sensors {
            return Err(Error::InvalidValue(format!(
                "{} planted and {} decoy sensors do not fit among {} sensors",
                p.n_planted, p.n_decoys, p.n_sensors
            )));
        }
        if !(0.0..=1.0).contains(&p.decoy_until) {
            return Err(Error::InvalidValue(format!(
                "decoy cut-off must lie in [0, 1], got {}",
                p.decoy_until
            )));
        }
        let n_steps = p.n_days * STEPS_PER_DAY;
        let mut cfg = SynthConfig::new(p.n_sensors, n_steps, seed);
        cfg.noise_sigma = p.noise_sigma;
        cfg.base_pattern = p.base_pattern;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
        let shared = random_episodes(&mut rng, n_steps, p.rate);
        let target = sensor_name(0);
        let planted: Vec<SensorId> = (1..=p.n_planted).map(sensor_name).collect();
        push_episodes(&mut cfg, alloc::vec![target.clone()], &shared, 0);
        push_episodes(&mut cfg, planted.clone(), &shared, p.lead);
        let cut = crate::math::floor_fraction(p.decoy_until, n_steps);
        let early: Vec<Episode> = shared
            .iter()
            .copied()
            .filter(|e| e.start + e.len <= cut)
            .collect();
        for i in p.n_planted + 1..p.n_sensors {
            let own = random_episodes(&mut rng, n_steps, p.rate);
            if i <= p.n_planted + p.n_decoys {
                let late: Vec<Episode> = own.into_iter().filter(|e| e.start >= cut).collect();
                push_episodes(&mut cfg, alloc::vec![sensor_name(i)], &early, p.lead);
                push_episodes(&mut cfg, alloc::vec![sensor_name(i)], &late, 0);
            } else {
                push_episodes(&mut cfg, alloc::vec![sensor_name(i)], &own, 0);
            }
        }
        Ok(PlantedScenario {
            config: cfg,
            target,
            planted,
        })
    }

    /// A target whose correlated group changes at `shift_step`, when its
    /// level is also multiplied by `level_factor`.
    #[derive(Debug, Clone, PartialEq)]
    pub struct RegimeShiftScenario {
        pub config: SynthConfig,
        pub target: SensorId,
        /// Sensors sharing the target's episodes before the shift.
        pub before: Vec<SensorId>,
        /// Sensors sharing the target's episodes from the shift on.
        pub after: Vec<SensorId>,
        pub shift_step: usize,
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct RegimeShiftParams {
        pub base: PlantedParams,
        /// Fraction of the stream after which the regime changes.
        pub shift_at: f64,
        pub level_factor: f64,
    }

    impl Default for RegimeShiftParams {
        fn default() -> Self {
            Self {
                base: PlantedParams::default(),
                shift_at: 0.6,
                level_factor: 1.3,
            }
        }
    }

    /// Groups `s001..` and the next `n_planted` sensors take turns sharing
    /// the target's episodes; each draws its own while not coupled.
    pub fn regime_shift(seed: u64, p: &RegimeShiftParams) -> Result<RegimeShiftScenario> {
        let b = &p.base;
        if 2 * b.n_planted + 1 > b.n_sensors {
            return Err(Error::InvalidValue(format!(
                "two groups of {} do not fit among {} sensors",
                b.n_planted, b.n_sensors
            )));
        }
        if !(p.shift_at > 0.0 && p.shift_at < 1.0) {
            return Err(Error::InvalidValue(format!(
                "shift point must lie in (0, 1), got {}",
                p.shift_at
            )));
        }
        let n_steps = b.n_days * STEPS_PER_DAY;
        let shift_step = crate::math::floor_fraction(p.shift_at, n_steps);
        let mut cfg = SynthConfig::new(b.n_sensors, n_steps, seed);
        cfg.noise_sigma = b.noise_sigma;
        cfg.base_pattern = b.base_pattern;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
        let target = sensor_name(0);
        let before: Vec<SensorId> = (1..=b.n_planted).map(sensor_name).collect();
        let after: Vec<SensorId> = (b.n_planted + 1..=2 * b.n_planted)
            .map(sensor_name)
            .collect();

        let shared = random_episodes(&mut rng, n_steps, b.rate);
        let (early, late): (Vec<Episode>, Vec<Episode>) = shared
            .into_iter()
            .partition(|e| e.start + e.len <= shift_step);
        push_episodes(&mut cfg, alloc::vec![target.clone()], &early, 0);
        push_episodes(&mut cfg, alloc::vec![target.clone()], &late, 0);
        push_episodes(&mut cfg, before.clone(), &early, b.lead);
        push_episodes(&mut cfg, after.clone(), &late, b.lead);
        for id in before.iter().chain(&after) {
            let own = random_episodes(&mut rng, n_steps, b.rate);
            let keep: Vec<Episode> = if before.contains(id) {
                own.into_iter().filter(|e| e.start >= shift_step).collect()
            } else {
                own.into_iter()
                    .filter(|e| e.start + e.len + b.lead <= shift_step)
                    .collect()
            };
            push_episodes(&mut cfg, alloc::vec![id.clone()], &keep, 0);
        }
        for i in 2 * b.n_planted + 1..b.n_sensors {
            let own = random_episodes(&mut rng, n_steps, b.rate);
            push_episodes(&mut cfg, alloc::vec![sensor_name(i)], &own, 0);
        }
        if p.level_factor != 1.0 {
            cfg.anomalies.push(AnomalySpec {
                sensor_ids: alloc::vec![target.clone()],
                start: cfg.timestamp(shift_step),
                end: cfg.timestamp(n_steps),
                kind: AnomalyKind::Shift,
                magnitude: p.level_factor,
            });
        }
        Ok(RegimeShiftScenario {
            config: cfg,
            target,
            before,
            after,
            shift_step,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn same_seed_same_bits() {
        let mut cfg = SynthConfig::new(4, 600, 7);
        cfg.noise_sigma = 5.0;
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        for (x, y) in a.series().iter().zip(b.series()) {
            let xb: Vec<u64> = x.values().iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u64> = y.values().iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb);
        }
        cfg.seed = 8;
        assert_ne!(a, generate_synthetic(&cfg).unwrap());
    }

    #[test]
    fn spike_hits_one_sensor_for_one_hour() {
        let mut cfg = SynthConfig::new(3, 600, 1);
        cfg.base_pattern = BasePattern::Flat;
        cfg.noise_sigma = 1.0;
        cfg.anomalies.push(AnomalySpec {
            sensor_ids: vec![sensor_name(0)],
            start: cfg.timestamp(100),
            end: cfg.timestamp(112),
            kind: AnomalyKind::Spike,
            magnitude: 3.0,
        });
        let ds = generate_synthetic(&cfg).unwrap();
        let mean = |s: usize, r: core::ops::Range<usize>| {
            let v = &ds.series()[s].values()[r.clone()];
            v.iter().sum::<f64>() / v.len() as f64
        };
        // 12 draws of sigma 1 noise scaled by 3: the mean is within ~3 * 4 / sqrt(12)
        assert!((mean(0, 100..112) - 300.0).abs() < 4.0);
        assert!((mean(1, 100..112) - 100.0).abs() < 2.0);
        assert!((mean(2, 100..112) - 100.0).abs() < 2.0);
        assert!((mean(0, 112..124) - 100.0).abs() < 2.0);
    }

    #[test]
    fn noiseless_diurnal_repeats_daily() {
        let cfg = SynthConfig::new(3, 2 * STEPS_PER_DAY, 3);
        let ds = generate_synthetic(&cfg).unwrap();
        for s in ds.series() {
            let v = s.values();
            assert_eq!(&v[..STEPS_PER_DAY], &v[STEPS_PER_DAY..]);
        }
    }

    #[test]
    fn noiseless_flat_sensors_are_identical() {
        let mut cfg = SynthConfig::new(5, 300, 11);
        cfg.base_pattern = BasePattern::Flat;
        let ds = generate_synthetic(&cfg).unwrap();
        for s in &ds.series()[1..] {
            assert_eq!(s.values(), ds.series()[0].values());
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let mut cfg = SynthConfig::new(2, 300, 0);
        cfg.anomalies.push(AnomalySpec {
            sensor_ids: vec![SensorId::new("nope").unwrap()],
            start: 0,
            end: 10,
            kind: AnomalyKind::Shift,
            magnitude: 2.0,
        });
        assert!(matches!(
            generate_synthetic(&cfg),
            Err(Error::UnknownSensor(_))
        ));
        assert!(generate_synthetic(&SynthConfig::new(1, 300, 0)).is_err());
        assert!(generate_synthetic(&SynthConfig::new(2, 287, 0)).is_err());
        let mut cfg = SynthConfig::new(2, 300, 0);
        cfg.anomalies.push(AnomalySpec {
            sensor_ids: vec![sensor_name(1)],
            start: 10,
            end: 10,
            kind: AnomalyKind::Shift,
            magnitude: 2.0,
        });
        assert!(generate_synthetic(&cfg).is_err());
    }

    #[test]
    fn values_are_clamped_non_negative() {
        let mut cfg = SynthConfig::new(2, 300, 5);
        cfg.base_level = 1.0;
        cfg.noise_sigma = 10.0;
        let ds = generate_synthetic(&cfg).unwrap();
        assert!(ds
            .series()
            .iter()
            .all(|s| s.values().iter().all(|v| *v >= 0.0)));
    }
}
