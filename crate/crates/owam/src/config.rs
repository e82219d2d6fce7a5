//! TOML run definitions.
//!
//! ```toml
//! [dataset]
//! path = "metr-la.csv"          # relative to this file; or a [dataset.synthetic] table
//! layout = "wide"               # wide | long
//! sample_interval = 300         # seconds
//! indicator = "speed"           # flow_count | speed
//!
//! [run]
//! seed = 7                      # required
//! mode = "offline"              # offline | online
//! loss_kind = "emd"             # emd | rmse
//! theta = 0.05
//! update_mode = "owam_dynamic"  # owam_dynamic | static_incremental | no_update
//! window = "1d"                 # online only: seconds or 1h, 3h, 6h, 12h, 1d, 1w, 30d
//! targets = ["773869"]          # default: five sensors drawn with the seed
//!
//! [output]
//! dir = "runs/metr-la"
//! ```
//!
//! Every other key has a default (see the `Default` impls below); unknown
//! keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use owam_core::autoencoder::DetectorConfig;
use owam_core::correlation::{History, WeightMode};
use owam_core::fpd::FpdConfig;
use owam_core::loss::LossKind;
use owam_core::lstm::LstmConfig;
use owam_core::synth::scenario::{
    planted_correlation, regime_shift, PlantedParams, RegimeShiftParams,
};
use owam_core::synth::{generate_synthetic, BasePattern};
use owam_core::{IndicatorKind, SensorId};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::io::{load_csv, Layout, LoadOptions, Loaded};
use crate::pipeline::{Features, RunConfig, RunMode, UpdateMode};

/// A span of seconds, written as an integer or as `<n><unit>` with unit
/// `s`, `m`, `h`, `d` or `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seconds(pub i64);

impl FromStr for Seconds {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let n: i64 = num.parse().map_err(|_| format!("invalid duration {s:?}"))?;
        let mult = match unit {
            "" | "s" => 1,
            "m" => 60,
            "h" => 3600,
            "d" => 86_400,
            "w" => 7 * 86_400,
            _ => {
                return Err(format!(
                    "invalid duration unit in {s:?}; use s, m, h, d or w"
                ))
            }
        };
        Ok(Self(n * mult))
    }
}

impl fmt::Display for Seconds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.0;
        for (unit, size) in [("w", 604_800), ("d", 86_400), ("h", 3600), ("m", 60)] {
            if s != 0 && s % size == 0 {
                return write!(f, "{}{unit}", s / size);
            }
        }
        write!(f, "{s}s")
    }
}

impl Serialize for Seconds {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Seconds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Ok(Self(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    #[default]
    FlowCount,
    Speed,
}

impl From<Indicator> for IndicatorKind {
    fn from(i: Indicator) -> Self {
        match i {
            Indicator::FlowCount => IndicatorKind::FlowCount,
            Indicator::Speed => IndicatorKind::Speed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Independent anomalies on every sensor.
    Plain,
    /// A target sharing its anomalies with a planted group.
    #[default]
    Planted,
    /// Like `planted`, but the coupled group and target level change at `shift_at`.
    RegimeShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Diurnal,
    Flat,
    /// Diurnal weekdays and a flatter weekend.
    #[default]
    Weekly,
}

impl From<Pattern> for BasePattern {
    fn from(p: Pattern) -> Self {
        match p {
            Pattern::Diurnal => BasePattern::Diurnal,
            Pattern::Flat => BasePattern::Flat,
            Pattern::Weekly => BasePattern::Weekly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    pub scenario: Scenario,
    pub base_pattern: Pattern,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    pub n_sensors: usize,
    pub n_days: usize,
    pub noise_sigma: f64,
    /// Fraction of hours in which an anomaly episode starts.
    pub rate: f64,
    pub n_planted: usize,
    /// Steps by which planted sensors lead the target.
    pub lead: usize,
    /// Sensors coupled to the target only before `decoy_until`.
    pub n_decoys: usize,
    pub decoy_until: f64,
    pub shift_at: f64,
    pub level_factor: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let p = PlantedParams::default();
        let r = RegimeShiftParams::default();
        Self {
            scenario: Scenario::Planted,
            base_pattern: Pattern::Weekly,
            seed: None,
            n_sensors: p.n_sensors,
            n_days: p.n_days,
            noise_sigma: p.noise_sigma,
            rate: p.rate,
            n_planted: p.n_planted,
            lead: p.lead,
            n_decoys: p.n_decoys,
            decoy_until: p.decoy_until,
            shift_at: r.shift_at,
            level_factor: r.level_factor,
        }
    }
}

impl SyntheticSection {
    pub fn generate(&self, run_seed: u64) -> Result<owam_core::Dataset> {
        let seed = self.seed.unwrap_or(run_seed);
        let planted = PlantedParams {
            n_sensors: self.n_sensors,
            n_planted: self.n_planted,
            n_days: self.n_days,
            rate: self.rate,
            lead: self.lead,
            noise_sigma: self.noise_sigma,
            base_pattern: self.base_pattern.into(),
            n_decoys: self.n_decoys,
            decoy_until: self.decoy_until,
        };
        let cfg = match self.scenario {
            Scenario::Plain => {
                let planted = PlantedParams {
                    n_planted: 0,
                    n_decoys: 0,
                    ..planted
                };
                planted_correlation(seed, &planted)?.config
            }
            Scenario::Planted => planted_correlation(seed, &planted)?.config,
            Scenario::RegimeShift => {
                let p = RegimeShiftParams {
                    base: planted,
                    shift_at: self.shift_at,
                    level_factor: self.level_factor,
                };
                regime_shift(seed, &p)?.config
            }
        };
        Ok(generate_synthetic(&cfg)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub path: Option<PathBuf>,
    pub layout: Layout,
    pub sample_interval: i64,
    pub indicator: Indicator,
    pub synthetic: Option<SyntheticSection>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            path: None,
            layout: Layout::Wide,
            sample_interval: owam_core::series::DEFAULT_SAMPLE_INTERVAL,
            indicator: Indicator::FlowCount,
            synthetic: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default = "defaults::loss_kind")]
    pub loss_kind: String,
    #[serde(default = "defaults::theta")]
    pub theta: f64,
    #[serde(default)]
    pub update_mode: UpdateMode,
    #[serde(default)]
    pub window: Option<Seconds>,
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default = "defaults::train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "defaults::base_fraction")]
    pub base_fraction: f64,
    #[serde(default)]
    pub features: Features,
    /// `absolute` or `signed`.
    #[serde(default = "defaults::weight_mode")]
    pub weight_mode: String,
    /// Correlate over only the latest this many score windows; unset means
    /// the whole history.
    #[serde(default)]
    pub sliding_history: Option<usize>,
}

mod defaults {
    pub fn loss_kind() -> String {
        "emd".into()
    }
    pub fn theta() -> f64 {
        0.05
    }
    pub fn train_fraction() -> f64 {
        0.8
    }
    pub fn base_fraction() -> f64 {
        0.5
    }
    pub fn weight_mode() -> String {
        "absolute".into()
    }
}

impl RunSection {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            mode: RunMode::Offline,
            loss_kind: defaults::loss_kind(),
            theta: defaults::theta(),
            update_mode: UpdateMode::OwamDynamic,
            window: None,
            targets: Vec::new(),
            train_fraction: defaults::train_fraction(),
            base_fraction: defaults::base_fraction(),
            features: Features::Weighted,
            weight_mode: defaults::weight_mode(),
            sliding_history: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FpdSection {
    pub window: Seconds,
    pub bin_interval: Seconds,
}

impl Default for FpdSection {
    fn default() -> Self {
        let d = FpdConfig::default();
        Self {
            window: Seconds(d.window),
            bin_interval: Seconds(d.bin_interval),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub lr: f64,
    pub decay: f64,
    pub w_min: f64,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Self {
            lr: d.lr,
            decay: d.decay,
            w_min: d.w_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LstmSection {
    pub hidden: usize,
    pub batch: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_fraction: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub clip_norm: f64,
    pub update_epochs: usize,
}

impl Default for LstmSection {
    fn default() -> Self {
        let d = LstmConfig::default();
        Self {
            hidden: d.hidden,
            batch: d.batch,
            lr: d.lr,
            max_epochs: d.max_epochs,
            patience: d.patience,
            val_fraction: d.val_fraction,
            clip_norm: d.clip_norm.unwrap_or(0.0),
            update_epochs: d.update_epochs,
        }
    }
}

impl From<&LstmSection> for LstmConfig {
    fn from(s: &LstmSection) -> Self {
        Self {
            hidden: s.hidden,
            batch: s.batch,
            lr: s.lr,
            max_epochs: s.max_epochs,
            patience: s.patience,
            val_fraction: s.val_fraction,
            clip_norm: (s.clip_norm > 0.0).then_some(s.clip_norm),
            update_epochs: s.update_epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write wall-clock columns; off makes report files byte-reproducible.
    pub timings: bool,
    pub checkpoints: bool,
    pub dump_scores: bool,
    pub dump_fpds: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs/latest"),
            timings: true,
            checkpoints: true,
            dump_scores: false,
            dump_fpds: false,
        }
    }
}

/// A whole config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub dataset: DatasetSection,
    pub run: RunSection,
    #[serde(default)]
    pub fpd: FpdSection,
    #[serde(default)]
    pub detector: DetectorSection,
    #[serde(default)]
    pub lstm: LstmSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_owned()))
    }

    /// Reads a file; relative dataset and output paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = cfg.dataset.path.as_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output.dir.is_relative() {
            cfg.output.dir = base.join(&cfg.output.dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn load_dataset(&self) -> Result<Loaded> {
        match (&self.dataset.path, &self.dataset.synthetic) {
            (Some(path), None) => load_csv(
                path,
                &LoadOptions {
                    layout: self.dataset.layout,
                    sample_interval: self.dataset.sample_interval,
                    indicator: self.dataset.indicator.into(),
                },
            ),
            (None, Some(syn)) => {
                let dataset = syn.generate(self.run.seed)?;
                let repaired = dataset.sensor_ids().map(|id| (id.clone(), 0)).collect();
                Ok(Loaded { dataset, repaired })
            }
            (Some(_), Some(_)) => Err(Error::Config(
                "dataset: set either path or synthetic, not both".into(),
            )),
            (None, None) => Err(Error::Config(
                "dataset: one of path or synthetic is required".into(),
            )),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let r = &self.run;
        let cfg_err = |key: &str, msg: String| Error::Config(format!("run.{key}: {msg}"));
        let loss_kind: LossKind = r
            .loss_kind
            .parse()
            .map_err(|e| cfg_err("loss_kind", format!("{e}")))?;
        let weight_mode = match r.weight_mode.as_str() {
            "absolute" => WeightMode::Absolute,
            "signed" => WeightMode::Signed,
            other => {
                return Err(cfg_err(
                    "weight_mode",
                    format!("unknown value {other:?}, expected absolute or signed"),
                ))
            }
        };
        let targets = r
            .targets
            .iter()
            .map(|t| SensorId::new(t.as_str()).map_err(|e| cfg_err("targets", e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(RunConfig {
            mode: r.mode,
            loss_kind,
            theta: r.theta,
            update_mode: r.update_mode,
            window: r.window.map(|s| s.0),
            targets,
            seed: r.seed,
            train_fraction: r.train_fraction,
            base_fraction: r.base_fraction,
            features: r.features,
            weight_mode,
            history: r
                .sliding_history
                .map_or(History::Expanding, History::Sliding),
            fpd: FpdConfig::new(self.fpd.window.0, self.fpd.bin_interval.0)?,
            detector: DetectorConfig {
                kind: loss_kind,
                lr: self.detector.lr,
                decay: self.detector.decay,
                w_min: self.detector.w_min,
            },
            lstm: (&self.lstm).into(),
        })
    }

    /// A small synthetic offline definition, handy as a starting point.
    pub fn example(seed: u64) -> Self {
        Self {
            dataset: DatasetSection {
                synthetic: Some(SyntheticSection::default()),
                ..DatasetSection::default()
            },
            run: RunSection::new(seed),
            fpd: FpdSection::default(),
            detector: DetectorSection::default(),
            lstm: LstmSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations() {
        for (text, secs) in [
            ("1h", 3600),
            ("3h", 10_800),
            ("1d", 86_400),
            ("1w", 604_800),
            ("30d", 2_592_000),
            ("300", 300),
        ] {
            let s: Seconds = text.parse().unwrap();
            assert_eq!(s.0, secs);
            assert_eq!(s.to_string().parse::<Seconds>().unwrap(), s);
        }
        assert!("1y".parse::<Seconds>().is_err());
        assert!("h".parse::<Seconds>().is_err());
    }

    #[test]
    fn minimal_file_and_defaults() {
        let c = ConfigFile::parse("[dataset.synthetic]\n[run]\nseed = 3\n").unwrap();
        let r = c.run_config().unwrap();
        assert_eq!(r.seed, 3);
        assert_eq!(r.theta, 0.05);
        assert_eq!(r.lstm, LstmConfig::default());
        assert_eq!(ConfigFile::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_key_and_missing_seed() {
        let e = ConfigFile::parse("[run]\nseed = 1\nthetta = 0.1\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("thetta"), "{e}");
        let e = ConfigFile::parse("[run]\ntheta = 0.1\n").unwrap_err();
        assert!(e.to_string().contains("seed"), "{e}");
    }
}
