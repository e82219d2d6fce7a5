//! Offline and prequential online evaluation runs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use owam_core::autoencoder::{DetectorConfig, OnlineDetector, OutlierScoreSeries};
use owam_core::correlation::{
    compute_weights, neighbor_count, CorrelationWeightMap, History, SelectorConfig, WeightMode,
};
use owam_core::fpd::{fpd_stream, FpdConfig};
use owam_core::fusion::{FusedSample, FusionPlan};
use owam_core::loss::LossKind;
use owam_core::lstm::{Forecaster, LstmConfig, TrainSummary};
use owam_core::metrics::{mean, rmse};
use owam_core::normalize::Normalizer;
use owam_core::series::split_index;
use owam_core::{Dataset, SensorId};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    #[default]
    Offline,
    Online,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    /// Re-score, re-weight, re-bind columns and update the model each window.
    #[default]
    OwamDynamic,
    /// Update the model each window under the base weight map.
    StaticIncremental,
    /// Keep the base model frozen.
    NoUpdate,
}

/// Which neighbour columns feed the forecaster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Features {
    /// Top-k neighbours by outlier-score correlation, scaled by weight.
    #[default]
    Weighted,
    /// Every other sensor at weight 1, ignoring `theta`.
    AllUnweighted,
}

macro_rules! text_enum {
    ($t:ty { $($v:ident = $s:literal),+ $(,)? }) => {
        impl $t {
            pub fn as_str(&self) -> &'static str {
                match self { $(Self::$v => $s),+ }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s => Ok(Self::$v),)+
                    other => Err(format!(
                        "unknown value {other:?}, expected one of: {}",
                        [$($s),+].join(", ")
                    )),
                }
            }
        }
    };
}

text_enum!(RunMode { Offline = "offline", Online = "online" });
text_enum!(UpdateMode {
    OwamDynamic = "owam_dynamic",
    StaticIncremental = "static_incremental",
    NoUpdate = "no_update",
});
text_enum!(Features { Weighted = "weighted", AllUnweighted = "all_unweighted" });

/// Everything that defines one evaluation run on a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: RunMode,
    pub loss_kind: LossKind,
    pub theta: f64,
    pub update_mode: UpdateMode,
    /// Online update window length in seconds.
    pub window: Option<i64>,
    /// Empty means: pick up to five targets with the run seed.
    pub targets: Vec<SensorId>,
    pub seed: u64,
    /// Offline training share of the stream.
    pub train_fraction: f64,
    /// Online base-training share of the stream.
    pub base_fraction: f64,
    pub features: Features,
    pub weight_mode: WeightMode,
    /// Score history used for correlations; only online runs see a difference.
    pub history: History,
    pub fpd: FpdConfig,
    /// Autoencoder settings; its `kind` is overridden by `loss_kind`.
    pub detector: DetectorConfig,
    pub lstm: LstmConfig,
}

impl RunConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            mode: RunMode::Offline,
            loss_kind: LossKind::Emd,
            theta: 0.05,
            update_mode: UpdateMode::OwamDynamic,
            window: None,
            targets: Vec::new(),
            seed,
            train_fraction: 0.8,
            base_fraction: 0.5,
            features: Features::Weighted,
            weight_mode: WeightMode::Absolute,
            history: History::Expanding,
            fpd: FpdConfig::default(),
            detector: DetectorConfig::default(),
            lstm: LstmConfig::default(),
        }
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            kind: self.loss_kind,
            ..self.detector
        }
    }

    fn selector(&self) -> SelectorConfig {
        SelectorConfig {
            theta: self.theta,
            mode: self.weight_mode,
            history: self.history,
        }
    }

    /// Targets to evaluate: the configured list, or up to five sensors drawn
    /// with the run seed, in dataset order.
    pub fn resolve_targets(&self, dataset: &Dataset) -> Result<Vec<SensorId>> {
        if !self.targets.is_empty() {
            for t in &self.targets {
                dataset.require(t)?;
            }
            return Ok(self.targets.clone());
        }
        let mut idx: Vec<usize> = (0..dataset.n_sensors()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        idx.truncate(5);
        idx.sort_unstable();
        Ok(idx
            .into_iter()
            .map(|i| dataset.series()[i].id().clone())
            .collect())
    }

    pub fn validate(&self, dataset: &Dataset) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1], got {}", self.theta));
        }
        for (name, f) in [
            ("train_fraction", self.train_fraction),
            ("base_fraction", self.base_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {f}"));
            }
        }
        self.fpd.validate()?;
        self.lstm.validate()?;
        self.detector().validate()?;
        if self.fpd.bin_interval != dataset.sample_interval() {
            return bad(format!(
                "fpd bin interval {} s differs from the dataset interval {} s",
                self.fpd.bin_interval,
                dataset.sample_interval()
            ));
        }
        if let History::Sliding(0) = self.history {
            return bad("sliding history needs at least one window".into());
        }
        if self.mode == RunMode::Online {
            let Some(w) = self.window else {
                return bad("online mode requires window".into());
            };
            if w <= 0 || w % dataset.sample_interval() != 0 {
                return bad(format!(
                    "window {w} s must be a positive multiple of the {} s sample interval",
                    dataset.sample_interval()
                ));
            }
            if self.update_mode == UpdateMode::OwamDynamic && w < self.fpd.window {
                return bad(format!(
                    "window {w} s is shorter than one {} s FPD window; owam_dynamic could derive no new scores",
                    self.fpd.window
                ));
            }
        }
        self.resolve_targets(dataset)?;
        Ok(())
    }
}

/// Independent seed streams derived from the run seed.
pub fn derive_seed(seed: u64, lane: u64, index: usize) -> u64 {
    // splitmix64 finaliser over a lane/index mix
    let mut z = seed
        .wrapping_add(lane.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add((index as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const LANE_AE: u64 = 1;
const LANE_LSTM: u64 = 2;

/// What happened, in order, for one target. Every step that changes model
/// parameters, the normaliser or the weight map records the data range it read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub target: String,
    pub window: Option<usize>,
    pub kind: EventKind,
    /// Half-open step range of data the step read.
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BaseTrain,
    Evaluate,
    ScoreExtend,
    Reweight,
    NormalizerRefit,
    Update,
}

impl EventKind {
    pub fn is_mutation(self) -> bool {
        self != Self::Evaluate
    }
}

/// Checks that no mutation reads data from a window before that window
/// has been evaluated.
pub fn check_prequential(events: &[Event]) -> Result<(), String> {
    let mut per_target: BTreeMap<&str, Vec<&Event>> = BTreeMap::new();
    for e in events {
        per_target.entry(&e.target).or_default().push(e);
    }
    for (target, evs) in per_target {
        let Some(first) = evs.iter().find(|e| e.kind == EventKind::Evaluate) else {
            continue;
        };
        // Data before the first evaluated window is base-training history.
        let mut seen_to = first.from;
        let mut next_window = 0;
        for e in evs {
            if e.kind == EventKind::Evaluate {
                if e.window != Some(next_window) {
                    return Err(format!(
                        "{target}: evaluation of window {:?} out of order",
                        e.window
                    ));
                }
                next_window += 1;
                seen_to = seen_to.max(e.to);
            } else if e.to > seen_to {
                return Err(format!(
                    "{target}: {:?} in window {:?} reads steps up to {} before they were evaluated (evaluated up to {seen_to})",
                    e.kind, e.window, e.to
                ));
            }
        }
    }
    Ok(())
}

/// One online window's score.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowTrace {
    pub window: usize,
    pub window_start: i64,
    pub rmse: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetReport {
    pub target: SensorId,
    pub k: usize,
    pub rmse: f64,
    pub n_eval: usize,
    /// Epochs run by base training, and the epoch whose parameters were kept.
    pub epochs: usize,
    pub best_epoch: usize,
    pub train_time_s: f64,
    pub instance_pred_time_ms: f64,
    pub eval_time_s: f64,
    /// Online windows in order; empty for offline runs.
    pub windows: Vec<WindowTrace>,
    pub skipped_windows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: RunMode,
    pub update_mode: UpdateMode,
    pub targets: Vec<TargetReport>,
    pub rmse: f64,
    pub train_time_s: f64,
    pub instance_pred_time_ms: f64,
    pub eval_time_s: f64,
    pub events: Vec<Event>,
    /// Final weight map per target.
    pub weight_maps: Vec<CorrelationWeightMap>,
    /// Final forecaster checkpoint per target.
    pub checkpoints: Vec<(SensorId, String)>,
    /// Outlier scores actually computed for the run, if any.
    pub scores: Option<BTreeMap<SensorId, OutlierScoreSeries>>,
}

impl EvalReport {
    fn assemble(
        cfg: &RunConfig,
        outcomes: Vec<TargetOutcome>,
        scores: Option<BTreeMap<SensorId, OutlierScoreSeries>>,
    ) -> Self {
        let pick = |f: fn(&TargetReport) -> f64| {
            mean(&outcomes.iter().map(|o| f(&o.report)).collect::<Vec<_>>())
        };
        let rmse = pick(|r| r.rmse);
        let train_time_s = pick(|r| r.train_time_s);
        let instance_pred_time_ms = pick(|r| r.instance_pred_time_ms);
        let eval_time_s = pick(|r| r.eval_time_s);
        let mut report = Self {
            mode: cfg.mode,
            update_mode: cfg.update_mode,
            targets: Vec::with_capacity(outcomes.len()),
            rmse,
            train_time_s,
            instance_pred_time_ms,
            eval_time_s,
            events: Vec::new(),
            weight_maps: Vec::new(),
            checkpoints: Vec::new(),
            scores,
        };
        for o in outcomes {
            report
                .checkpoints
                .push((o.report.target.clone(), o.checkpoint));
            report.targets.push(o.report);
            report.events.extend(o.events);
            report.weight_maps.push(o.map);
        }
        report
    }
}

struct TargetOutcome {
    report: TargetReport,
    events: Vec<Event>,
    map: CorrelationWeightMap,
    checkpoint: String,
}

/// Outlier scores for every sensor over the whole stream, computed once.
///
/// The detectors are strictly causal (each window is scored before it is
/// trained on), so the score of window `w` depends on FPD windows `..=w`
/// only and a prefix of this stream is exactly what incremental extension
/// would have produced. Callers must only read prefixes they are entitled to.
fn score_all(dataset: &Dataset, cfg: &RunConfig) -> Result<BTreeMap<SensorId, OutlierScoreSeries>> {
    let det = cfg.detector();
    let bins = cfg.fpd.bins();
    let scored: Vec<Result<OutlierScoreSeries>> = dataset
        .series()
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let fpds = fpd_stream(s, &cfg.fpd)?;
            let mut detector = OnlineDetector::new(bins, det, derive_seed(cfg.seed, LANE_AE, i))?;
            let mut out = OutlierScoreSeries::new(s.id().clone());
            detector.extend(&fpds, &mut out)?;
            Ok(out)
        })
        .collect();
    scored
        .into_iter()
        .map(|r| r.map(|s| (s.sensor.clone(), s)))
        .collect()
}

/// Scores from FPD windows lying entirely inside steps `..upto`.
fn score_prefix(
    all: &BTreeMap<SensorId, OutlierScoreSeries>,
    bins: usize,
    upto: usize,
) -> BTreeMap<SensorId, OutlierScoreSeries> {
    let n = upto / bins;
    all.iter()
        .map(|(id, s)| {
            let mut p = OutlierScoreSeries::new(id.clone());
            p.scores = s.scores[..n.min(s.scores.len())].to_vec();
            (id.clone(), p)
        })
        .collect()
}

fn needs_scores(cfg: &RunConfig, n_sensors: usize) -> Result<bool> {
    Ok(cfg.features == Features::Weighted && neighbor_count(cfg.theta, n_sensors)? > 0)
}

fn weight_map(
    dataset: &Dataset,
    cfg: &RunConfig,
    scores: Option<&BTreeMap<SensorId, OutlierScoreSeries>>,
    target: &SensorId,
    upto: usize,
) -> Result<CorrelationWeightMap> {
    match (cfg.features, scores) {
        (Features::AllUnweighted, _) => Ok(CorrelationWeightMap::fixed(
            target.clone(),
            dataset
                .sensor_ids()
                .filter(|id| *id != target)
                .map(|id| (id.clone(), 1.0))
                .collect(),
        )),
        (Features::Weighted, Some(all)) => {
            let prefix = score_prefix(all, cfg.fpd.bins(), upto);
            if prefix.values().next().is_none_or(|s| s.len() < 2) {
                return Err(Error::Config(format!(
                    "steps ..{upto} hold fewer than two complete FPD windows; cannot correlate scores"
                )));
            }
            Ok(compute_weights(&prefix, target, &cfg.selector())?)
        }
        (Features::Weighted, None) => Ok(CorrelationWeightMap::target_only(target.clone())),
    }
}

fn fit_normalizer(dataset: &Dataset, plan: &FusionPlan, upto: usize) -> Result<Normalizer> {
    Ok(Normalizer::fit(
        &plan.raw_columns(dataset, 0..upto),
        &plan.weights,
    )?)
}

/// Predictions for `samples`, with the elapsed wall time.
fn evaluate(model: &Forecaster, samples: &[FusedSample]) -> Result<(f64, f64)> {
    let start = Instant::now();
    let mut pred = Vec::with_capacity(samples.len());
    for s in samples {
        pred.push(model.predict(&s.x)?);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let truth: Vec<f64> = samples.iter().map(|s| s.y).collect();
    Ok((rmse(&pred, &truth)?, elapsed))
}

struct BaseModel {
    map: CorrelationWeightMap,
    plan: FusionPlan,
    model: Forecaster,
    summary: TrainSummary,
    train_time_s: f64,
}

fn base_model(
    dataset: &Dataset,
    cfg: &RunConfig,
    scores: Option<&BTreeMap<SensorId, OutlierScoreSeries>>,
    target: &SensorId,
    split: usize,
    events: &mut Vec<Event>,
) -> Result<BaseModel> {
    let map = weight_map(dataset, cfg, scores, target, split)?;
    let plan = FusionPlan::new(dataset, &map)?;
    let normalizer = fit_normalizer(dataset, &plan, split)?;
    let position = dataset.position(target).expect("validated target");
    let mut model = Forecaster::new(
        normalizer,
        cfg.lstm.clone(),
        derive_seed(cfg.seed, LANE_LSTM, position),
    )?;
    let train = plan.samples(dataset, 0..split);
    let start = Instant::now();
    let summary = model.train(&train)?;
    let train_time_s = start.elapsed().as_secs_f64();
    events.push(Event {
        target: target.to_string(),
        window: None,
        kind: EventKind::BaseTrain,
        from: 0,
        to: split,
    });
    Ok(BaseModel {
        map,
        plan,
        model,
        summary,
        train_time_s,
    })
}

fn offline_target(
    dataset: &Dataset,
    cfg: &RunConfig,
    scores: Option<&BTreeMap<SensorId, OutlierScoreSeries>>,
    target: &SensorId,
) -> Result<TargetOutcome> {
    let n = dataset.n_steps();
    let split = split_index(n, cfg.train_fraction)?;
    let mut events = Vec::new();
    let base = base_model(dataset, cfg, scores, target, split, &mut events)?;
    let test = base.plan.samples(dataset, split..n);
    let (err, eval_time_s) = evaluate(&base.model, &test)?;
    events.push(Event {
        target: target.to_string(),
        window: Some(0),
        kind: EventKind::Evaluate,
        from: split,
        to: n,
    });
    Ok(TargetOutcome {
        report: TargetReport {
            target: target.clone(),
            k: base.plan.features() - 1,
            rmse: err,
            n_eval: test.len(),
            epochs: base.summary.epochs,
            best_epoch: base.summary.best_epoch,
            train_time_s: base.train_time_s,
            instance_pred_time_ms: eval_time_s * 1e3 / test.len() as f64,
            eval_time_s,
            windows: Vec::new(),
            skipped_windows: 0,
        },
        events,
        checkpoint: base.model.to_checkpoint(),
        map: base.map,
    })
}

fn online_target(
    dataset: &Dataset,
    cfg: &RunConfig,
    scores: Option<&BTreeMap<SensorId, OutlierScoreSeries>>,
    target: &SensorId,
) -> Result<TargetOutcome> {
    let n = dataset.n_steps();
    let split = split_index(n, cfg.base_fraction)?;
    let len = (cfg.window.expect("validated") / dataset.sample_interval()) as usize;
    let mut events = Vec::new();
    let BaseModel {
        mut map,
        mut plan,
        mut model,
        summary,
        mut train_time_s,
    } = base_model(dataset, cfg, scores, target, split, &mut events)?;
    let name = target.to_string();
    let event = |window, kind, from, to| Event {
        target: name.clone(),
        window: Some(window),
        kind,
        from,
        to,
    };

    let mut windows = Vec::new();
    let mut eval_time_s = 0.0;
    let mut n_eval = 0;
    let mut skipped = 0;
    let mut w = 0;
    while split + (w + 1) * len <= n {
        let (from, to) = (split + w * len, split + (w + 1) * len);
        let samples = plan.samples(dataset, from..to);
        if samples.is_empty() {
            skipped += 1;
        } else {
            let (err, t) = evaluate(&model, &samples)?;
            eval_time_s += t;
            n_eval += samples.len();
            windows.push(WindowTrace {
                window: w,
                window_start: dataset.timestamp(from),
                rmse: err,
                n: samples.len(),
            });
        }
        events.push(event(w, EventKind::Evaluate, from, to));

        let start = Instant::now();
        match cfg.update_mode {
            UpdateMode::NoUpdate => {}
            UpdateMode::StaticIncremental => {
                model.set_normalizer(fit_normalizer(dataset, &plan, to)?)?;
                events.push(event(w, EventKind::NormalizerRefit, 0, to));
                model.incremental_update(&samples)?;
                events.push(event(
                    w,
                    EventKind::Update,
                    from.saturating_sub(owam_core::fusion::INPUT_STEPS),
                    to,
                ));
            }
            UpdateMode::OwamDynamic => {
                if scores.is_some() {
                    let scored_to = to / cfg.fpd.bins() * cfg.fpd.bins();
                    events.push(event(w, EventKind::ScoreExtend, 0, scored_to));
                    map = weight_map(dataset, cfg, scores, target, to)?;
                    events.push(event(w, EventKind::Reweight, 0, scored_to));
                    plan = FusionPlan::new(dataset, &map)?;
                }
                model.set_normalizer(fit_normalizer(dataset, &plan, to)?)?;
                events.push(event(w, EventKind::NormalizerRefit, 0, to));
                let samples = plan.samples(dataset, from..to);
                model.incremental_update(&samples)?;
                events.push(event(
                    w,
                    EventKind::Update,
                    from.saturating_sub(owam_core::fusion::INPUT_STEPS),
                    to,
                ));
            }
        }
        train_time_s += start.elapsed().as_secs_f64();
        w += 1;
    }
    if windows.is_empty() {
        return Err(Error::Config(format!(
            "no complete {len}-step window fits after the {split}-step base period"
        )));
    }
    let rmse = mean(&windows.iter().map(|t| t.rmse).collect::<Vec<_>>());
    Ok(TargetOutcome {
        report: TargetReport {
            target: target.clone(),
            k: plan.features() - 1,
            rmse,
            n_eval,
            epochs: summary.epochs,
            best_epoch: summary.best_epoch,
            train_time_s,
            instance_pred_time_ms: eval_time_s * 1e3 / n_eval as f64,
            eval_time_s,
            windows,
            skipped_windows: skipped,
        },
        events,
        checkpoint: model.to_checkpoint(),
        map,
    })
}

fn run(dataset: &Dataset, cfg: &RunConfig, mode: RunMode) -> Result<EvalReport> {
    if cfg.mode != mode {
        return Err(Error::Config(format!(
            "expected a {mode} config, got mode {}",
            cfg.mode
        )));
    }
    cfg.validate(dataset)?;
    let targets = cfg.resolve_targets(dataset)?;
    let scores = if needs_scores(cfg, dataset.n_sensors())? {
        Some(score_all(dataset, cfg)?)
    } else {
        None
    };
    let outcomes: Vec<Result<TargetOutcome>> = targets
        .par_iter()
        .map(|t| {
            let r = match mode {
                RunMode::Offline => offline_target(dataset, cfg, scores.as_ref(), t),
                RunMode::Online => online_target(dataset, cfg, scores.as_ref(), t),
            };
            r.map_err(|e| Error::in_target(t.as_str(), e))
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::assemble(cfg, outcomes, scores))
}

/// Train on the first `train_fraction` of the stream, score the rest.
pub fn run_offline(dataset: &Dataset, cfg: &RunConfig) -> Result<EvalReport> {
    run(dataset, cfg, RunMode::Offline)
}

/// Base model on the first `base_fraction`, then test-then-train over
/// consecutive complete windows of `cfg.window` seconds.
pub fn run_online(dataset: &Dataset, cfg: &RunConfig) -> Result<EvalReport> {
    run(dataset, cfg, RunMode::Online)
}

/// Dispatches on `cfg.mode`.
pub fn run_config(dataset: &Dataset, cfg: &RunConfig) -> Result<EvalReport> {
    run(dataset, cfg, cfg.mode)
}
