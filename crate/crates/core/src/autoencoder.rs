//! Online autoencoder outlier detector over FPD streams.
//!
//! The network is `B -> ceil(B/2) -> ceil(B/4) -> ceil(B/2) -> B` with sigmoid
//! hidden layers and a softmax output, so every reconstruction is a
//! distribution over the same bins as its input and an all-zero network
//! reconstructs the uniform distribution. Each incoming FPD is first scored
//! with the current parameters, then used for one SGD step whose loss is
//! scaled by a probability-of-normality weight: instances that look anomalous
//! are scored at full strength but barely learned.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fpd::Fpd;
use crate::loss::{loss, loss_gradient, LossKind};
use crate::math::{exp, normal_cdf, sigmoid, sqrt};
use crate::series::SensorId;

pub const DEFAULT_LEARNING_RATE: f64 = 0.05;

/// Fully connected layer, `weights` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
struct Dense {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn seeded(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let scale = 1.0 / sqrt(inputs as f64);
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-0.5..0.5) * scale)
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[o];
            out.push(z);
        }
    }

    fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Autoencoder weights and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct AeParams {
    bins: usize,
    hidden: usize,
    bottleneck: usize,
    layers: [Dense; 4],
}

/// Intermediate activations kept for backpropagation.
struct Trace {
    input: Vec<f64>,
    acts: [Vec<f64>; 3],
    output: Vec<f64>,
}

impl AeParams {
    /// Default layer sizes for `bins` inputs, seeded uniform initialisation.
    pub fn new(bins: usize, seed: u64) -> Result<Self> {
        Self::with_dims(bins, bins.div_ceil(2), bins.div_ceil(4), seed)
    }

    pub fn with_dims(bins: usize, hidden: usize, bottleneck: usize, seed: u64) -> Result<Self> {
        Self::check_dims(bins, hidden, bottleneck)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Self {
            bins,
            hidden,
            bottleneck,
            layers: [
                Dense::seeded(bins, hidden, &mut rng),
                Dense::seeded(hidden, bottleneck, &mut rng),
                Dense::seeded(bottleneck, hidden, &mut rng),
                Dense::seeded(hidden, bins, &mut rng),
            ],
        })
    }

    /// All weights and biases zero.
    pub fn zeros(bins: usize) -> Result<Self> {
        let (hidden, bottleneck) = (bins.div_ceil(2), bins.div_ceil(4));
        Self::check_dims(bins, hidden, bottleneck)?;
        Ok(Self {
            bins,
            hidden,
            bottleneck,
            layers: [
                Dense::zeros(bins, hidden),
                Dense::zeros(hidden, bottleneck),
                Dense::zeros(bottleneck, hidden),
                Dense::zeros(hidden, bins),
            ],
        })
    }

    fn check_dims(bins: usize, hidden: usize, bottleneck: usize) -> Result<()> {
        if bins < 2 || hidden == 0 || bottleneck == 0 {
            return Err(Error::Config(format!(
                "invalid autoencoder shape {bins}->{hidden}->{bottleneck}"
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn bottleneck(&self) -> usize {
        self.bottleneck
    }

    /// Number of scalar parameters.
    pub fn len(&self) -> usize {
        self.layers.iter().map(Dense::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: flat.len(),
            });
        }
        let mut rest = flat;
        for l in &mut self.layers {
            let (w, tail) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, tail) = tail.split_at(l.bias.len());
            l.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    fn check_input(&self, d: &[f64]) -> Result<()> {
        if d.len() != self.bins {
            return Err(Error::Dimension {
                expected: self.bins,
                actual: d.len(),
            });
        }
        Ok(())
    }

    fn trace(&self, d: &[f64]) -> Trace {
        let mut acts: [Vec<f64>; 3] = Default::default();
        let mut z = Vec::new();
        let mut input = d;
        for (i, layer) in self.layers[..3].iter().enumerate() {
            layer.apply(input, &mut z);
            acts[i] = z.iter().map(|&v| sigmoid(v)).collect();
            input = &acts[i];
        }
        self.layers[3].apply(&acts[2], &mut z);
        Trace {
            input: d.to_vec(),
            acts,
            output: softmax(&z),
        }
    }

    /// Reconstruction of `d`; always a distribution over `bins` entries.
    pub fn forward(&self, d: &[f64]) -> Result<Vec<f64>> {
        self.check_input(d)?;
        Ok(self.trace(d).output)
    }

    /// Loss of reconstructing `d` and its gradient with respect to every
    /// parameter, in [`AeParams::to_flat`] order.
    pub fn loss_and_gradient(&self, d: &[f64], kind: LossKind) -> Result<(f64, Vec<f64>)> {
        self.check_input(d)?;
        let trace = self.trace(d);
        let value = loss(kind, d, &trace.output)?;
        let g_out = loss_gradient(kind, d, &trace.output)?;

        // softmax backward: dz_i = p_i (g_i - sum_j p_j g_j)
        let p = &trace.output;
        let dot: f64 = p.iter().zip(&g_out).map(|(a, b)| a * b).sum();
        let delta: Vec<f64> = p
            .iter()
            .zip(&g_out)
            .map(|(pi, gi)| pi * (gi - dot))
            .collect();
        self.backprop(&trace, value, delta)
    }

    fn backprop(&self, trace: &Trace, value: f64, mut delta: Vec<f64>) -> Result<(f64, Vec<f64>)> {
        let mut grads: [(Vec<f64>, Vec<f64>); 4] = Default::default();
        for li in (0..4).rev() {
            let layer = &self.layers[li];
            let input: &[f64] = if li == 0 {
                &trace.input
            } else {
                &trace.acts[li - 1]
            };
            let mut gw = vec![0.0; layer.weights.len()];
            for o in 0..layer.outputs {
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for (g, x) in row.iter_mut().zip(input) {
                    *g = delta[o] * x;
                }
            }
            if li > 0 {
                let mut prev = vec![0.0; layer.inputs];
                for (row, d) in layer.weights.chunks(layer.inputs).zip(&delta) {
                    for (pv, w) in prev.iter_mut().zip(row) {
                        *pv += d * w;
                    }
                }
                for (pv, a) in prev.iter_mut().zip(input) {
                    *pv *= a * (1.0 - a);
                }
                grads[li] = (gw, core::mem::replace(&mut delta, prev));
            } else {
                grads[li] = (gw, core::mem::take(&mut delta));
            }
        }
        let mut flat = Vec::with_capacity(self.len());
        for (gw, gb) in grads {
            flat.extend(gw);
            flat.extend(gb);
        }
        Ok((value, flat))
    }

    /// Plain-text dump: a header line followed by one parameter per line.
    pub fn to_text(&self, kind: LossKind, seed: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "owam-ae v1 bins={} hidden={} bottleneck={} loss={} seed={}",
            self.bins, self.hidden, self.bottleneck, kind, seed
        );
        for v in self.to_flat() {
            let _ = writeln!(out, "{v:?}");
        }
        out
    }

    /// Inverse of [`AeParams::to_text`].
    pub fn from_text(text: &str) -> Result<(Self, LossKind, u64)> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidValue("empty autoencoder dump".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("owam-ae") || fields.next() != Some("v1") {
            return Err(Error::InvalidValue(format!(
                "bad autoencoder header `{header}`"
            )));
        }
        let (mut bins, mut hidden, mut bottleneck, mut kind, mut seed) =
            (None, None, None, None, None);
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| Error::InvalidValue(format!("bad header field `{f}`")))?;
            let bad = || Error::InvalidValue(format!("bad header value `{f}`"));
            match k {
                "bins" => bins = Some(v.parse::<usize>().map_err(|_| bad())?),
                "hidden" => hidden = Some(v.parse::<usize>().map_err(|_| bad())?),
                "bottleneck" => bottleneck = Some(v.parse::<usize>().map_err(|_| bad())?),
                "loss" => kind = Some(v.parse::<LossKind>()?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        let missing = |name: &str| Error::InvalidValue(format!("header lacks `{name}`"));
        let mut params = Self::with_dims(
            bins.ok_or_else(|| missing("bins"))?,
            hidden.ok_or_else(|| missing("hidden"))?,
            bottleneck.ok_or_else(|| missing("bottleneck"))?,
            0,
        )?;
        let flat = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidValue(format!("bad parameter `{l}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        params.set_flat(&flat)?;
        Ok((
            params,
            kind.ok_or_else(|| missing("loss"))?,
            seed.ok_or_else(|| missing("seed"))?,
        ))
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| exp(v - max)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Outcome of one [`train_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Unweighted loss before the update.
    pub loss: f64,
    /// False when the gradient was non-finite and the step was skipped.
    pub applied: bool,
}

/// One SGD step on `weight * loss(d, forward(d))`.
pub fn train_step(
    params: &mut AeParams,
    d: &[f64],
    kind: LossKind,
    weight: f64,
    lr: f64,
) -> Result<StepOutcome> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be non-negative, got {lr}"
        )));
    }
    if !(weight > 0.0 && weight <= 1.0) {
        return Err(Error::InvalidValue(format!(
            "sample weight must lie in (0, 1], got {weight}"
        )));
    }
    let (value, grad) = params.loss_and_gradient(d, kind)?;
    if !grad.iter().all(|g| g.is_finite()) {
        return Ok(StepOutcome {
            loss: value,
            applied: false,
        });
    }
    if lr > 0.0 {
        let step = lr * weight;
        let mut gi = grad.iter();
        for l in &mut params.layers {
            for p in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *p -= step * gi.next().copied().unwrap_or_default();
            }
        }
    }
    Ok(StepOutcome {
        loss: value,
        applied: true,
    })
}

/// Exponentially decayed running mean and variance of outlier scores.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightEstimator {
    mean: f64,
    var: f64,
    count: u64,
    decay: f64,
    w_min: f64,
    eps: f64,
}

impl Default for WeightEstimator {
    fn default() -> Self {
        Self::new(0.99, 0.05)
    }
}

impl WeightEstimator {
    pub fn new(decay: f64, w_min: f64) -> Self {
        Self {
            mean: 0.0,
            var: 0.0,
            count: 0,
            decay,
            w_min,
            eps: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Config(format!(
                "decay must lie in (0, 1), got {}",
                self.decay
            )));
        }
        if !(self.w_min > 0.0 && self.w_min <= 1.0) {
            return Err(Error::Config(format!(
                "w_min must lie in (0, 1], got {}",
                self.w_min
            )));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.var
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Weight for `score` under the current moments, without updating them.
    pub fn weight(&self, score: f64) -> f64 {
        if self.count == 0 {
            return 1.0;
        }
        let z = (score - self.mean) / sqrt(self.var).max(self.eps);
        (1.0 - normal_cdf(z)).clamp(self.w_min, 1.0)
    }

    pub fn update(&mut self, score: f64) {
        if self.count == 0 {
            self.mean = score;
            self.var = 0.0;
        } else {
            let diff = score - self.mean;
            self.mean += (1.0 - self.decay) * diff;
            self.var = self.decay * (self.var + (1.0 - self.decay) * diff * diff);
        }
        self.count += 1;
    }
}

/// Weight for `score`, then folds `score` into the estimator.
pub fn anomaly_weight(est: &mut WeightEstimator, score: f64) -> f64 {
    let w = est.weight(score);
    est.update(score);
    w
}

/// Raw outlier scores for one sensor, one per consumed FPD.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierScoreSeries {
    pub sensor: SensorId,
    pub scores: Vec<(i64, f64)>,
}

impl OutlierScoreSeries {
    pub fn new(sensor: SensorId) -> Self {
        Self {
            sensor,
            scores: Vec::new(),
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.1).collect()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub kind: LossKind,
    pub lr: f64,
    pub decay: f64,
    pub w_min: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            kind: LossKind::Emd,
            lr: DEFAULT_LEARNING_RATE,
            decay: 0.99,
            w_min: 0.05,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        WeightEstimator::new(self.decay, self.w_min).validate()?;
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be non-negative, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

/// Per-sensor online detector: score first, then learn.
#[derive(Debug, Clone)]
pub struct OnlineDetector {
    params: AeParams,
    estimator: WeightEstimator,
    config: DetectorConfig,
    seed: u64,
    skipped_steps: u64,
}

impl OnlineDetector {
    pub fn new(bins: usize, config: DetectorConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let estimator = WeightEstimator::new(config.decay, config.w_min);
        Ok(Self {
            params: AeParams::new(bins, seed)?,
            estimator,
            config,
            seed,
            skipped_steps: 0,
        })
    }

    pub fn params(&self) -> &AeParams {
        &self.params
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Steps skipped because of a non-finite gradient.
    pub fn skipped_steps(&self) -> u64 {
        self.skipped_steps
    }

    /// Scores `probs` with the current parameters, then trains on it.
    pub fn observe(&mut self, probs: &[f64]) -> Result<f64> {
        let recon = self.params.forward(probs)?;
        let score = loss(self.config.kind, probs, &recon)?;
        let weight = anomaly_weight(&mut self.estimator, score);
        let step = train_step(
            &mut self.params,
            probs,
            self.config.kind,
            weight,
            self.config.lr,
        )?;
        if !step.applied {
            self.skipped_steps += 1;
        }
        Ok(score)
    }

    /// Feeds `fpds` in order, appending one score per FPD to `out`.
    pub fn extend(&mut self, fpds: &[Fpd], out: &mut OutlierScoreSeries) -> Result<()> {
        for f in fpds {
            let s = self.observe(&f.probs)?;
            out.scores.push((f.window_start, s));
        }
        Ok(())
    }
}

/// Scores a whole FPD stream of one sensor with a fresh detector.
pub fn process_stream(
    fpds: &[Fpd],
    config: DetectorConfig,
    seed: u64,
) -> Result<OutlierScoreSeries> {
    let Some(first) = fpds.first() else {
        return Ok(OutlierScoreSeries::new(
            SensorId::new("empty").expect("non-empty literal"),
        ));
    };
    if let Some(other) = fpds.iter().find(|f| f.sensor != first.sensor) {
        return Err(Error::InvalidValue(format!(
            "FPD stream mixes sensors `{}` and `{}`",
            first.sensor, other.sensor
        )));
    }
    let mut det = OnlineDetector::new(first.probs.len(), config, seed)?;
    let mut out = OutlierScoreSeries::new(first.sensor.clone());
    det.extend(fpds, &mut out)?;
    Ok(out)
}
