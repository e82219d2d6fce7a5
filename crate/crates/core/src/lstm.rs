//! Single-layer LSTM regressor with backpropagation through time.
//!
//! Gate pre-activations are computed from the concatenation `[x_t, h_{t-1}]`
//! with one `4H x (D + H)` matrix whose row blocks are, in order, the input,
//! forget, cell and output gates. The prediction is a linear read-out of the
//! last hidden state. Training minimises mean squared error in normalised
//! space with Adam; the optimiser state lives with the model so that
//! incremental updates continue exactly where the previous call stopped.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fusion::{FusedSample, INPUT_STEPS};
use crate::math::{sigmoid, sqrt, tanh};
use crate::normalize::Normalizer;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmConfig {
    pub hidden: usize,
    pub batch: usize,
    pub lr: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before training stops.
    pub patience: usize,
    /// Trailing fraction of the training samples held out for early stopping.
    pub val_fraction: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Passes over each new window during incremental updates.
    pub update_epochs: usize,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            batch: 32,
            lr: 1e-3,
            max_epochs: 50,
            patience: 5,
            val_fraction: 0.1,
            clip_norm: Some(5.0),
            update_epochs: 1,
        }
    }
}

impl LstmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.hidden == 0 {
            return bad("lstm hidden size must be positive".into());
        }
        if self.batch == 0 {
            return bad("lstm batch size must be positive".into());
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!(
                "lstm learning rate must be non-negative, got {}",
                self.lr
            ));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad(format!(
                "validation fraction must lie in [0, 1), got {}",
                self.val_fraction
            ));
        }
        if let Some(c) = self.clip_norm {
            if c.is_nan() || c <= 0.0 {
                return bad(format!("clip norm must be positive, got {c}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    input_dim: usize,
    hidden: usize,
    /// `4H x (D + H)`, row-major.
    w: Vec<f64>,
    b: Vec<f64>,
    wy: Vec<f64>,
    by: f64,
}

struct StepCache {
    u: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
}

impl LstmParams {
    /// Uniform `(-1/sqrt(H), 1/sqrt(H))` weights, forget-gate bias 1.
    pub fn new(input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::Config(format!(
                "invalid lstm shape input={input_dim} hidden={hidden}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / sqrt(hidden as f64);
        let cols = input_dim + hidden;
        let w = (0..4 * hidden * cols)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        let mut b = vec![0.0; 4 * hidden];
        for v in &mut b[hidden..2 * hidden] {
            *v = 1.0;
        }
        let wy = (0..hidden)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        Ok(Self {
            input_dim,
            hidden,
            w,
            b,
            wy,
            by: 0.0,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn len(&self) -> usize {
        self.w.len() + self.b.len() + self.wy.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.w);
        out.extend_from_slice(&self.b);
        out.extend_from_slice(&self.wy);
        out.push(self.by);
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                actual: flat.len(),
            });
        }
        let (w, rest) = flat.split_at(self.w.len());
        let (b, rest) = rest.split_at(self.b.len());
        let (wy, rest) = rest.split_at(self.wy.len());
        self.w.copy_from_slice(w);
        self.b.copy_from_slice(b);
        self.wy.copy_from_slice(wy);
        self.by = rest[0];
        Ok(())
    }

    fn check_window(&self, x: &[f64]) -> Result<usize> {
        if x.is_empty() || !x.len().is_multiple_of(self.input_dim) {
            return Err(Error::Dimension {
                expected: INPUT_STEPS * self.input_dim,
                actual: x.len(),
            });
        }
        Ok(x.len() / self.input_dim)
    }

    fn run(
        &self,
        x: &[f64],
        steps: usize,
        mut cache: Option<&mut Vec<StepCache>>,
    ) -> (f64, Vec<f64>) {
        let (d, h) = (self.input_dim, self.hidden);
        let cols = d + h;
        let mut hs = vec![0.0; h];
        let mut cs = vec![0.0; h];
        let mut z = vec![0.0; 4 * h];
        let mut u = vec![0.0; cols];
        for t in 0..steps {
            u[..d].copy_from_slice(&x[t * d..(t + 1) * d]);
            u[d..].copy_from_slice(&hs);
            for (r, zr) in z.iter_mut().enumerate() {
                let row = &self.w[r * cols..(r + 1) * cols];
                *zr = self.b[r] + row.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
            }
            let ig: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
            let fg: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
            let gg: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| tanh(v)).collect();
            let og: Vec<f64> = z[3 * h..].iter().map(|&v| sigmoid(v)).collect();
            for k in 0..h {
                cs[k] = fg[k] * cs[k] + ig[k] * gg[k];
            }
            let tc: Vec<f64> = cs.iter().map(|&v| tanh(v)).collect();
            for k in 0..h {
                hs[k] = og[k] * tc[k];
            }
            if let Some(c) = cache.as_deref_mut() {
                c.push(StepCache {
                    u: u.clone(),
                    i: ig,
                    f: fg,
                    g: gg,
                    o: og,
                    c: cs.clone(),
                    tc,
                });
            }
        }
        let y = self.by + self.wy.iter().zip(&hs).map(|(a, b)| a * b).sum::<f64>();
        (y, hs)
    }

    /// Prediction for one normalised window.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let steps = self.check_window(x)?;
        Ok(self.run(x, steps, None).0)
    }

    /// Mean squared error over a batch of normalised windows and its gradient
    /// with respect to every parameter, in [`LstmParams::to_flat`] order.
    pub fn batch_loss_and_gradient(&self, xs: &[&[f64]], ys: &[f64]) -> Result<(f64, Vec<f64>)> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::Dimension {
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        let (d, h) = (self.input_dim, self.hidden);
        let cols = d + h;
        let n = xs.len() as f64;
        let mut gw = vec![0.0; self.w.len()];
        let mut gb = vec![0.0; self.b.len()];
        let mut gwy = vec![0.0; h];
        let mut gby = 0.0;
        let mut total = 0.0;
        let mut cache = Vec::with_capacity(INPUT_STEPS);
        let mut dz = vec![0.0; 4 * h];
        for (x, &y) in xs.iter().zip(ys) {
            let steps = self.check_window(x)?;
            cache.clear();
            let (pred, h_last) = self.run(x, steps, Some(&mut cache));
            let err = pred - y;
            total += err * err;
            let dy = 2.0 * err / n;
            gby += dy;
            for k in 0..h {
                gwy[k] += dy * h_last[k];
            }
            let mut dh: Vec<f64> = self.wy.iter().map(|w| dy * w).collect();
            let mut dc = vec![0.0; h];
            for t in (0..steps).rev() {
                let s = &cache[t];
                for k in 0..h {
                    let c_prev = if t > 0 { cache[t - 1].c[k] } else { 0.0 };
                    let d_o = dh[k] * s.tc[k];
                    dc[k] += dh[k] * s.o[k] * (1.0 - s.tc[k] * s.tc[k]);
                    let d_i = dc[k] * s.g[k];
                    let d_g = dc[k] * s.i[k];
                    let d_f = dc[k] * c_prev;
                    dz[k] = d_i * s.i[k] * (1.0 - s.i[k]);
                    dz[h + k] = d_f * s.f[k] * (1.0 - s.f[k]);
                    dz[2 * h + k] = d_g * (1.0 - s.g[k] * s.g[k]);
                    dz[3 * h + k] = d_o * s.o[k] * (1.0 - s.o[k]);
                    dc[k] *= s.f[k];
                }
                let mut du_h = vec![0.0; h];
                for (r, &dzr) in dz.iter().enumerate() {
                    if dzr == 0.0 {
                        continue;
                    }
                    gb[r] += dzr;
                    let row = &self.w[r * cols..(r + 1) * cols];
                    let grow = &mut gw[r * cols..(r + 1) * cols];
                    for (g, uv) in grow.iter_mut().zip(&s.u) {
                        *g += dzr * uv;
                    }
                    for (acc, wv) in du_h.iter_mut().zip(&row[d..]) {
                        *acc += dzr * wv;
                    }
                }
                dh = du_h;
            }
        }
        let mut flat = gw;
        flat.extend(gb);
        flat.extend(gwy);
        flat.push(gby);
        Ok((total / n, flat))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(Self::BETA1, self.t as f64);
        let c2 = 1.0 - libm::pow(Self::BETA2, self.t as f64);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= lr * (*m / c1) / (sqrt(*v / c2) + Self::EPS);
        }
    }
}

/// What a call to [`Forecaster::train`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainSummary {
    pub epochs: usize,
    pub best_epoch: usize,
    /// Best validation MSE in normalised space, or the final training MSE
    /// when no validation samples were held out.
    pub best_loss: f64,
}

/// An LSTM together with its input scaling and optimiser state.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    params: LstmParams,
    normalizer: Normalizer,
    adam: Adam,
    config: LstmConfig,
    seed: u64,
    trained: bool,
}

impl Forecaster {
    pub fn new(normalizer: Normalizer, config: LstmConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = LstmParams::new(normalizer.features(), config.hidden, seed)?;
        let adam = Adam::new(params.len());
        Ok(Self {
            params,
            normalizer,
            adam,
            config,
            seed,
            trained: false,
        })
    }

    /// Rebuilds a model from checkpointed parts; the optimiser starts fresh.
    pub fn from_parts(
        params: LstmParams,
        normalizer: Normalizer,
        config: LstmConfig,
        seed: u64,
    ) -> Result<Self> {
        if params.input_dim() != normalizer.features() {
            return Err(Error::Dimension {
                expected: params.input_dim(),
                actual: normalizer.features(),
            });
        }
        let adam = Adam::new(params.len());
        Ok(Self {
            params,
            normalizer,
            adam,
            config,
            seed,
            trained: true,
        })
    }

    pub fn params(&self) -> &LstmParams {
        &self.params
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn config(&self) -> &LstmConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn input_dim(&self) -> usize {
        self.params.input_dim()
    }

    /// Replaces the input scaling; feature count must not change.
    pub fn set_normalizer(&mut self, normalizer: Normalizer) -> Result<()> {
        if normalizer.features() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                actual: normalizer.features(),
            });
        }
        self.normalizer = normalizer;
        Ok(())
    }

    fn prepare(&self, samples: &[FusedSample]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let d = self.input_dim();
        let mut xs = Vec::with_capacity(samples.len());
        let mut ys = Vec::with_capacity(samples.len());
        for s in samples {
            if s.x.len() != INPUT_STEPS * d {
                return Err(Error::Dimension {
                    expected: INPUT_STEPS * d,
                    actual: s.x.len(),
                });
            }
            let mut x = s.x.clone();
            self.normalizer.transform_window(&mut x)?;
            xs.push(x);
            ys.push(self.normalizer.transform(0, s.y));
        }
        Ok((xs, ys))
    }

    fn sgd_pass(&mut self, xs: &[Vec<f64>], ys: &[f64], order: &[usize]) -> Result<f64> {
        let mut flat = self.params.to_flat();
        let mut total = 0.0;
        for chunk in order.chunks(self.config.batch) {
            let bx: Vec<&[f64]> = chunk.iter().map(|&i| xs[i].as_slice()).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| ys[i]).collect();
            let (loss, mut grad) = self.params.batch_loss_and_gradient(&bx, &by)?;
            if !loss.is_finite() || !grad.iter().all(|g| g.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "batch loss {loss} after {} optimiser steps",
                    self.adam.t
                )));
            }
            total += loss * chunk.len() as f64;
            if let Some(max) = self.config.clip_norm {
                let norm = sqrt(grad.iter().map(|g| g * g).sum());
                if norm > max {
                    let s = max / norm;
                    grad.iter_mut().for_each(|g| *g *= s);
                }
            }
            self.adam.step(&mut flat, &grad, self.config.lr);
            self.params.set_flat(&flat)?;
        }
        Ok(total / order.len().max(1) as f64)
    }

    fn mse(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        let mut total = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            let p = self.params.run(x, x.len() / self.input_dim(), None).0;
            total += (p - y) * (p - y);
        }
        total / xs.len().max(1) as f64
    }

    /// Full training with shuffled mini-batches and early stopping on the
    /// trailing validation slice. The best-validation parameters are kept.
    pub fn train(&mut self, samples: &[FusedSample]) -> Result<TrainSummary> {
        if samples.is_empty() {
            return Err(Error::InvalidValue("cannot train on zero samples".into()));
        }
        let (xs, ys) = self.prepare(samples)?;
        let n_val = if samples.len() >= 2 {
            ((samples.len() as f64 * self.config.val_fraction) as usize)
                .max(usize::from(self.config.val_fraction > 0.0))
        } else {
            0
        };
        let n_train = samples.len() - n_val;
        let (train_x, val_x) = xs.split_at(n_train);
        let (train_y, val_y) = ys.split_at(n_train);

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed_1e57);
        let mut order: Vec<usize> = (0..n_train).collect();
        let mut best = (
            f64::INFINITY,
            0usize,
            self.params.clone(),
            self.adam.clone(),
        );
        let mut epochs = 0;
        for epoch in 1..=self.config.max_epochs {
            order.shuffle(&mut rng);
            let train_loss = self.sgd_pass(train_x, train_y, &order)?;
            epochs = epoch;
            let score = if n_val > 0 {
                self.mse(val_x, val_y)
            } else {
                train_loss
            };
            if !score.is_finite() {
                return Err(Error::NonFinite(format!(
                    "validation loss {score} at epoch {epoch}"
                )));
            }
            if score < best.0 {
                best = (score, epoch, self.params.clone(), self.adam.clone());
            } else if epoch - best.1 >= self.config.patience {
                break;
            }
        }
        if best.1 > 0 {
            self.params = best.2;
            self.adam = best.3;
        }
        self.trained = true;
        Ok(TrainSummary {
            epochs,
            best_epoch: best.1,
            best_loss: best.0,
        })
    }

    /// Continues optimisation on `samples` only, in their given order, for
    /// `update_epochs` passes.
    pub fn incremental_update(&mut self, samples: &[FusedSample]) -> Result<()> {
        if !self.trained {
            return Err(Error::InvalidValue(
                "incremental update before base training".into(),
            ));
        }
        if samples.is_empty() {
            return Ok(());
        }
        let (xs, ys) = self.prepare(samples)?;
        let order: Vec<usize> = (0..xs.len()).collect();
        for _ in 0..self.config.update_epochs {
            self.sgd_pass(&xs, &ys, &order)?;
        }
        Ok(())
    }

    /// De-normalised prediction for one raw fused window.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != INPUT_STEPS * self.input_dim() {
            return Err(Error::Dimension {
                expected: INPUT_STEPS * self.input_dim(),
                actual: x.len(),
            });
        }
        let mut z = x.to_vec();
        self.normalizer.transform_window(&mut z)?;
        let y = self.params.forward(&z)?;
        Ok(self.normalizer.inverse(0, y))
    }

    /// Text checkpoint: header, parameters, normaliser offsets and scales.
    pub fn to_checkpoint(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "owam-lstm v1 input={} hidden={} seed={}",
            self.input_dim(),
            self.params.hidden(),
            self.seed
        );
        let _ = writeln!(out, "[params]");
        for v in self.params.to_flat() {
            let _ = writeln!(out, "{v:?}");
        }
        let _ = writeln!(out, "[normalizer]");
        for (o, s) in self
            .normalizer
            .offsets()
            .iter()
            .zip(self.normalizer.scales())
        {
            let _ = writeln!(out, "{o:?} {s:?}");
        }
        out
    }

    pub fn from_checkpoint(text: &str, config: LstmConfig) -> Result<Self> {
        let bad = |m: String| Error::InvalidValue(m);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty checkpoint".into()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("owam-lstm") || fields.next() != Some("v1") {
            return Err(bad(format!("bad checkpoint header `{header}`")));
        }
        let (mut input, mut hidden, mut seed) = (None, None, None);
        for f in fields {
            let (k, v) = f
                .split_once('=')
                .ok_or_else(|| bad(format!("bad field `{f}`")))?;
            let parsed = v
                .parse::<u64>()
                .map_err(|_| bad(format!("bad field `{f}`")))?;
            match k {
                "input" => input = Some(parsed as usize),
                "hidden" => hidden = Some(parsed as usize),
                "seed" => seed = Some(parsed),
                _ => return Err(bad(format!("unknown field `{k}`"))),
            }
        }
        let (input, hidden, seed) = match (input, hidden, seed) {
            (Some(i), Some(h), Some(s)) => (i, h, s),
            _ => return Err(bad("checkpoint header incomplete".into())),
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("bad number `{s}`")))
        };
        let mut flat = Vec::new();
        let (mut offset, mut scale) = (Vec::new(), Vec::new());
        let mut section = "";
        for line in lines.map(str::trim).filter(|l| !l.is_empty()) {
            match line {
                "[params]" | "[normalizer]" => section = line,
                _ if section == "[params]" => flat.push(num(line)?),
                _ if section == "[normalizer]" => {
                    let (o, s) = line
                        .split_once(' ')
                        .ok_or_else(|| bad(format!("bad normalizer row `{line}`")))?;
                    offset.push(num(o)?);
                    scale.push(num(s)?);
                }
                _ => return Err(bad(format!("data outside a section: `{line}`"))),
            }
        }
        let mut params = LstmParams::new(input, hidden, 0)?;
        params.set_flat(&flat)?;
        let config = LstmConfig { hidden, ..config };
        Self::from_parts(params, Normalizer::from_parts(offset, scale)?, config, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize, d: usize, f: impl Fn(usize) -> f64) -> Vec<FusedSample> {
        (0..n)
            .map(|i| FusedSample {
                x: (0..INPUT_STEPS * d).map(|j| f(i + j / d)).collect(),
                y: f(i + INPUT_STEPS),
                step: i + INPUT_STEPS,
            })
            .collect()
    }

    fn small_config() -> LstmConfig {
        LstmConfig {
            hidden: 4,
            batch: 8,
            lr: 0.01,
            max_epochs: 3,
            ..LstmConfig::default()
        }
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let p = LstmParams::new(3, 5, 1).unwrap();
        assert!(p.b[5..10].iter().all(|&v| v == 1.0));
        assert!(p.b[..5].iter().chain(&p.b[10..]).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let s = samples(40, 2, |i| (i % 7) as f64);
        let cols: Vec<Vec<f64>> = vec![(0..60).map(|i| (i % 7) as f64).collect(); 2];
        let norm = Normalizer::fit(&[&cols[0], &cols[1]], &[1.0]).unwrap();
        let mut m = Forecaster::new(
            norm,
            LstmConfig {
                lr: 0.0,
                ..small_config()
            },
            4,
        )
        .unwrap();
        let before = m.params().clone();
        m.train(&s).unwrap();
        assert_eq!(m.params(), &before);
        m.incremental_update(&s).unwrap();
        assert_eq!(m.params(), &before);
    }

    #[test]
    fn update_requires_training_and_ignores_empty_input() {
        let norm = Normalizer::fit(&[&[0.0, 1.0]], &[]).unwrap();
        let mut m = Forecaster::new(norm, small_config(), 0).unwrap();
        assert!(m.incremental_update(&samples(3, 1, |i| i as f64)).is_err());
        m.train(&samples(10, 1, |i| i as f64)).unwrap();
        let before = m.clone();
        m.incremental_update(&[]).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let norm = Normalizer::fit(&[&[0.0, 1.0], &[0.0, 1.0]], &[1.0]).unwrap();
        let m = Forecaster::new(norm, small_config(), 0).unwrap();
        assert!(m.predict(&[0.0; 12]).is_err());
        assert!(m.predict(&[0.0; 24]).is_ok());
        assert!(m.params().forward(&[0.0; 5]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let s = samples(30, 1, |i| (i as f64 * 0.7).sin() + 2.0);
        let col: Vec<f64> = (0..50).map(|i| (i as f64 * 0.7).sin() + 2.0).collect();
        let mut m =
            Forecaster::new(Normalizer::fit(&[&col], &[]).unwrap(), small_config(), 3).unwrap();
        m.train(&s).unwrap();
        let text = m.to_checkpoint();
        let back = Forecaster::from_checkpoint(&text, small_config()).unwrap();
        for x in &s {
            assert_eq!(
                m.predict(&x.x).unwrap().to_bits(),
                back.predict(&x.x).unwrap().to_bits()
            );
        }
        assert!(Forecaster::from_checkpoint("owam-lstm v1 input=1", small_config()).is_err());
    }
}
