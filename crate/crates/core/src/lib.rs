//! Allocation-only building blocks for outlier-weighted traffic forecasting.
//!
//! The crate is `no_std` and needs only `alloc`. Everything that touches the
//! file system, wall clocks or threads lives in the companion `owam` crate.
//!
//! Data flows through the modules in this order:
//!
//! 1. [`series`] holds uniformly sampled sensor streams and [`synth`] fabricates them.
//! 2. [`fpd`] folds each stream into hourly flow-probability distributions.
//! 3. [`autoencoder`] scores every distribution with an online autoencoder.
//! 4. [`correlation`] ranks neighbours by Pearson correlation of those scores.
//! 5. [`lstm`] forecasts the target from its own values and the weighted neighbours.
#![no_std]

extern crate alloc;

pub mod autoencoder;
pub mod correlation;
pub mod error;
pub mod fpd;
pub mod fusion;
pub mod loss;
pub mod lstm;
pub mod metrics;
pub mod normalize;
pub mod series;
pub mod synth;

mod math;

pub use error::{Error, Result};
pub use series::{Dataset, IndicatorKind, SensorId, SensorReading, SensorSeries};
