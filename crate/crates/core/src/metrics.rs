//! Forecast accuracy metrics.

use crate::error::{Error, Result};
use crate::math::sqrt;

/// Root mean squared error between predictions and truths.
pub fn rmse(predictions: &[f64], truths: &[f64]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::Dimension {
            expected: predictions.len(),
            actual: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::InvalidValue("rmse of an empty sequence".into()));
    }
    let sq: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sqrt(sq / predictions.len() as f64))
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation.
pub fn std_dev(values: &[f64]) -> f64 {
    let m = mean(values);
    sqrt(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
}
