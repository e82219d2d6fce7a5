//! Min-max scaling of fused forecaster inputs.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Per-feature affine map `v -> (v - offset) / scale`.
///
/// Feature 0 is the target column, which is also the regression output.
/// Neighbour columns arrive pre-multiplied by their correlation weight `w`;
/// their offset is `w * min` while the scale stays the unweighted range, so
/// after scaling a neighbour column reads `w * minmax(raw)` and the weight
/// keeps its meaning instead of being normalised away.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    offset: Vec<f64>,
    scale: Vec<f64>,
}

fn min_max(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidValue(
            "cannot fit a normalizer on an empty column".into(),
        ));
    }
    Ok(values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        }))
}

impl Normalizer {
    /// Fits on raw (unweighted) columns, target first, and the neighbour
    /// weights that will be applied to columns `1..`.
    pub fn fit(columns: &[&[f64]], weights: &[f64]) -> Result<Self> {
        if columns.len() != weights.len() + 1 {
            return Err(Error::Dimension {
                expected: weights.len() + 1,
                actual: columns.len(),
            });
        }
        let mut offset = Vec::with_capacity(columns.len());
        let mut scale = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter().enumerate() {
            let (lo, hi) = min_max(col)?;
            let w = if j == 0 { 1.0 } else { weights[j - 1] };
            let range = hi - lo;
            offset.push(w * lo);
            scale.push(if range > 0.0 { range } else { 1.0 });
        }
        Ok(Self { offset, scale })
    }

    pub fn from_parts(offset: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if offset.len() != scale.len() || offset.is_empty() {
            return Err(Error::Dimension {
                expected: offset.len(),
                actual: scale.len(),
            });
        }
        if let Some(s) = scale.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidValue(format!(
                "normalizer scale {s} must be positive"
            )));
        }
        Ok(Self { offset, scale })
    }

    pub fn features(&self) -> usize {
        self.offset.len()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offset
    }

    pub fn scales(&self) -> &[f64] {
        &self.scale
    }

    pub fn transform(&self, feature: usize, v: f64) -> f64 {
        (v - self.offset[feature]) / self.scale[feature]
    }

    pub fn inverse(&self, feature: usize, v: f64) -> f64 {
        v * self.scale[feature] + self.offset[feature]
    }

    /// Scales a row-major `steps x features` window in place.
    pub fn transform_window(&self, x: &mut [f64]) -> Result<()> {
        let d = self.features();
        if !x.len().is_multiple_of(d) {
            return Err(Error::Dimension {
                expected: d,
                actual: x.len() % d,
            });
        }
        for row in x.chunks_mut(d) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.transform(j, *v);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn weights_survive_scaling() {
        let target = [10.0, 20.0, 30.0];
        let neighbor = [0.0, 50.0, 100.0];
        let n = Normalizer::fit(&[&target, &neighbor], &[0.4]).unwrap();
        assert_eq!(n.transform(0, 20.0), 0.5);
        // weighted neighbour value 0.4 * 100 maps to 0.4 * 1
        assert!((n.transform(1, 40.0) - 0.4).abs() < 1e-15);
        assert!((n.inverse(1, n.transform(1, 12.3)) - 12.3).abs() < 1e-12);
    }

    #[test]
    fn constant_column_gets_unit_scale() {
        let n = Normalizer::fit(&[&[5.0, 5.0]], &[]).unwrap();
        assert_eq!(n.transform(0, 5.0), 0.0);
        assert_eq!(n.inverse(0, 0.0), 5.0);
    }

    #[test]
    fn shape_errors() {
        assert!(Normalizer::fit(&[&[1.0]], &[0.5]).is_err());
        assert!(Normalizer::fit(&[&[]], &[]).is_err());
        assert!(Normalizer::from_parts(vec![0.0], vec![0.0]).is_err());
        let n = Normalizer::fit(&[&[1.0, 2.0], &[1.0, 3.0]], &[1.0]).unwrap();
        assert!(n.transform_window(&mut [1.0, 2.0, 3.0]).is_err());
    }
}
