//! Reconstruction losses between two distributions over ordered bins.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, PartialOrd, Ord, Hash)]
pub enum LossKind {
    /// Root mean squared bin-wise error.
    Rmse,
    /// Earth mover's distance on unit-spaced ordered bins.
    #[default]
    Emd,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::Rmse => "rmse",
            LossKind::Emd => "emd",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmse" => Ok(LossKind::Rmse),
            "emd" => Ok(LossKind::Emd),
            other => Err(Error::Config(alloc::format!("unknown loss kind `{other}`"))),
        }
    }
}

fn check(target: &[f64], recon: &[f64]) -> Result<()> {
    if target.len() != recon.len() {
        return Err(Error::Dimension {
            expected: target.len(),
            actual: recon.len(),
        });
    }
    Ok(())
}

pub fn loss(kind: LossKind, target: &[f64], recon: &[f64]) -> Result<f64> {
    check(target, recon)?;
    Ok(match kind {
        LossKind::Rmse => rmse(target, recon),
        LossKind::Emd => emd(target, recon),
    })
}

fn rmse(target: &[f64], recon: &[f64]) -> f64 {
    if target.is_empty() {
        return 0.0;
    }
    let sq: f64 = target
        .iter()
        .zip(recon)
        .map(|(a, b)| (b - a) * (b - a))
        .sum();
    sqrt(sq / target.len() as f64)
}

/// `sum_i |F(i) - G(i)|` over the first `B - 1` cumulative sums.
///
/// For two distributions the last cumulative sums are both 1, so dropping
/// that term leaves the value unchanged and keeps rounding noise out of it.
fn emd(target: &[f64], recon: &[f64]) -> f64 {
    let n = target.len().saturating_sub(1);
    let mut diff = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        diff += recon[i] - target[i];
        total += diff.abs();
    }
    total
}

/// Gradient of [`loss`] with respect to `recon`.
///
/// For EMD this is the subgradient with `sign(0) = 0`; for RMSE the gradient
/// at a perfect reconstruction is taken as zero.
pub fn loss_gradient(kind: LossKind, target: &[f64], recon: &[f64]) -> Result<Vec<f64>> {
    check(target, recon)?;
    let n = target.len();
    let mut grad = alloc::vec![0.0; n];
    match kind {
        LossKind::Rmse => {
            let l = rmse(target, recon);
            if l > 0.0 {
                for (g, (a, b)) in grad.iter_mut().zip(target.iter().zip(recon)) {
                    *g = (b - a) / (n as f64 * l);
                }
            }
        }
        LossKind::Emd => {
            // d/d recon_k of sum_{i >= k, i < n-1} |cum_i| = sum_{i >= k} sign(cum_i)
            let mut signs = alloc::vec![0.0; n];
            let mut diff = 0.0;
            for i in 0..n.saturating_sub(1) {
                diff += recon[i] - target[i];
                signs[i] = if diff > 0.0 {
                    1.0
                } else if diff < 0.0 {
                    -1.0
                } else {
                    0.0
                };
            }
            let mut acc = 0.0;
            for k in (0..n).rev() {
                acc += signs[k];
                grad[k] = acc;
            }
        }
    }
    Ok(grad)
}

/// Smallest `|F(i) - G(i)|` over the interior cumulative sums; EMD is not
/// differentiable where this is zero.
pub fn emd_kink_distance(target: &[f64], recon: &[f64]) -> f64 {
    let mut diff = 0.0;
    let mut min = f64::INFINITY;
    for i in 0..target.len().saturating_sub(1) {
        diff += recon[i] - target[i];
        min = min.min(diff.abs());
    }
    min
}
