use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

/// Probabilities are clamped into `[BCE_CLAMP, 1 - BCE_CLAMP]` before the log.
pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Binary cross-entropy averaged over every entry.
    Bce,
    /// Squared error averaged over every entry.
    Mse,
}

impl LossKind {
    /// Loss value and its gradient with respect to `predicted`.
    pub fn evaluate(self, predicted: &Tensor2D, target: &Tensor2D) -> Result<(f64, Tensor2D)> {
        if predicted.shape() != target.shape() {
            return Err(Error::shape(
                "loss",
                format!("{:?}", predicted.shape()),
                format!("{:?}", target.shape()),
            ));
        }
        let n = predicted.values().len().max(1) as f64;
        let mut grad = Tensor2D::zeros(predicted.rows(), predicted.cols());
        let mut total = 0.0;
        match self {
            LossKind::Mse => {
                for ((g, &p), &t) in grad.values_mut().iter_mut().zip(predicted.values()).zip(target.values()) {
                    let d = p - t;
                    total += d * d;
                    *g = 2.0 * d / n;
                }
            }
            LossKind::Bce => {
                for ((g, &p), &t) in grad.values_mut().iter_mut().zip(predicted.values()).zip(target.values()) {
                    let q = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
                    total -= t * q.ln() + (1.0 - t) * (1.0 - q).ln();
                    // The clamp is flat outside the interval.
                    *g = if p > BCE_CLAMP && p < 1.0 - BCE_CLAMP {
                        (q - t) / (q * (1.0 - q)) / n
                    } else {
                        0.0
                    };
                }
            }
        }
        let loss = total / n;
        if !loss.is_finite() {
            return Err(Error::Numeric {
                context: format!("{self:?} loss"),
            });
        }
        Ok((loss, grad))
    }

    pub fn value(self, predicted: &Tensor2D, target: &Tensor2D) -> Result<f64> {
        self.evaluate(predicted, target).map(|(l, _)| l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_of_identical_is_zero() {
        let y = Tensor2D::from_rows(&[[0.3, -2.0], [1.0, 4.0]]).unwrap();
        let (l, g) = LossKind::Mse.evaluate(&y, &y).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let a = Tensor2D::zeros(2, 2);
        let b = Tensor2D::zeros(2, 3);
        assert!(LossKind::Bce.evaluate(&a, &b).is_err());
    }

    proptest! {
        // For a fixed binary target, BCE over clamped predictions is
        // minimized exactly at predicted == target.
        #[test]
        fn bce_minimum_at_target(p in 0.0f64..=1.0, t in 0u8..=1) {
            let t = t as f64;
            let target = Tensor2D::filled(1, 1, t);
            let at_target = LossKind::Bce.value(&target, &target).unwrap();
            let elsewhere = LossKind::Bce.value(&Tensor2D::filled(1, 1, p), &target).unwrap();
            prop_assert!(at_target <= elsewhere);
        }
    }
}
