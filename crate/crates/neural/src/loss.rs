//! Three-term objective: summary cross-entropy, YOD regression and YOD
//! classification, with a stepped weight on the regression term.

use serde::{Deserialize, Serialize};

/// Fixed weight of the classification term.
pub const CLASS_WEIGHT: f64 = 4.0;

const EPOCHS_PER_STEP: usize = 3;
const MAX_STEPS: usize = 8;

/// Regression-loss weight: 0.4, raised by 0.05 every 3 epochs, capped at 0.8.
pub fn dynamic_weight(epoch: usize) -> f64 {
    // in twentieths so every value is the correctly rounded decimal
    let steps = (epoch / EPOCHS_PER_STEP).min(MAX_STEPS);
    (8 + steps) as f64 / 20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ce_loss: f64,
    pub mse_loss: f64,
    pub class_loss: f64,
    pub w_yod: f64,
    pub class_weight: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        [self.ce_loss, self.mse_loss, self.class_loss, self.total].iter().all(|v| v.is_finite())
    }
}

/// `ce + w(epoch)·mse + 4·class`, evaluated left to right.
pub fn composite_loss(ce: f64, mse: f64, class_ce: f64, epoch: usize) -> LossBreakdown {
    let w_yod = dynamic_weight(epoch);
    LossBreakdown {
        ce_loss: ce,
        mse_loss: mse,
        class_loss: class_ce,
        w_yod,
        class_weight: CLASS_WEIGHT,
        total: ce + w_yod * mse + CLASS_WEIGHT * class_ce,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn weight_schedule() {
        assert_eq!(dynamic_weight(0), 0.4);
        assert_eq!(dynamic_weight(2), 0.4);
        assert_eq!(dynamic_weight(3), 0.45);
        assert_eq!(dynamic_weight(7), 0.5);
        assert_eq!(dynamic_weight(24), 0.8);
        assert_eq!(dynamic_weight(30), 0.8);
        assert_eq!(dynamic_weight(10_000), 0.8);
    }

    #[test]
    fn composite_examples() {
        assert!((composite_loss(1.0, 2.0, 0.5, 0).total - 3.8).abs() < 1e-12);
        assert_eq!(composite_loss(0.0, 0.0, 0.0, 5).total, 0.0);
        assert!((composite_loss(1.0, 1.0, 0.0, 30).total - 1.8).abs() < 1e-12);
        assert_eq!(composite_loss(1.0, 1.0, 1.0, 0).class_weight, 4.0);
    }

    proptest! {
        #[test]
        fn weight_is_bounded_and_nondecreasing(e in 0usize..1000) {
            let w = dynamic_weight(e);
            prop_assert!((0.4..=0.8).contains(&w));
            prop_assert!(dynamic_weight(e + 1) >= w);
        }

        #[test]
        fn total_recomposes(ce in 0.0f64..10.0, mse in 0.0f64..100.0, cl in 0.0f64..5.0, e in 0usize..60) {
            let b = composite_loss(ce, mse, cl, e);
            let re = b.ce_loss + b.w_yod * b.mse_loss + b.class_weight * b.class_loss;
            prop_assert!((b.total - re).abs() <= 1e-12);
        }
    }
}
