//! Binary classification scores with the minority class as positive.

use serde::{Deserialize, Serialize};

use crate::data::MINORITY;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Swaps the roles of the two classes.
    pub fn relabeled(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

pub fn confusion(truth: &[u8], predicted: &[u8]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::validation(format!(
            "truth has {} labels, predictions {}",
            truth.len(),
            predicted.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::validation("cannot score an empty set"));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        if t > 1 || p > 1 {
            return Err(Error::validation(format!("non-binary label pair ({t}, {p})")));
        }
        match (t == MINORITY, p == MINORITY) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// `2tp / (2tp + fp + fn)`, or 0 when nothing was positive in either
/// truth or prediction.
pub fn f1_minority(cm: &ConfusionMatrix) -> f64 {
    let denom = 2 * cm.tp + cm.fp + cm.fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * cm.tp) as f64 / denom as f64
    }
}

/// Cohen's kappa `(P_o - P_e) / (1 - P_e)`; 0 when `P_e = 1`.
pub fn cohen_kappa(cm: &ConfusionMatrix) -> f64 {
    let n = cm.total() as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (tp, fp, fn_, tn) = (cm.tp as f64, cm.fp as f64, cm.fn_ as f64, cm.tn as f64);
    let observed = (tp + tn) / n;
    let chance = ((tp + fp) * (tp + fn_) + (fn_ + tn) * (fp + tn)) / (n * n);
    if chance >= 1.0 {
        0.0
    } else {
        (observed - chance) / (1.0 - chance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_prediction() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(2, 0, 0, 2));
        assert_eq!(f1_minority(&cm), 1.0);
        assert_eq!(cohen_kappa(&cm), 1.0);
    }

    #[test]
    fn all_majority_prediction() {
        let cm = confusion(&[1, 0], &[0, 0]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(0, 0, 1, 1));
        assert_eq!(f1_minority(&cm), 0.0);
    }

    #[test]
    fn chance_level_kappa_is_zero() {
        let cm = ConfusionMatrix::new(0, 0, 10, 90);
        assert_eq!(cohen_kappa(&cm), 0.0);
    }

    #[test]
    fn f1_hand_value() {
        let cm = ConfusionMatrix::new(3, 1, 2, 10);
        assert!((f1_minority(&cm) - 6.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_hand_value() {
        // n = 100, P_o = 0.95, P_e = (10*11 + 90*89)/10000 = 0.812
        // kappa = 0.138 / 0.188
        let cm = ConfusionMatrix::new(8, 2, 3, 87);
        assert!((cohen_kappa(&cm) - 0.138 / 0.188).abs() < 1e-12);
    }

    #[test]
    fn degenerate_conventions() {
        assert_eq!(f1_minority(&ConfusionMatrix::new(0, 0, 0, 5)), 0.0);
        assert_eq!(cohen_kappa(&ConfusionMatrix::new(0, 0, 0, 5)), 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(confusion(&[1, 0], &[1]).is_err());
        assert!(confusion(&[], &[]).is_err());
        assert!(confusion(&[2], &[1]).is_err());
    }

    #[test]
    fn counting_oracle() {
        let mut rng = crate::rng::SplitMix64::new(12);
        let truth: Vec<u8> = (0..1000).map(|_| rng.below(2) as u8).collect();
        let pred: Vec<u8> = (0..1000).map(|_| rng.below(2) as u8).collect();
        let cm = confusion(&truth, &pred).unwrap();
        let count = |t: u8, p: u8| truth.iter().zip(&pred).filter(|&(&a, &b)| a == t && b == p).count() as u64;
        assert_eq!(cm, ConfusionMatrix::new(count(1, 1), count(0, 1), count(1, 0), count(0, 0)));
    }

    fn matrices() -> impl Strategy<Value = ConfusionMatrix> {
        (0u64..500, 0u64..500, 0u64..500, 0u64..500)
            .prop_filter("non-empty", |(a, b, c, d)| a + b + c + d > 0)
            .prop_map(|(a, b, c, d)| ConfusionMatrix::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn ranges(cm in matrices()) {
            let k = cohen_kappa(&cm);
            let f = f1_minority(&cm);
            prop_assert!((-1.0..=1.0).contains(&k));
            prop_assert!((0.0..=1.0).contains(&f));
        }

        #[test]
        fn kappa_symmetric_under_label_swap(cm in matrices()) {
            prop_assert!((cohen_kappa(&cm) - cohen_kappa(&cm.relabeled())).abs() < 1e-12);
        }

        #[test]
        fn kappa_one_iff_no_errors(tp in 1u64..100, tn in 1u64..100, fp in 0u64..3, fn_ in 0u64..3) {
            let cm = ConfusionMatrix::new(tp, fp, fn_, tn);
            prop_assert_eq!(cohen_kappa(&cm) == 1.0, fp == 0 && fn_ == 0);
        }
    }

    #[test]
    fn f1_is_positive_class_specific() {
        let cm = ConfusionMatrix::new(3, 1, 2, 10);
        assert_ne!(f1_minority(&cm), f1_minority(&cm.relabeled()));
    }
}
