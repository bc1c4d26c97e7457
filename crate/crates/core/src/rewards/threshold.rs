use std::sync::Arc;

use super::RewardOracle;
use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Default classification threshold.
pub const DEFAULT_CLASSIFIER_THRESHOLD: f64 = 0.4;

/// `R(s) = 2 (f(s) - lambda)` for a classifier score `f(s)` in `[0, 1]`.
#[derive(Clone)]
pub struct ThresholdClassifierReward {
    scorer: Arc<dyn RewardOracle>,
    pub lambda: f64,
}

impl ThresholdClassifierReward {
    pub fn new(scorer: Arc<dyn RewardOracle>, lambda: f64) -> Self {
        Self { scorer, lambda }
    }

    pub fn with_default_threshold(scorer: Arc<dyn RewardOracle>) -> Self {
        Self::new(scorer, DEFAULT_CLASSIFIER_THRESHOLD)
    }

    /// The affine transform alone.
    pub fn transform(&self, f: f64) -> f64 {
        2.0 * (f - self.lambda)
    }
}

impl RewardOracle for ThresholdClassifierReward {
    fn score(&self, seq: &Sequence) -> Result<f64> {
        let f = self.scorer.score(seq)?;
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::input(format!("classifier score {f} is outside [0, 1]")));
        }
        Ok(self.transform(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Constant(f64);

    impl RewardOracle for Constant {
        fn score(&self, _: &Sequence) -> Result<f64> {
            Ok(self.0)
        }
    }

    fn reward(f: f64) -> Result<f64> {
        let r = ThresholdClassifierReward::with_default_threshold(Arc::new(Constant(f)));
        r.score(&Sequence::new(vec![0], 1).unwrap())
    }

    #[test]
    fn examples() {
        assert_eq!(reward(0.4).unwrap(), 0.0);
        assert!((reward(0.9).unwrap() - 1.0).abs() < 1e-15);
        assert!((reward(0.0).unwrap() + 0.8).abs() < 1e-15);
        assert!(reward(1.5).is_err());
    }

    proptest! {
        #[test]
        fn monotone_and_sign_preserving(f in 0.0..=1.0f64, g in 0.0..=1.0f64, lambda in 0.0..1.0f64) {
            let r = ThresholdClassifierReward::new(Arc::new(Constant(0.0)), lambda);
            let (rf, rg) = (r.transform(f), r.transform(g));
            if f < g { prop_assert!(rf < rg); }
            prop_assert_eq!(rf.partial_cmp(&0.0), (f - lambda).partial_cmp(&0.0));
            prop_assert!(rf >= -2.0 * lambda - 1e-12 && rf <= 2.0 * (1.0 - lambda) + 1e-12);
        }
    }
}
