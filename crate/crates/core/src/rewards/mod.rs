//! Scalar reward oracles and reward shaping.

mod csv_io;
mod nk;
mod noisy;
mod phoq;
mod table;
mod threshold;

pub use csv_io::{load_landscape_csv, parse_landscape_csv, write_landscape_csv, LandscapeSchema, LoadedLandscape};
pub use nk::NKLandscape;
pub use noisy::NoisyOracle;
pub use phoq::{phoq_like, PhoqLikeParams, PHOQ_SITES, PHOQ_WILD_TYPE};
pub use table::{TableLandscape, DEFAULT_INVALID_PENALTY, DEFAULT_UNLABELED};
pub use threshold::{ThresholdClassifierReward, DEFAULT_CLASSIFIER_THRESHOLD};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sequence::Sequence;

/// A pure scalar value function over sequences.
pub trait RewardOracle: Send + Sync {
    fn score(&self, seq: &Sequence) -> Result<f64>;
}

impl<T: RewardOracle + ?Sized> RewardOracle for Arc<T> {
    fn score(&self, seq: &Sequence) -> Result<f64> {
        (**self).score(seq)
    }
}

impl<T: RewardOracle + ?Sized> RewardOracle for Box<T> {
    fn score(&self, seq: &Sequence) -> Result<f64> {
        (**self).score(seq)
    }
}

impl<T: RewardOracle + ?Sized> RewardOracle for &T {
    fn score(&self, seq: &Sequence) -> Result<f64> {
        (**self).score(seq)
    }
}

/// Binary success derived from a reward value: `reward > threshold`
/// (or `>=` when `inclusive`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessPredicate {
    pub threshold: f64,
    #[serde(default)]
    pub inclusive: bool,
}

impl SuccessPredicate {
    pub fn above(threshold: f64) -> Self {
        Self {
            threshold,
            inclusive: false,
        }
    }

    pub fn is_success(&self, reward: f64) -> bool {
        if self.inclusive {
            reward >= self.threshold
        } else {
            reward > self.threshold
        }
    }
}
