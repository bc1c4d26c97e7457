//! Preference and policy-gradient fine-tuning: losses, advantage estimators,
//! regularizers, optimizers and the training loops.

mod config;
mod dpo;
mod gae;
mod grpo;
mod optim;
mod ppo;
mod regularizers;
mod report;
mod train;

pub use config::{Algorithm, EntropySign, KlAnchor, OptimizerKind, RLConfig};
pub use dpo::{dpo_loss, dpo_pair_loss, PreferencePair};
pub use gae::gae;
pub use grpo::grpo_advantages;
pub use optim::{clip_scale, Optimizer};
pub use ppo::{clipped_surrogate, importance_ratio, ppo_loss, PpoDiagnostics, PpoOutput, LOG_RATIO_CLAMP};
pub use regularizers::{combined_loss, entropy_weight, kl_penalty, KlPenalty, LinearValue};
pub use report::{StepRecord, TrainingReport};
pub use train::{build_preference_pairs, train_mutation, train_sequence, RETURNS_EPS};
