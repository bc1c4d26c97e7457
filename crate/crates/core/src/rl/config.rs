use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which policy anchors the KL penalty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KlAnchor {
    /// Frozen copy of the policy at the start of training.
    #[default]
    Reference,
    /// Policy snapshot that generated the current batch.
    Old,
}

/// Sign of the entropy term in the combined loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropySign {
    /// Entropy is subtracted: higher entropy lowers the loss.
    #[default]
    Bonus,
    /// Entropy is added, as the combined-loss formula is literally written.
    Penalty,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    #[default]
    Adam,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dpo,
    Ppo,
    Grpo,
}

/// Hyperparameters shared by the three training algorithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RLConfig {
    pub clip_eps: f64,
    pub kl_coeff: f64,
    pub value_coeff: f64,
    pub entropy_coeff: f64,
    pub entropy_sign: EntropySign,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub dpo_beta: f64,
    pub dpo_reg_lambda: f64,
    pub kl_clamp: f64,
    pub kl_anchor: KlAnchor,
    pub group_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Global gradient-norm clip; `0` disables.
    pub grad_clip: f64,
    pub rank_normalize: bool,
    pub normalize_advantages: bool,
    pub standardize_returns: bool,
    /// Sequences (PPO) or episodes per update; GRPO uses `batch_size / group_size` groups.
    pub batch_size: usize,
    pub ppo_epochs: usize,
    /// Sampling temperature and nucleus mass during rollouts.
    pub temperature: f64,
    pub top_p: f64,
    /// DPO: sequences sampled per round to build preference pairs.
    pub dpo_samples_per_round: usize,
    /// DPO: fraction taken from the top and the bottom of the ranking.
    pub dpo_quantile: f64,
    /// DPO: gradient steps per round before the reference is re-snapshotted.
    pub dpo_round_steps: usize,
}

impl Default for RLConfig {
    fn default() -> Self {
        Self {
            clip_eps: 0.2,
            kl_coeff: 20.0,
            value_coeff: 0.4,
            entropy_coeff: 0.01,
            entropy_sign: EntropySign::Bonus,
            gamma: 0.99,
            gae_lambda: 0.95,
            dpo_beta: 0.5,
            dpo_reg_lambda: 1.0,
            kl_clamp: 10.0,
            kl_anchor: KlAnchor::Reference,
            group_size: 8,
            learning_rate: 1e-2,
            optimizer: OptimizerKind::Adam,
            grad_clip: 0.0,
            rank_normalize: false,
            normalize_advantages: true,
            standardize_returns: false,
            batch_size: 64,
            ppo_epochs: 4,
            temperature: 1.0,
            top_p: 1.0,
            dpo_samples_per_round: 64,
            dpo_quantile: 0.25,
            dpo_round_steps: 10,
        }
    }
}

impl RLConfig {
    /// Checks ranges; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::config(format!("rl.{field}: {why}")));
        if !(self.clip_eps > 0.0 && self.clip_eps < 1.0) {
            return bad("clip_eps", "must lie in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", "must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", "must lie in [0, 1]");
        }
        for (name, v) in [
            ("kl_coeff", self.kl_coeff),
            ("value_coeff", self.value_coeff),
            ("entropy_coeff", self.entropy_coeff),
            ("dpo_reg_lambda", self.dpo_reg_lambda),
            ("learning_rate", self.learning_rate),
            ("grad_clip", self.grad_clip),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, "must be finite and >= 0");
            }
        }
        if !(self.dpo_beta > 0.0 && self.dpo_beta.is_finite()) {
            return bad("dpo_beta", "must be > 0");
        }
        if !(self.kl_clamp > 0.0) {
            return bad("kl_clamp", "must be > 0");
        }
        if self.group_size < 2 {
            return bad("group_size", "must be >= 2");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1");
        }
        if self.ppo_epochs == 0 {
            return bad("ppo_epochs", "must be >= 1");
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad("temperature", "must be > 0");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p", "must lie in (0, 1]");
        }
        if !(self.dpo_quantile > 0.0 && self.dpo_quantile <= 0.5) {
            return bad("dpo_quantile", "must lie in (0, 0.5]");
        }
        if self.dpo_samples_per_round < 2 {
            return bad("dpo_samples_per_round", "must be >= 2");
        }
        if self.dpo_round_steps == 0 {
            return bad("dpo_round_steps", "must be >= 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_reference_hyperparameters() {
        let c = RLConfig::default();
        assert_eq!((c.kl_coeff, c.value_coeff, c.entropy_coeff), (20.0, 0.4, 0.01));
        assert_eq!((c.gamma, c.gae_lambda), (0.99, 0.95));
        assert_eq!((c.dpo_beta, c.dpo_reg_lambda, c.kl_clamp, c.clip_eps), (0.5, 1.0, 10.0, 0.2));
        c.validate().unwrap();
    }

    #[test]
    fn validation_names_the_field() {
        let c = RLConfig {
            clip_eps: 1.0,
            ..RLConfig::default()
        };
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("rl.clip_eps"), "{msg}");
        let c = RLConfig {
            gae_lambda: 1.5,
            ..RLConfig::default()
        };
        assert!(c.validate().unwrap_err().to_string().contains("rl.gae_lambda"));
    }
}
