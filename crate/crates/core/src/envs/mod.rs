//! Multi-step mutation decision processes.
//!
//! One environment serves both regimes used in practice: per-step rewards over a
//! restricted (CDR-style) mask, and terminal-only rewards over every mutable site.

mod pool;
mod rollout;

pub use pool::{fitness_bin, fitness_bin_pool, FitnessBin};
pub use rollout::{rollout, rollout_from, write_trajectory_log, Trajectory, TrajectoryRecord};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::MutationAction;
use crate::rewards::RewardOracle;
use crate::rng::RngStream;
use crate::sequence::Sequence;

/// Default episode horizon.
pub const DEFAULT_MAX_STEPS: usize = 4;

/// Linear temperature schedule, constant at `end` past the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSchedule {
    pub start: f64,
    pub end: f64,
    pub horizon_steps: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            start: 1.0,
            end: 0.5,
            horizon_steps: 1000,
        }
    }
}

impl AnnealSchedule {
    pub fn constant(t: f64) -> Self {
        Self {
            start: t,
            end: t,
            horizon_steps: 0,
        }
    }

    pub fn at(&self, step: usize) -> f64 {
        if step >= self.horizon_steps {
            return self.end;
        }
        self.start + (self.end - self.start) * step as f64 / self.horizon_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.start > 0.0 && self.end > 0.0 && self.start.is_finite() && self.end.is_finite() {
            Ok(())
        } else {
            Err(Error::config("anneal: temperatures must be finite and > 0"))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// Every step is rewarded with the oracle value of the new state.
    #[default]
    PerStep,
    /// Intermediate steps carry 0; the final step carries the oracle value.
    TerminalOnly,
}

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub next_state: Sequence,
    pub reward: f64,
    pub done: bool,
}

/// Mutation MDP. Each worker owns its own clone; the reward oracle is shared.
#[derive(Clone)]
pub struct MutationEnv {
    wild_type_pool: Vec<Sequence>,
    mask: Vec<bool>,
    max_steps: usize,
    alphabet_size: usize,
    reward: Arc<dyn RewardOracle>,
    pub terminate_on_improvement: bool,
    pub reward_mode: RewardMode,
    episode: Option<Episode>,
}

#[derive(Clone, Debug)]
struct Episode {
    wild_type: Sequence,
    state: Sequence,
    steps: usize,
    baseline: f64,
    done: bool,
}

impl fmt::Debug for MutationEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MutationEnv")
            .field("pool", &self.wild_type_pool.len())
            .field("mask", &self.mask)
            .field("max_steps", &self.max_steps)
            .field("terminate_on_improvement", &self.terminate_on_improvement)
            .field("reward_mode", &self.reward_mode)
            .finish()
    }
}

impl MutationEnv {
    pub fn new(
        wild_type_pool: Vec<Sequence>,
        mask: Vec<bool>,
        max_steps: usize,
        alphabet_size: usize,
        reward: Arc<dyn RewardOracle>,
    ) -> Result<Self> {
        if wild_type_pool.is_empty() {
            return Err(Error::config("env: wild-type pool is empty"));
        }
        if max_steps == 0 {
            return Err(Error::config("env: max_steps must be >= 1"));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::config("env: mask has no mutable position"));
        }
        for s in &wild_type_pool {
            if s.len() != mask.len() {
                return Err(Error::config(format!(
                    "env: pool sequence of length {} does not match mask length {}",
                    s.len(),
                    mask.len()
                )));
            }
            if s.tokens().iter().any(|&t| t >= alphabet_size) {
                return Err(Error::config("env: pool sequence has an out-of-range token"));
            }
        }
        Ok(Self {
            wild_type_pool,
            mask,
            max_steps,
            alphabet_size,
            reward,
            terminate_on_improvement: false,
            reward_mode: RewardMode::PerStep,
            episode: None,
        })
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn sequence_length(&self) -> usize {
        self.mask.len()
    }

    pub fn pool(&self) -> &[Sequence] {
        &self.wild_type_pool
    }

    pub fn oracle(&self) -> &Arc<dyn RewardOracle> {
        &self.reward
    }

    /// Wild type of the current episode.
    pub fn wild_type(&self) -> Option<&Sequence> {
        self.episode.as_ref().map(|e| &e.wild_type)
    }

    pub fn state(&self) -> Option<&Sequence> {
        self.episode.as_ref().map(|e| &e.state)
    }

    /// Reward of the episode's starting sequence.
    pub fn improvement_baseline(&self) -> Option<f64> {
        self.episode.as_ref().map(|e| e.baseline)
    }

    /// Starts an episode from a uniformly drawn pool sequence.
    pub fn reset(&mut self, rng: &mut RngStream) -> Result<Sequence> {
        let start = self.wild_type_pool[rng.below(self.wild_type_pool.len())].clone();
        self.reset_to(start)
    }

    /// Starts an episode from `start`, which becomes the episode's wild type.
    pub fn reset_to(&mut self, start: Sequence) -> Result<Sequence> {
        if start.len() != self.mask.len() {
            return Err(Error::input("start sequence length does not match the mask"));
        }
        let baseline = self.reward.score(&start)?;
        self.episode = Some(Episode {
            wild_type: start.clone(),
            state: start.clone(),
            steps: 0,
            baseline,
            done: false,
        });
        Ok(start)
    }

    /// Whether `action` is legal in the current episode.
    pub fn check_action(&self, action: MutationAction) -> Result<()> {
        let ep = self
            .episode
            .as_ref()
            .ok_or_else(|| Error::action("step called before reset"))?;
        if ep.done {
            return Err(Error::action("episode already finished"));
        }
        if action.position >= self.mask.len() || !self.mask[action.position] {
            return Err(Error::action(format!("position {} is not mutable", action.position)));
        }
        if action.residue >= self.alphabet_size {
            return Err(Error::action(format!("residue {} out of range", action.residue)));
        }
        if action.residue == ep.wild_type.tokens()[action.position] {
            return Err(Error::action(format!(
                "residue {} is the wild-type residue at position {}",
                action.residue, action.position
            )));
        }
        Ok(())
    }

    pub fn step(&mut self, action: MutationAction) -> Result<StepResult> {
        self.check_action(action)?;
        let max_steps = self.max_steps;
        let terminate_on_improvement = self.terminate_on_improvement;
        let mode = self.reward_mode;
        let ep = self.episode.as_mut().expect("checked above");
        ep.state = ep.state.with_substitution(action.position, action.residue);
        ep.steps += 1;
        let value = self.reward.score(&ep.state)?;
        let improved = terminate_on_improvement && value > ep.baseline;
        ep.done = ep.steps >= max_steps || improved;
        let reward = match mode {
            RewardMode::PerStep => value,
            RewardMode::TerminalOnly if ep.done => value,
            RewardMode::TerminalOnly => 0.0,
        };
        Ok(StepResult {
            next_state: ep.state.clone(),
            reward,
            done: ep.done,
        })
    }
}
