use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{AnnealSchedule, MutationEnv};
use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::policy::{MutationAction, MutationPolicy, Temperatures};
use crate::rl::LinearValue;
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::sequence::Sequence;

/// One episode. `states[t]` is the state *before* `actions[t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<F> {
    pub wild_type: Sequence,
    pub states: Vec<Sequence>,
    pub actions: Vec<MutationAction>,
    pub log_probs_old: Vec<F>,
    pub rewards: Vec<F>,
    pub values: Vec<F>,
    /// Empty until advantages are estimated.
    pub advantages: Vec<F>,
    pub returns: Vec<F>,
    pub final_state: Sequence,
    pub done: bool,
    /// Temperatures the actions were sampled (and scored) at.
    pub temperatures: Temperatures<F>,
}

impl<F: Real> Trajectory<F> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn total_reward(&self) -> F {
        self.rewards.iter().copied().sum()
    }
}

/// Resets `env` from its pool and plays one episode with `policy`.
pub fn rollout<F: Real>(
    env: &mut MutationEnv,
    policy: &MutationPolicy<F>,
    value: &LinearValue<F>,
    schedule: &AnnealSchedule,
    global_step: usize,
    rng: &mut RngStream,
) -> Result<Trajectory<F>> {
    let start = env.reset(rng)?;
    play(env, start, policy, value, schedule, global_step, rng)
}

/// Plays one episode from a fixed `start`.
pub fn rollout_from<F: Real>(
    env: &mut MutationEnv,
    start: Sequence,
    policy: &MutationPolicy<F>,
    value: &LinearValue<F>,
    schedule: &AnnealSchedule,
    global_step: usize,
    rng: &mut RngStream,
) -> Result<Trajectory<F>> {
    let start = env.reset_to(start)?;
    play(env, start, policy, value, schedule, global_step, rng)
}

fn play<F: Real>(
    env: &mut MutationEnv,
    start: Sequence,
    policy: &MutationPolicy<F>,
    value: &LinearValue<F>,
    schedule: &AnnealSchedule,
    global_step: usize,
    rng: &mut RngStream,
) -> Result<Trajectory<F>> {
    if policy.length() != env.sequence_length() || policy.alphabet_size() != env.alphabet_size() {
        return Err(Error::input("policy and environment dimensions disagree"));
    }
    let temps = Temperatures::uniform(F::of(schedule.at(global_step)));
    let mut traj = Trajectory {
        wild_type: start.clone(),
        states: Vec::new(),
        actions: Vec::new(),
        log_probs_old: Vec::new(),
        rewards: Vec::new(),
        values: Vec::new(),
        advantages: Vec::new(),
        returns: Vec::new(),
        final_state: start.clone(),
        done: false,
        temperatures: temps,
    };
    let mut state = start;
    loop {
        let (action, lp) = policy.sample_action(&traj.wild_type, env.mask(), temps, rng)?;
        traj.values.push(value.predict(state.tokens())?);
        let step = env.step(action)?;
        traj.states.push(state);
        traj.actions.push(action);
        traj.log_probs_old.push(lp);
        traj.rewards.push(F::of(step.reward));
        state = step.next_state;
        if step.done {
            break;
        }
    }
    traj.final_state = state;
    traj.done = true;
    Ok(traj)
}

/// One line of the trajectory log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub episode: u64,
    pub step: usize,
    pub state: String,
    pub action: MutationAction,
    pub reward: f64,
    pub log_prob: f64,
}

/// Writes one JSON record per step.
pub fn write_trajectory_log<F: Real, W: Write>(
    mut out: W,
    episodes: &[(u64, &Trajectory<F>)],
    alphabet: &Alphabet,
) -> Result<()> {
    for &(episode, traj) in episodes {
        for t in 0..traj.len() {
            let rec = TrajectoryRecord {
                episode,
                step: t,
                state: traj.states[t].to_text(alphabet),
                action: traj.actions[t],
                reward: traj.rewards[t].as_f64(),
                log_prob: traj.log_probs_old[t].as_f64(),
            };
            let line = serde_json::to_string(&rec).map_err(|e| Error::input(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| Error::io("<trajectory log>", e))?;
        }
    }
    Ok(())
}
