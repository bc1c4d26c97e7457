//! Mutation-environment safety and replay properties.

use std::sync::Arc;

use seqlab::envs::{rollout, AnnealSchedule, MutationEnv, RewardMode};
use seqlab::policy::MutationPolicy;
use seqlab::rewards::{NKLandscape, RewardOracle};
use seqlab::rl::LinearValue;
use seqlab::{RngStream, Sequence};

fn make_env(seed: u64, length: usize, alphabet: usize, terminate: bool) -> MutationEnv {
    let mut rng = RngStream::new(seed, 99);
    let pool: Vec<Sequence> = (0..8)
        .map(|_| Sequence::new((0..length).map(|_| rng.below(alphabet)).collect(), alphabet).unwrap())
        .collect();
    let mut mask: Vec<bool> = (0..length).map(|_| rng.uniform() < 0.5).collect();
    mask[rng.below(length)] = true;
    let land: Arc<dyn RewardOracle> = Arc::new(NKLandscape::generate(length, 1, alphabet, seed).unwrap());
    let mut env = MutationEnv::new(pool, mask, 4, alphabet, land).unwrap();
    env.terminate_on_improvement = terminate;
    env
}

#[test]
fn ten_thousand_rollouts_stay_legal() {
    let mut violations = 0;
    let schedule = AnnealSchedule::default();
    for episode in 0..10_000u64 {
        let (length, alphabet) = (6 + (episode % 5) as usize, 3 + (episode % 4) as usize);
        let mut env = make_env(episode / 100, length, alphabet, episode % 2 == 0);
        let mut rng = RngStream::new(episode, 1);
        let policy = MutationPolicy::<f64>::random(length, alphabet, 2.0, &mut rng);
        let value = LinearValue::new(length, alphabet);
        let traj = rollout(&mut env, &policy, &value, &schedule, episode as usize % 1500, &mut rng).unwrap();
        if traj.len() > 4 || traj.is_empty() {
            violations += 1;
        }
        if !env.terminate_on_improvement && traj.len() != 4 {
            violations += 1;
        }
        for a in &traj.actions {
            if !env.mask()[a.position] || a.residue == traj.wild_type.tokens()[a.position] {
                violations += 1;
            }
        }
        for s in traj.states.iter().chain(std::iter::once(&traj.final_state)) {
            if s.diff_positions(&traj.wild_type).iter().any(|&i| !env.mask()[i]) {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn deterministic_policy_with_singleton_pool_is_seed_independent() {
    // one huge position logit and one huge residue logit per row
    let (length, alphabet) = (4, 3);
    let mut pos = vec![0.0; length];
    pos[2] = 500.0;
    let mut residues = vec![0.0; length * alphabet];
    for i in 0..length {
        residues[i * alphabet + 1] = 500.0;
    }
    let policy = MutationPolicy::new(pos, residues, alphabet, 0.5).unwrap();
    let pool = vec![Sequence::new(vec![0, 0, 0, 0], alphabet).unwrap()];
    let land: Arc<dyn RewardOracle> = Arc::new(NKLandscape::generate(length, 1, alphabet, 0).unwrap());
    let mut env = MutationEnv::new(pool, vec![true; length], 4, alphabet, land).unwrap();
    let value = LinearValue::new(length, alphabet);
    let schedule = AnnealSchedule::default();
    let first = rollout(&mut env, &policy, &value, &schedule, 0, &mut RngStream::new(0, 0)).unwrap();
    for seed in 1..10 {
        let t = rollout(&mut env, &policy, &value, &schedule, 0, &mut RngStream::new(seed, 0)).unwrap();
        assert_eq!(t.actions, first.actions);
        assert_eq!(t.final_state, first.final_state);
    }
}

#[test]
fn terminal_only_mode_rewards_only_the_last_step() {
    let mut env = make_env(4, 6, 4, false);
    env.reward_mode = RewardMode::TerminalOnly;
    let mut rng = RngStream::new(5, 0);
    let policy = MutationPolicy::<f64>::random(6, 4, 1.0, &mut rng);
    let value = LinearValue::new(6, 4);
    for _ in 0..50 {
        let t = rollout(&mut env, &policy, &value, &AnnealSchedule::default(), 0, &mut rng).unwrap();
        let (last, init) = t.rewards.split_last().unwrap();
        assert!(init.iter().all(|&r| r == 0.0));
        assert_eq!(*last, env.oracle().score(&t.final_state).unwrap());
    }
}

#[test]
fn identical_streams_give_identical_rollouts() {
    let mut a = make_env(7, 6, 4, true);
    let mut b = a.clone();
    let policy = MutationPolicy::<f64>::random(6, 4, 1.0, &mut RngStream::new(1, 1));
    let value = LinearValue::new(6, 4);
    let s = AnnealSchedule::default();
    for i in 0..20 {
        let ta = rollout(&mut a, &policy, &value, &s, i, &mut RngStream::new(i as u64, 3)).unwrap();
        let tb = rollout(&mut b, &policy, &value, &s, i, &mut RngStream::new(i as u64, 3)).unwrap();
        assert_eq!(ta, tb);
    }
}
