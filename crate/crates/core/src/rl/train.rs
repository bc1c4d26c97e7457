use rayon::prelude::*;

use super::config::{Algorithm, KlAnchor, RLConfig};
use super::dpo::{dpo_loss, PreferencePair};
use super::gae::gae;
use super::grpo::grpo_advantages;
use super::optim::Optimizer;
use super::ppo::{clipped_surrogate, ppo_loss};
use super::regularizers::{combined_loss, entropy_weight, kl_penalty, LinearValue};
use super::report::{StepRecord, TrainingReport};
use crate::envs::{rollout, rollout_from, AnnealSchedule, MutationEnv, Trajectory};
use crate::error::{Error, Result};
use crate::policy::{MutationPolicy, SequencePolicy};
use crate::rewards::RewardOracle;
use crate::rng::RngStream;
use crate::scalar::{mean, standardize, Real};
use crate::sequence::Sequence;

/// Stabilizer added to the standard deviation when standardizing.
pub const RETURNS_EPS: f64 = 1e-8;

/// Draws `n` sequences in parallel, sample `i` from `rng.fork(i)`, and scores them.
fn sample_scored<F: Real, P: SequencePolicy<F>>(
    policy: &P,
    reward: &dyn RewardOracle,
    n: usize,
    cfg: &RLConfig,
    rng: &RngStream,
) -> Result<(Vec<Sequence>, Vec<f64>)> {
    let (t, p) = (F::of(cfg.temperature), F::of(cfg.top_p));
    let pairs = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut r = rng.fork(i as u64);
            let s = policy.sample(t, p, &mut r)?;
            let v = reward.score(&s)?;
            if !v.is_finite() {
                return Err(Error::input("reward oracle returned a non-finite value"));
            }
            Ok((s, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Ranks `sequences` by reward (stable, descending) and pairs the `i`-th best of
/// the top `quantile` with the `i`-th best of the bottom `quantile`. Pairs with
/// equal rewards or identical sequences are dropped.
pub fn build_preference_pairs(
    context_id: &str,
    sequences: &[Sequence],
    rewards: &[f64],
    quantile: f64,
) -> Vec<PreferencePair> {
    let n = sequences.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| rewards[b].total_cmp(&rewards[a]));
    let m = ((n as f64 * quantile).floor() as usize).min(n / 2);
    let bottom = &order[n - m..];
    order[..m]
        .iter()
        .zip(bottom)
        .filter(|&(&w, &l)| rewards[w] > rewards[l] && sequences[w] != sequences[l])
        .map(|(&w, &l)| PreferencePair {
            context_id: context_id.to_string(),
            winner: sequences[w].clone(),
            loser: sequences[l].clone(),
        })
        .collect()
}

fn check_update<F: Real>(step: usize, loss: F, grad: &[F]) -> Result<()> {
    if !loss.is_finite() {
        return Err(Error::Diverged {
            step,
            reason: format!("non-finite loss {loss}"),
        });
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Diverged {
            step,
            reason: "non-finite gradient".into(),
        });
    }
    Ok(())
}

fn apply<F: Real>(step: usize, opt: &mut Optimizer<F>, params: &mut [F], grad: &[F]) -> Result<()> {
    opt.step(params, grad)?;
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Diverged {
            step,
            reason: "non-finite parameters after update".into(),
        });
    }
    Ok(())
}

fn normalize_if<F: Real>(xs: Vec<F>, on: bool) -> Vec<F> {
    if on && xs.len() > 1 {
        standardize(&xs, F::of(RETURNS_EPS))
    } else {
        xs
    }
}

/// Sequence-level fine-tuning of a generative policy against `reward`.
///
/// Every step samples from `rng.fork(step)`, so results do not depend on the
/// number of worker threads. On divergence the policy is restored to the last
/// parameters that produced a finite update and [`Error::Diverged`] is returned.
pub fn train_sequence<F: Real, P: SequencePolicy<F>>(
    policy: &mut P,
    algorithm: Algorithm,
    reward: &dyn RewardOracle,
    cfg: &RLConfig,
    steps: usize,
    rng: &RngStream,
) -> Result<TrainingReport> {
    cfg.validate()?;
    let reference = policy.clone();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.grad_clip, policy.num_params());
    let mut value = LinearValue::<F>::constant();
    let mut value_opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, 0.0, value.params().len());
    let mut report = TrainingReport::new(algorithm);
    let mut dpo_round: Option<(P, Vec<PreferencePair>, f64)> = None;

    for step in 0..steps {
        let last_good = policy.params().to_vec();
        let step_rng = rng.fork(step as u64);
        let result = match algorithm {
            Algorithm::Dpo => {
                if step % cfg.dpo_round_steps == 0 {
                    let (seqs, rewards) =
                        sample_scored(policy, reward, cfg.dpo_samples_per_round, cfg, &step_rng)?;
                    let pairs = build_preference_pairs("", &seqs, &rewards, cfg.dpo_quantile);
                    dpo_round = Some((policy.clone(), pairs, mean(&rewards)));
                }
                let (round_ref, pairs, mean_reward) = dpo_round.as_ref().expect("round initialized");
                dpo_step(policy, &reference, round_ref, pairs, *mean_reward, cfg, step, &mut opt)
            }
            Algorithm::Ppo | Algorithm::Grpo => pg_sequence_step(
                policy,
                algorithm,
                &reference,
                reward,
                cfg,
                step,
                &step_rng,
                &mut opt,
                &mut value,
                &mut value_opt,
            ),
        };
        match result {
            Ok(record) => report.records.push(record),
            Err(e) => {
                policy.params_mut().copy_from_slice(&last_good);
                return Err(e);
            }
        }
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn dpo_step<F: Real, P: SequencePolicy<F>>(
    policy: &mut P,
    initial: &P,
    round_ref: &P,
    pairs: &[PreferencePair],
    mean_reward: f64,
    cfg: &RLConfig,
    step: usize,
    opt: &mut Optimizer<F>,
) -> Result<StepRecord> {
    let mut record = StepRecord {
        step,
        mean_reward,
        ..StepRecord::default()
    };
    if pairs.is_empty() {
        // nothing to rank this round
        return Ok(record);
    }
    let (loss, grad) = dpo_loss(policy, round_ref, pairs, F::of(cfg.dpo_beta), F::of(cfg.dpo_reg_lambda))?;
    check_update(step, loss, &grad)?;
    let mut kl = F::zero();
    let mut nll = F::zero();
    for p in pairs {
        kl = kl + policy.kl_along(initial, &p.winner)?.0;
        nll = nll - policy.log_prob(&p.winner)?;
    }
    let n = F::of_usize(pairs.len());
    record.loss = loss.as_f64();
    record.policy_loss = loss.as_f64();
    record.kl = (kl / n).as_f64();
    record.entropy = (nll / n).as_f64();
    apply(step, opt, policy.params_mut(), &grad)?;
    Ok(record)
}

#[allow(clippy::too_many_arguments)]
fn pg_sequence_step<F: Real, P: SequencePolicy<F>>(
    policy: &mut P,
    algorithm: Algorithm,
    reference: &P,
    reward: &dyn RewardOracle,
    cfg: &RLConfig,
    step: usize,
    step_rng: &RngStream,
    opt: &mut Optimizer<F>,
    value: &mut LinearValue<F>,
    value_opt: &mut Optimizer<F>,
) -> Result<StepRecord> {
    let n = match algorithm {
        Algorithm::Grpo => (cfg.batch_size / cfg.group_size).max(1) * cfg.group_size,
        _ => cfg.batch_size,
    };
    let (seqs, rewards) = sample_scored(policy, reward, n, cfg, step_rng)?;
    let old: Vec<F> = seqs.iter().map(|s| policy.log_prob(s)).collect::<Result<_>>()?;
    let rewards_f: Vec<F> = rewards.iter().map(|&r| F::of(r)).collect();

    let mut value_loss = F::zero();
    let advantages = match algorithm {
        Algorithm::Grpo => {
            let mut adv = Vec::with_capacity(n);
            for group in rewards_f.chunks(cfg.group_size) {
                adv.extend(grpo_advantages(group, cfg.rank_normalize)?);
            }
            adv
        }
        _ => {
            let baseline = value.predict(&[])?;
            let states: Vec<&[usize]> = vec![&[]; n];
            let (vl, vgrad) = value.value_loss(&states, &rewards_f)?;
            check_update(step, vl, &vgrad)?;
            value_loss = vl;
            let vgrad: Vec<F> = vgrad.into_iter().map(|g| g * F::of(cfg.value_coeff)).collect();
            value_opt.step(value.params_mut(), &vgrad)?;
            rewards_f.iter().map(|&r| r - baseline).collect()
        }
    };
    let advantages = normalize_if(advantages, cfg.normalize_advantages);
    let old_policy = policy.clone();
    let anchor = match cfg.kl_anchor {
        KlAnchor::Reference => reference,
        KlAnchor::Old => &old_policy,
    };
    let anchor = (cfg.kl_coeff > 0.0).then_some(anchor);

    let mut record = StepRecord {
        step,
        mean_reward: mean(&rewards),
        entropy: -(mean(&old)).as_f64(),
        ..StepRecord::default()
    };
    for epoch in 0..cfg.ppo_epochs {
        let out = ppo_loss(
            policy,
            &old,
            &seqs,
            &advantages,
            F::of(cfg.clip_eps),
            F::of(cfg.kl_coeff),
            anchor,
        )?;
        check_update(step, out.loss, &out.grad)?;
        if epoch == 0 {
            record.policy_loss = out.diagnostics.policy_loss.as_f64();
            record.kl = out.diagnostics.mean_kl.as_f64();
            record.value_loss = value_loss.as_f64();
            record.loss = (out.loss + F::of(cfg.value_coeff) * value_loss).as_f64();
        }
        record.clipped_fraction = out.diagnostics.clipped_fraction.as_f64();
        apply(step, opt, policy.params_mut(), &out.grad)?;
    }
    Ok(record)
}

/// Step-level fine-tuning of a mutation policy in `env` (PPO with GAE and a
/// linear value function, or GRPO over groups of episodes sharing a start).
pub fn train_mutation<F: Real>(
    policy: &mut MutationPolicy<F>,
    algorithm: Algorithm,
    env: &MutationEnv,
    schedule: &AnnealSchedule,
    cfg: &RLConfig,
    steps: usize,
    rng: &RngStream,
) -> Result<TrainingReport> {
    cfg.validate()?;
    schedule.validate()?;
    if algorithm == Algorithm::Dpo {
        return Err(Error::config("rl.algorithm: mutation training supports ppo and grpo"));
    }
    if policy.length() != env.sequence_length() || policy.alphabet_size() != env.alphabet_size() {
        return Err(Error::config("policy and environment dimensions disagree"));
    }
    let reference = policy.clone();
    let mut value = LinearValue::<F>::new(policy.length(), policy.alphabet_size());
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.grad_clip, policy.num_params());
    let mut value_opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.grad_clip, value.params().len());
    let mut report = TrainingReport::new(algorithm);

    for step in 0..steps {
        let last_good = policy.params().to_vec();
        let result = mutation_step(
            policy,
            algorithm,
            &reference,
            env,
            schedule,
            cfg,
            step,
            &rng.fork(step as u64),
            &mut opt,
            &mut value,
            &mut value_opt,
        );
        match result {
            Ok(record) => report.records.push(record),
            Err(e) => {
                policy.params_mut().copy_from_slice(&last_good);
                return Err(e);
            }
        }
    }
    Ok(report)
}

fn collect_episodes<F: Real>(
    policy: &MutationPolicy<F>,
    algorithm: Algorithm,
    env: &MutationEnv,
    value: &LinearValue<F>,
    schedule: &AnnealSchedule,
    cfg: &RLConfig,
    step: usize,
    step_rng: &RngStream,
) -> Result<Vec<Vec<Trajectory<F>>>> {
    match algorithm {
        Algorithm::Grpo => {
            let groups = (cfg.batch_size / cfg.group_size).max(1);
            (0..groups)
                .into_par_iter()
                .map(|g| {
                    let group_rng = step_rng.fork(g as u64);
                    let mut e = env.clone();
                    let start = e.reset(&mut group_rng.fork(u64::MAX))?;
                    (0..cfg.group_size)
                        .map(|i| {
                            let mut r = group_rng.fork(i as u64);
                            rollout_from(&mut e, start.clone(), policy, value, schedule, step, &mut r)
                        })
                        .collect()
                })
                .collect()
        }
        _ => (0..cfg.batch_size)
            .into_par_iter()
            .map(|i| {
                let mut e = env.clone();
                let mut r = step_rng.fork(i as u64);
                Ok(vec![rollout(&mut e, policy, value, schedule, step, &mut r)?])
            })
            .collect(),
    }
}

#[allow(clippy::too_many_arguments)]
fn mutation_step<F: Real>(
    policy: &mut MutationPolicy<F>,
    algorithm: Algorithm,
    reference: &MutationPolicy<F>,
    env: &MutationEnv,
    schedule: &AnnealSchedule,
    cfg: &RLConfig,
    step: usize,
    step_rng: &RngStream,
    opt: &mut Optimizer<F>,
    value: &mut LinearValue<F>,
    value_opt: &mut Optimizer<F>,
) -> Result<StepRecord> {
    let mut groups = collect_episodes(policy, algorithm, env, value, schedule, cfg, step, step_rng)?;
    let (gamma, lam) = (F::of(cfg.gamma), F::of(cfg.gae_lambda));
    for group in &mut groups {
        match algorithm {
            Algorithm::Grpo => {
                let totals: Vec<F> = group.iter().map(|t| t.total_reward()).collect();
                let adv = grpo_advantages(&totals, cfg.rank_normalize)?;
                for (t, a) in group.iter_mut().zip(adv) {
                    t.advantages = vec![a; t.len()];
                    t.returns = vec![t.total_reward(); t.len()];
                }
            }
            _ => {
                for t in group.iter_mut() {
                    let (a, r) = gae(&t.rewards, &t.values, F::zero(), gamma, lam)?;
                    t.advantages = a;
                    t.returns = r;
                }
            }
        }
    }
    let episodes: Vec<&Trajectory<F>> = groups.iter().flatten().collect();
    let mean_reward = mean(
        &episodes
            .iter()
            .map(|t| t.rewards.last().copied().unwrap_or(F::zero()).as_f64())
            .collect::<Vec<_>>(),
    );

    let mut states: Vec<&[usize]> = Vec::new();
    let mut wild_types = Vec::new();
    let mut actions = Vec::new();
    let mut temps = Vec::new();
    let mut old = Vec::new();
    let mut advantages = Vec::new();
    let mut returns = Vec::new();
    for t in &episodes {
        for i in 0..t.len() {
            states.push(t.states[i].tokens());
            wild_types.push(&t.wild_type);
            actions.push(t.actions[i]);
            temps.push(t.temperatures);
            old.push(t.log_probs_old[i]);
            advantages.push(t.advantages[i]);
            returns.push(t.returns[i]);
        }
    }
    let advantages = normalize_if(advantages, cfg.normalize_advantages);
    let returns = normalize_if(returns, cfg.standardize_returns);
    let sites: Vec<usize> = actions.iter().map(|a| a.position).collect();
    let position_temp = F::of(schedule.at(step));
    let old_policy = policy.clone();
    let anchor = match cfg.kl_anchor {
        KlAnchor::Reference => reference,
        KlAnchor::Old => &old_policy,
    };
    let use_value = algorithm == Algorithm::Ppo;
    let (alpha, beta) = (F::of(cfg.kl_coeff), F::of(cfg.value_coeff));
    let ew = entropy_weight::<F>(cfg);

    let mut record = StepRecord {
        step,
        mean_reward,
        ..StepRecord::default()
    };
    for epoch in 0..cfg.ppo_epochs {
        let new = (0..actions.len())
            .map(|i| policy.grad_mutation_log_prob(wild_types[i], actions[i], env.mask(), temps[i]))
            .collect::<Result<Vec<_>>>()?;
        let (policy_loss, mut grad, diag) =
            clipped_surrogate(&new, &old, &advantages, F::of(cfg.clip_eps))?;
        let kl = kl_penalty(policy, anchor, &sites, F::of(cfg.kl_clamp))?;
        let (entropy, ent_grad) = policy.position_entropy(env.mask(), position_temp)?;
        for j in 0..grad.len() {
            grad[j] = grad[j] + alpha * kl.grad[j] + ew * ent_grad[j];
        }
        let (value_loss, value_grad) = if use_value {
            value.value_loss(&states, &returns)?
        } else {
            (F::zero(), vec![F::zero(); value.params().len()])
        };
        let loss = combined_loss(policy_loss, kl.value, value_loss, entropy, cfg);
        check_update(step, loss, &grad)?;
        check_update(step, value_loss, &value_grad)?;
        if epoch == 0 {
            record.loss = loss.as_f64();
            record.policy_loss = policy_loss.as_f64();
            record.kl = kl.value.as_f64();
            record.value_loss = value_loss.as_f64();
            record.entropy = entropy.as_f64();
        }
        record.clipped_fraction = diag.clipped_fraction.as_f64();
        apply(step, opt, policy.params_mut(), &grad)?;
        if use_value {
            let vg: Vec<F> = value_grad.into_iter().map(|g| beta * g).collect();
            value_opt.step(value.params_mut(), &vg)?;
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PositionCategoricalPolicy;

    struct Bandit;
    impl RewardOracle for Bandit {
        fn score(&self, seq: &Sequence) -> Result<f64> {
            Ok(if seq.tokens()[0] == 1 { 1.0 } else { 0.0 })
        }
    }

    #[test]
    fn zero_learning_rate_keeps_parameters() {
        let cfg = RLConfig {
            learning_rate: 0.0,
            batch_size: 8,
            ..RLConfig::default()
        };
        let mut rng0 = RngStream::new(1, 0);
        for algo in [Algorithm::Dpo, Algorithm::Ppo, Algorithm::Grpo] {
            let mut p = PositionCategoricalPolicy::<f64>::random(2, 3, 1.0, &mut rng0);
            let before = p.clone();
            train_sequence(&mut p, algo, &Bandit, &cfg, 5, &RngStream::new(3, 0)).unwrap();
            assert_eq!(p, before);
        }
    }

    #[test]
    fn ppo_solves_a_bandit() {
        let cfg = RLConfig {
            kl_coeff: 0.0,
            batch_size: 16,
            learning_rate: 0.05,
            ..RLConfig::default()
        };
        let mut p = PositionCategoricalPolicy::<f64>::uniform(1, 3);
        let report = train_sequence(&mut p, Algorithm::Ppo, &Bandit, &cfg, 100, &RngStream::new(5, 0)).unwrap();
        assert_eq!(report.records.len(), 100);
        assert_eq!(crate::dist::argmax(p.row(0)), 1);
    }

    #[test]
    fn constant_group_rewards_leave_policy_fixed_without_regularizers() {
        struct Flat;
        impl RewardOracle for Flat {
            fn score(&self, _: &Sequence) -> Result<f64> {
                Ok(3.0)
            }
        }
        let cfg = RLConfig {
            kl_coeff: 0.0,
            batch_size: 16,
            ..RLConfig::default()
        };
        let mut p = PositionCategoricalPolicy::<f64>::random(3, 4, 1.0, &mut RngStream::new(0, 1));
        let before = p.clone();
        train_sequence(&mut p, Algorithm::Grpo, &Flat, &cfg, 3, &RngStream::new(2, 0)).unwrap();
        assert_eq!(p, before);
    }

    #[test]
    fn preference_pairs_pair_top_with_bottom() {
        let seqs: Vec<Sequence> = (0..8).map(|i| Sequence::new(vec![i], 8).unwrap()).collect();
        let rewards: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let pairs = build_preference_pairs("c", &seqs, &rewards, 0.25);
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].winner.tokens(), &[7]);
        assert_eq!(pairs[0].loser.tokens(), &[1]);
        assert_eq!(pairs[1].winner.tokens(), &[6]);
        assert_eq!(pairs[1].loser.tokens(), &[0]);
    }

    #[test]
    fn divergence_restores_last_good_parameters() {
        struct Exploding;
        impl RewardOracle for Exploding {
            fn score(&self, seq: &Sequence) -> Result<f64> {
                Ok(if seq.tokens()[0] == 0 { f64::MAX } else { -f64::MAX })
            }
        }
        let cfg = RLConfig {
            normalize_advantages: false,
            optimizer: super::super::config::OptimizerKind::Sgd,
            learning_rate: 1e300,
            kl_coeff: 0.0,
            batch_size: 8,
            ..RLConfig::default()
        };
        let mut p = PositionCategoricalPolicy::<f64>::uniform(1, 2);
        let err = train_sequence(&mut p, Algorithm::Ppo, &Exploding, &cfg, 10, &RngStream::new(0, 0));
        assert!(matches!(err, Err(Error::Diverged { .. })));
        assert!(p.params().iter().all(|x| x.is_finite()));
    }
}
