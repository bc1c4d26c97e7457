//! Advantage estimators and loss identities.

use proptest::prelude::*;
use seqlab::policy::{PositionCategoricalPolicy, SequencePolicy};
use seqlab::rl::{clipped_surrogate, dpo_loss, gae, grpo_advantages, importance_ratio, PreferencePair};
use seqlab::policy::LogProbGrad;
use seqlab::{RngStream, Sequence};

#[test]
fn grpo_groups_sum_to_zero() {
    let mut rng = RngStream::new(1, 0);
    for i in 0..10_000 {
        let m = 2 + rng.below(15);
        let rewards: Vec<f64> = (0..m)
            .map(|_| if rng.uniform() < 0.3 { rng.below(3) as f64 } else { 10.0 * rng.normal() })
            .collect();
        for rank in [false, true] {
            let adv = grpo_advantages(&rewards, rank).unwrap();
            let s: f64 = adv.iter().sum();
            assert!(s.abs() < 1e-9, "group {i}: {s}");
        }
    }
}

#[test]
fn grpo_examples() {
    assert_eq!(grpo_advantages(&[1.0, 2.0, 3.0], false).unwrap(), vec![-1.0, 0.0, 1.0]);
    assert_eq!(grpo_advantages(&[5.0, 5.0, 5.0], false).unwrap(), vec![0.0; 3]);
    assert_eq!(grpo_advantages(&[5.0, 5.0, 5.0], true).unwrap(), vec![0.0; 3]);
    // ranks 4, 2, 2, 2 map to 1, -1/3, -1/3, -1/3 with mean 0
    let adv = grpo_advantages(&[10.0, 1.0, 1.0, 1.0], true).unwrap();
    let want = [1.0_f64, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
    for (a, w) in adv.iter().zip(want) {
        assert!((a - w).abs() < 1e-15);
    }
    assert!(grpo_advantages(&[1.0], false).is_err());
}

#[test]
fn gae_limits_exhaustively() {
    let mut rng = RngStream::new(2, 0);
    for t_len in 1..=6 {
        for _ in 0..200 {
            let r: Vec<f64> = (0..t_len).map(|_| rng.normal()).collect();
            let v: Vec<f64> = (0..t_len).map(|_| rng.normal()).collect();
            let boot = rng.normal();
            let gamma = rng.uniform();
            // lambda = 0: one-step TD errors
            let (a, ret) = gae(&r, &v, boot, gamma, 0.0).unwrap();
            for t in 0..t_len {
                let next = if t + 1 < t_len { v[t + 1] } else { boot };
                assert_eq!(a[t], r[t] + gamma * next - v[t]);
                assert_eq!(ret[t], a[t] + v[t]);
            }
            // gamma = 0: r - V exactly
            let (a, _) = gae(&r, &v, boot, 0.0, rng.uniform()).unwrap();
            for t in 0..t_len {
                assert_eq!(a[t], r[t] - v[t]);
            }
            // gamma = lambda = 1, zero values: suffix sums
            let (a, _) = gae(&r, &vec![0.0; t_len], 0.0, 1.0, 1.0).unwrap();
            for t in 0..t_len {
                let suffix: f64 = r[t..].iter().sum();
                assert!((a[t] - suffix).abs() < 1e-12);
            }
        }
    }
    assert!(gae(&[1.0, 2.0], &[0.0], 0.0, 0.9, 0.9).is_err());
}

#[test]
fn dpo_at_reference_is_ln2_per_pair() {
    let mut rng = RngStream::new(3, 0);
    for _ in 0..100 {
        let p = PositionCategoricalPolicy::<f64>::random(4, 5, 2.0, &mut rng);
        let mut pairs = Vec::new();
        while pairs.len() < 5 {
            let w = p.sample(1.0, 1.0, &mut rng).unwrap();
            let l = p.sample(1.0, 1.0, &mut rng).unwrap();
            if let Ok(pair) = PreferencePair::new("c", w, l) {
                pairs.push(pair);
            }
        }
        let (loss, _) = dpo_loss(&p, &p, &pairs, 0.5, 0.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }
}

#[test]
fn regularized_dpo_adds_winner_nll() {
    let p = PositionCategoricalPolicy::<f64>::uniform(2, 4);
    let w = Sequence::new(vec![0, 1], 4).unwrap();
    let l = Sequence::new(vec![2, 3], 4).unwrap();
    let pairs = vec![PreferencePair::new("c", w.clone(), l).unwrap()];
    let (loss, _) = dpo_loss(&p, &p, &pairs, 0.5, 1.0).unwrap();
    let want = std::f64::consts::LN_2 - p.log_prob(&w).unwrap();
    assert!((loss - want).abs() < 1e-12);
}

proptest! {
    #[test]
    fn clipped_objective_is_pointwise_lower_bound(
        lp_new in proptest::collection::vec(-6.0..0.0f64, 1..10),
        shift in proptest::collection::vec(-1.0..1.0f64, 10),
        adv in proptest::collection::vec(-3.0..3.0f64, 10),
        eps in 0.05..0.5f64,
    ) {
        let n = lp_new.len();
        for i in 0..n {
            let new = vec![LogProbGrad { log_prob: lp_new[i], grad: vec![0.0] }];
            let old = [lp_new[i] + shift[i]];
            let (loss, _, _) = clipped_surrogate(&new, &old, &adv[i..=i], eps).unwrap();
            let (ratio, _) = importance_ratio(lp_new[i], old[0]);
            prop_assert!(-loss <= ratio * adv[i] + 1e-12);
        }
    }
}
