//! Analytic gradients against central finite differences.

use seqlab::policy::{MarkovPolicy, MutationPolicy, PositionCategoricalPolicy, SequencePolicy, Temperatures};
use seqlab::rl::{dpo_loss, grpo_advantages, kl_penalty, ppo_loss, LinearValue, PreferencePair};
use seqlab::{RngStream, Sequence};

const STEP: f64 = 1e-5;
const TOL: f64 = 1e-6;
const INSTANCES: u64 = 100;

fn numeric_grad(x: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|j| {
            p[j] = x[j] + STEP;
            let up = f(&p);
            p[j] = x[j] - STEP;
            let down = f(&p);
            p[j] = x[j];
            (up - down) / (2.0 * STEP)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale < 1e-8 {
        diff
    } else {
        diff / scale
    }
}

fn assert_close(analytic: &[f64], numeric: &[f64], what: &str, seed: u64) {
    let e = rel_err(analytic, numeric);
    assert!(e < TOL, "{what} seed {seed}: relative error {e:e}");
}

fn with_params<P: SequencePolicy<f64>>(p: &P, x: &[f64]) -> P {
    let mut q = p.clone();
    q.params_mut().copy_from_slice(x);
    q
}

fn mutation_with(p: &MutationPolicy<f64>, x: &[f64]) -> MutationPolicy<f64> {
    let mut q = p.clone();
    q.params_mut().copy_from_slice(x);
    q
}

fn sample_distinct_pairs<P: SequencePolicy<f64>>(p: &P, n: usize, rng: &mut RngStream) -> Vec<PreferencePair> {
    let mut pairs = Vec::new();
    while pairs.len() < n {
        let w = p.sample(1.0, 1.0, rng).unwrap();
        let l = p.sample(1.0, 1.0, rng).unwrap();
        if let Ok(pair) = PreferencePair::new("ctx", w, l) {
            pairs.push(pair);
        }
    }
    pairs
}

#[test]
fn dpo_gradient_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = RngStream::new(seed, 1);
        let policy = PositionCategoricalPolicy::<f64>::random(3, 4, 1.0, &mut rng);
        let reference = PositionCategoricalPolicy::<f64>::random(3, 4, 1.0, &mut rng);
        let pairs = sample_distinct_pairs(&policy, 3, &mut rng);
        let (beta, lambda) = (0.2 + rng.uniform(), rng.uniform());
        let (_, g) = dpo_loss(&policy, &reference, &pairs, beta, lambda).unwrap();
        let num = numeric_grad(policy.params(), |x| {
            dpo_loss(&with_params(&policy, x), &reference, &pairs, beta, lambda).unwrap().0
        });
        assert_close(&g, &num, "dpo", seed);
    }
}

#[test]
fn dpo_gradient_on_markov_policies() {
    for seed in 0..INSTANCES {
        let mut rng = RngStream::new(seed, 2);
        let policy = MarkovPolicy::<f64>::random(4, 3, 1.0, &mut rng);
        let reference = MarkovPolicy::<f64>::random(4, 3, 1.0, &mut rng);
        let pairs = sample_distinct_pairs(&policy, 2, &mut rng);
        let (_, g) = dpo_loss(&policy, &reference, &pairs, 0.5, 1.0).unwrap();
        let num = numeric_grad(policy.params(), |x| {
            dpo_loss(&with_params(&policy, x), &reference, &pairs, 0.5, 1.0).unwrap().0
        });
        assert_close(&g, &num, "dpo/markov", seed);
    }
}

fn ppo_instance(seed: u64, grpo: bool) {
    let mut rng = RngStream::new(seed, 3);
    let policy = PositionCategoricalPolicy::<f64>::random(3, 4, 1.0, &mut rng);
    let anchor = PositionCategoricalPolicy::<f64>::random(3, 4, 1.0, &mut rng);
    let seqs: Vec<Sequence> = (0..8).map(|_| policy.sample(1.0, 1.0, &mut rng).unwrap()).collect();
    let old: Vec<f64> = seqs
        .iter()
        .map(|s| policy.log_prob(s).unwrap() + 0.3 * rng.normal())
        .collect();
    let adv: Vec<f64> = if grpo {
        let rewards: Vec<f64> = (0..8).map(|_| rng.normal()).collect();
        rewards
            .chunks(4)
            .flat_map(|g| grpo_advantages(g, seed % 2 == 0).unwrap())
            .collect()
    } else {
        (0..8).map(|_| rng.normal()).collect()
    };
    let kl = rng.uniform();
    let out = ppo_loss(&policy, &old, &seqs, &adv, 0.2, kl, Some(&anchor)).unwrap();
    let num = numeric_grad(policy.params(), |x| {
        ppo_loss(&with_params(&policy, x), &old, &seqs, &adv, 0.2, kl, Some(&anchor))
            .unwrap()
            .loss
    });
    assert_close(&out.grad, &num, if grpo { "grpo" } else { "ppo" }, seed);
}

#[test]
fn ppo_gradient_matches_finite_differences() {
    for seed in 0..INSTANCES {
        ppo_instance(seed, false);
    }
}

#[test]
fn grpo_gradient_matches_finite_differences() {
    for seed in 0..INSTANCES {
        ppo_instance(seed, true);
    }
}

#[test]
fn value_gradient_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = RngStream::new(seed, 4);
        let params: Vec<f64> = (0..1 + 3 * 4).map(|_| rng.normal()).collect();
        let v = LinearValue::<f64>::from_params(3, 4, params).unwrap();
        let states: Vec<Vec<usize>> = (0..6).map(|_| (0..3).map(|_| rng.below(4)).collect()).collect();
        let refs: Vec<&[usize]> = states.iter().map(Vec::as_slice).collect();
        let targets: Vec<f64> = (0..6).map(|_| 2.0 * rng.normal()).collect();
        let (_, g) = v.value_loss(&refs, &targets).unwrap();
        let num = numeric_grad(v.params(), |x| {
            LinearValue::from_params(3, 4, x.to_vec())
                .unwrap()
                .value_loss(&refs, &targets)
                .unwrap()
                .0
        });
        assert_close(&g, &num, "value", seed);
    }
}

#[test]
fn kl_gradient_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = RngStream::new(seed, 5);
        let policy = MutationPolicy::<f64>::random(5, 4, 1.0, &mut rng);
        let reference = MutationPolicy::<f64>::random(5, 4, 1.0, &mut rng);
        let sites: Vec<usize> = (0..4).map(|_| rng.below(5)).collect();
        let k = kl_penalty(&policy, &reference, &sites, 10.0).unwrap();
        assert!(!k.clamped);
        let num = numeric_grad(policy.params(), |x| {
            kl_penalty(&mutation_with(&policy, x), &reference, &sites, 10.0).unwrap().value
        });
        assert_close(&k.grad, &num, "kl", seed);
    }
}

#[test]
fn entropy_gradient_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = RngStream::new(seed, 6);
        let policy = MutationPolicy::<f64>::random(6, 3, 1.0, &mut rng);
        let mut mask: Vec<bool> = (0..6).map(|_| rng.uniform() < 0.6).collect();
        mask[rng.below(6)] = true;
        let tau = 0.5 + rng.uniform();
        let (_, g) = policy.position_entropy(&mask, tau).unwrap();
        let num = numeric_grad(policy.params(), |x| {
            mutation_with(&policy, x).position_entropy(&mask, tau).unwrap().0
        });
        assert_close(&g, &num, "entropy", seed);
    }
}

#[test]
fn mutation_log_prob_gradient_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = RngStream::new(seed, 7);
        let policy = MutationPolicy::<f64>::random(5, 4, 1.0, &mut rng);
        let wt = Sequence::new((0..5).map(|_| rng.below(4)).collect(), 4).unwrap();
        let mask = vec![true, false, true, true, true];
        let temps = Temperatures { residue: 0.5 + rng.uniform(), position: 0.5 + rng.uniform() };
        let (action, _) = policy.sample_action(&wt, &mask, temps, &mut rng).unwrap();
        let g = policy.grad_mutation_log_prob(&wt, action, &mask, temps).unwrap();
        let num = numeric_grad(policy.params(), |x| {
            mutation_with(&policy, x).mutation_log_prob(&wt, action, &mask, temps).unwrap()
        });
        assert_close(&g.grad, &num, "mutation log-prob", seed);
    }
}

#[test]
fn score_function_matches_finite_differences() {
    for seed in 0..INSTANCES {
        let mut rng = RngStream::new(seed, 8);
        let p = MarkovPolicy::<f64>::random(4, 3, 1.0, &mut rng);
        let s = p.sample(1.0, 1.0, &mut rng).unwrap();
        let g = p.grad_log_prob(&s).unwrap();
        let num = numeric_grad(p.params(), |x| with_params(&p, x).log_prob(&s).unwrap());
        assert_close(&g.grad, &num, "markov log-prob", seed);
        let q = PositionCategoricalPolicy::<f64>::random(4, 3, 1.0, &mut rng);
        let g = q.grad_log_prob(&s).unwrap();
        let num = numeric_grad(q.params(), |x| with_params(&q, x).log_prob(&s).unwrap());
        assert_close(&g.grad, &num, "position log-prob", seed);
    }
}
