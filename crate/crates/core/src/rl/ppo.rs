use crate::error::{Error, Result};
use crate::policy::{LogProbGrad, SequencePolicy};
use crate::scalar::Real;
use crate::sequence::Sequence;

/// Log-ratio exponent bound used when forming importance ratios.
pub const LOG_RATIO_CLAMP: f64 = 20.0;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PpoDiagnostics<F> {
    /// Clipped surrogate part of the loss (`-mean min(...)`).
    pub policy_loss: F,
    /// Fraction of samples whose ratio left `[1 - eps, 1 + eps]`.
    pub clipped_fraction: F,
    pub mean_ratio: F,
    pub mean_kl: F,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PpoOutput<F> {
    pub loss: F,
    pub grad: Vec<F>,
    pub diagnostics: PpoDiagnostics<F>,
}

/// Importance ratio `exp(clamp(new - old, -20, 20))` and whether it is
/// differentiable (the exponent was not clamped).
pub fn importance_ratio<F: Real>(new_log_prob: F, old_log_prob: F) -> (F, bool) {
    let bound = F::of(LOG_RATIO_CLAMP);
    let delta = new_log_prob - old_log_prob;
    if delta > bound {
        (bound.exp(), false)
    } else if delta < -bound {
        ((-bound).exp(), false)
    } else {
        (delta.exp(), true)
    }
}

/// `-mean_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i)` and its gradient,
/// given new log-probabilities with their gradients.
pub fn clipped_surrogate<F: Real>(
    new: &[LogProbGrad<F>],
    old_log_probs: &[F],
    advantages: &[F],
    clip_eps: F,
) -> Result<(F, Vec<F>, PpoDiagnostics<F>)> {
    let n = new.len();
    if n == 0 || old_log_probs.len() != n || advantages.len() != n {
        return Err(Error::input("PPO needs equal, non-empty sample, log-prob and advantage lists"));
    }
    if advantages.iter().any(|a| !a.is_finite()) {
        return Err(Error::input("advantages must be finite"));
    }
    if old_log_probs.iter().any(|l| !l.is_finite()) {
        return Err(Error::input("old log-probabilities must be finite"));
    }
    let dim = new[0].grad.len();
    let (lo, hi) = (F::one() - clip_eps, F::one() + clip_eps);
    let mut grad = vec![F::zero(); dim];
    let mut objective = F::zero();
    let mut clipped = 0usize;
    let mut ratio_sum = F::zero();
    for ((sample, &old), &adv) in new.iter().zip(old_log_probs).zip(advantages) {
        let (ratio, differentiable) = importance_ratio(sample.log_prob, old);
        ratio_sum = ratio_sum + ratio;
        let clipped_ratio = ratio.max(lo).min(hi);
        if clipped_ratio != ratio {
            clipped += 1;
        }
        let unclipped_obj = ratio * adv;
        let clipped_obj = clipped_ratio * adv;
        if unclipped_obj <= clipped_obj {
            objective = objective + unclipped_obj;
            if differentiable {
                let scale = adv * ratio;
                for (g, &s) in grad.iter_mut().zip(&sample.grad) {
                    *g = *g - scale * s;
                }
            }
        } else {
            // clipped branch is constant in the parameters
            objective = objective + clipped_obj;
        }
    }
    let nf = F::of_usize(n);
    grad.iter_mut().for_each(|g| *g = *g / nf);
    let loss = -objective / nf;
    Ok((
        loss,
        grad,
        PpoDiagnostics {
            policy_loss: loss,
            clipped_fraction: F::of_usize(clipped) / nf,
            mean_ratio: ratio_sum / nf,
            mean_kl: F::zero(),
        },
    ))
}

/// Sequence-level PPO/GRPO loss: each sequence is one action with
/// `log pi(s) = sum_t log pi(a_t)`. Adds `kl_coeff * mean_s KL(pi || anchor)`
/// along each sample's contexts when an anchor is given.
pub fn ppo_loss<F: Real, P: SequencePolicy<F>>(
    policy: &P,
    old_log_probs: &[F],
    sequences: &[Sequence],
    advantages: &[F],
    clip_eps: F,
    kl_coeff: F,
    anchor: Option<&P>,
) -> Result<PpoOutput<F>> {
    let new = sequences
        .iter()
        .map(|s| policy.grad_log_prob(s))
        .collect::<Result<Vec<_>>>()?;
    let (mut loss, mut grad, mut diagnostics) =
        clipped_surrogate(&new, old_log_probs, advantages, clip_eps)?;
    if let Some(anchor) = anchor {
        let nf = F::of_usize(sequences.len());
        let mut kl_total = F::zero();
        for s in sequences {
            let (kl, g) = policy.kl_along(anchor, s)?;
            kl_total = kl_total + kl;
            for (acc, gj) in grad.iter_mut().zip(g) {
                *acc = *acc + kl_coeff * gj / nf;
            }
        }
        diagnostics.mean_kl = kl_total / nf;
        loss = loss + kl_coeff * diagnostics.mean_kl;
    }
    Ok(PpoOutput {
        loss,
        grad,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PositionCategoricalPolicy;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn lpg(log_prob: f64, grad: Vec<f64>) -> LogProbGrad<f64> {
        LogProbGrad { log_prob, grad }
    }

    #[test]
    fn unit_ratio_gives_negative_mean_advantage() {
        let new = vec![lpg(-1.0, vec![1.0]), lpg(-2.0, vec![0.5]), lpg(-0.5, vec![0.0])];
        let adv = [0.5, -1.0, 2.0];
        let (loss, _, d) = clipped_surrogate(&new, &[-1.0, -2.0, -0.5], &adv, 0.2).unwrap();
        assert!((loss + (0.5 - 1.0 + 2.0) / 3.0).abs() < 1e-15);
        assert_eq!(d.clipped_fraction, 0.0);
    }

    #[test]
    fn no_gradient_beyond_the_clip() {
        // ratio = e^0.5 > 1.2 with positive advantage
        let new = vec![lpg(0.0, vec![3.0, -1.0])];
        let (loss, grad, d) = clipped_surrogate(&new, &[-0.5], &[2.0], 0.2).unwrap();
        assert_eq!(grad, vec![0.0, 0.0]);
        assert!((loss + 1.2 * 2.0).abs() < 1e-15);
        assert_eq!(d.clipped_fraction, 1.0);
    }

    #[test]
    fn extreme_log_ratios_are_clamped() {
        let (r, ok) = importance_ratio(500.0_f64, 0.0);
        assert!(r.is_finite() && !ok);
        let (r, ok) = importance_ratio(0.0_f64, 500.0);
        assert!(r > 0.0 && !ok);
    }

    #[test]
    fn rejects_non_finite_advantages() {
        let new = vec![lpg(0.0, vec![0.0])];
        assert!(clipped_surrogate(&new, &[0.0], &[f64::NAN], 0.2).is_err());
    }

    #[test]
    fn kl_term_vanishes_at_the_anchor() {
        let mut rng = RngStream::new(8, 0);
        let p = PositionCategoricalPolicy::<f64>::random(3, 4, 1.0, &mut rng);
        let seqs: Vec<Sequence> = (0..5).map(|_| p.sample(1.0, 1.0, &mut rng).unwrap()).collect();
        let old: Vec<f64> = seqs.iter().map(|s| p.log_prob(s).unwrap()).collect();
        let out = ppo_loss(&p, &old, &seqs, &[1.0; 5], 0.2, 5.0, Some(&p)).unwrap();
        assert!(out.diagnostics.mean_kl.abs() < 1e-15);
        assert!((out.loss + 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn clipped_objective_bounds_unclipped(lp_new in -5.0..0.0f64, lp_old in -5.0..0.0f64, adv in -3.0..3.0f64) {
            let new = vec![lpg(lp_new, vec![0.0])];
            let (loss, _, _) = clipped_surrogate(&new, &[lp_old], &[adv], 0.2).unwrap();
            let (ratio, _) = importance_ratio(lp_new, lp_old);
            // loss is -min(...), so the clipped objective is -loss
            prop_assert!(-loss <= ratio * adv + 1e-12);
        }
    }
}
