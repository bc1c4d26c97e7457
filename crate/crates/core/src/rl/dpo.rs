use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::SequencePolicy;
use crate::scalar::{sigmoid, softplus, Real};
use crate::sequence::Sequence;

/// A ranked pair of sequences for one context.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub context_id: String,
    pub winner: Sequence,
    pub loser: Sequence,
}

impl PreferencePair {
    pub fn new(context_id: impl Into<String>, winner: Sequence, loser: Sequence) -> Result<Self> {
        if winner == loser {
            return Err(Error::input("preference pair needs distinct winner and loser"));
        }
        Ok(Self {
            context_id: context_id.into(),
            winner,
            loser,
        })
    }
}

/// `-log sigmoid(margin)`.
pub fn dpo_pair_loss<F: Real>(margin: F) -> F {
    softplus(-margin)
}

/// Mean over pairs of
/// `-log sigmoid(beta (D_w - D_l)) - reg_lambda log pi(winner)`,
/// where `D_x = log pi(x) - log pi_ref(x)`, with its gradient in the policy's
/// parameters. `reg_lambda = 0` is plain DPO.
pub fn dpo_loss<F: Real, P: SequencePolicy<F>>(
    policy: &P,
    reference: &P,
    pairs: &[PreferencePair],
    beta: F,
    reg_lambda: F,
) -> Result<(F, Vec<F>)> {
    if pairs.is_empty() {
        return Err(Error::input("DPO needs at least one preference pair"));
    }
    let mut grad = vec![F::zero(); policy.num_params()];
    let mut total = F::zero();
    for pair in pairs {
        let w = policy.grad_log_prob(&pair.winner)?;
        let l = policy.grad_log_prob(&pair.loser)?;
        let dw = w.log_prob - reference.log_prob(&pair.winner)?;
        let dl = l.log_prob - reference.log_prob(&pair.loser)?;
        let margin = beta * (dw - dl);
        total = total + dpo_pair_loss(margin) - reg_lambda * w.log_prob;
        // d/dmargin of -log sigmoid(m) is -(1 - sigmoid(m)) = -sigmoid(-m)
        let coeff = -sigmoid(-margin) * beta;
        for (j, g) in grad.iter_mut().enumerate() {
            *g = *g + coeff * (w.grad[j] - l.grad[j]) - reg_lambda * w.grad[j];
        }
    }
    let n = F::of_usize(pairs.len());
    grad.iter_mut().for_each(|g| *g = *g / n);
    Ok((total / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::PositionCategoricalPolicy;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn seq(t: &[usize]) -> Sequence {
        Sequence::new(t.to_vec(), 3).unwrap()
    }

    #[test]
    fn identical_policies_give_ln2() {
        let mut rng = RngStream::new(4, 0);
        let p = PositionCategoricalPolicy::<f64>::random(3, 3, 1.0, &mut rng);
        let pairs = vec![
            PreferencePair::new("c", seq(&[0, 1, 2]), seq(&[2, 1, 0])).unwrap(),
            PreferencePair::new("c", seq(&[1, 1, 1]), seq(&[0, 0, 0])).unwrap(),
        ];
        let (loss, _) = dpo_loss(&p, &p, &pairs, 0.5, 0.0).unwrap();
        assert!((loss - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturated_margin_drives_loss_to_zero() {
        let reference = PositionCategoricalPolicy::<f64>::uniform(1, 3);
        let p = PositionCategoricalPolicy::new(1, 3, vec![40.0, -40.0, 0.0]).unwrap();
        let pairs = vec![PreferencePair::new("c", seq(&[0]), seq(&[1])).unwrap()];
        let (loss, _) = dpo_loss(&p, &reference, &pairs, 0.5, 0.0).unwrap();
        assert!(loss < 1e-15);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(PreferencePair::new("c", seq(&[0]), seq(&[0])).is_err());
        let p = PositionCategoricalPolicy::<f64>::uniform(1, 3);
        assert!(dpo_loss(&p, &p, &[], 0.5, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn strictly_decreasing_in_margin(a in -30.0..30.0f64, d in 1e-3..10.0f64) {
            prop_assert!(dpo_pair_loss(a + d) < dpo_pair_loss(a));
        }
    }
}
