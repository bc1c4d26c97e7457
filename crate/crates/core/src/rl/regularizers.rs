//! KL penalty, value regression and the combined mutation-policy loss.

use super::config::{EntropySign, RLConfig};
use crate::error::{Error, Result};
use crate::policy::MutationPolicy;
use crate::scalar::Real;

/// Clamped KL value with its gradient (zero once the clamp binds).
#[derive(Clone, Debug, PartialEq)]
pub struct KlPenalty<F> {
    pub value: F,
    pub unclamped: F,
    pub clamped: bool,
    pub grad: Vec<F>,
}

/// Mean residue-distribution KL over the mutated `sites`, clamped to `clamp`.
pub fn kl_penalty<F: Real>(
    policy: &MutationPolicy<F>,
    reference: &MutationPolicy<F>,
    sites: &[usize],
    clamp: F,
) -> Result<KlPenalty<F>> {
    let (kl, grad) = policy.site_kl(reference, sites)?;
    if kl > clamp {
        Ok(KlPenalty {
            value: clamp,
            unclamped: kl,
            clamped: true,
            grad: vec![F::zero(); grad.len()],
        })
    } else {
        Ok(KlPenalty {
            value: kl,
            unclamped: kl,
            clamped: false,
            grad,
        })
    }
}

/// `L = policy + alpha KL + beta value -/+ gamma_e entropy`; the entropy term is
/// subtracted under [`EntropySign::Bonus`].
pub fn combined_loss<F: Real>(policy_loss: F, kl: F, value_loss: F, entropy: F, cfg: &RLConfig) -> F {
    policy_loss
        + F::of(cfg.kl_coeff) * kl
        + F::of(cfg.value_coeff) * value_loss
        + entropy_weight::<F>(cfg) * entropy
}

/// Signed coefficient multiplying the entropy in [`combined_loss`].
pub fn entropy_weight<F: Real>(cfg: &RLConfig) -> F {
    match cfg.entropy_sign {
        EntropySign::Bonus => -F::of(cfg.entropy_coeff),
        EntropySign::Penalty => F::of(cfg.entropy_coeff),
    }
}

/// Linear state-value function over one-hot residue features plus a bias.
///
/// Layout: `[bias | w (L x A)]`. A zero-length instance is a constant baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearValue<F> {
    length: usize,
    alphabet_size: usize,
    params: Vec<F>,
}

impl<F: Real> LinearValue<F> {
    pub fn new(length: usize, alphabet_size: usize) -> Self {
        Self {
            length,
            alphabet_size,
            params: vec![F::zero(); 1 + length * alphabet_size],
        }
    }

    /// Bias-only baseline.
    pub fn constant() -> Self {
        Self::new(0, 0)
    }

    pub fn from_params(length: usize, alphabet_size: usize, params: Vec<F>) -> Result<Self> {
        if params.len() != 1 + length * alphabet_size {
            return Err(Error::input("value parameter vector has the wrong size"));
        }
        Ok(Self {
            length,
            alphabet_size,
            params,
        })
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    fn feature_indices<'a>(&'a self, tokens: &'a [usize]) -> impl Iterator<Item = usize> + 'a {
        let a = self.alphabet_size;
        tokens
            .iter()
            .take(self.length)
            .enumerate()
            .map(move |(i, &t)| 1 + i * a + t)
    }

    fn check(&self, tokens: &[usize]) -> Result<()> {
        if self.length > 0 && tokens.len() != self.length {
            return Err(Error::input(format!(
                "value function expects length {}, got {}",
                self.length,
                tokens.len()
            )));
        }
        if self.length > 0 && tokens.iter().any(|&t| t >= self.alphabet_size) {
            return Err(Error::input("state token outside the value function alphabet"));
        }
        Ok(())
    }

    pub fn predict(&self, tokens: &[usize]) -> Result<F> {
        self.check(tokens)?;
        Ok(self.params[0] + self.feature_indices(tokens).map(|j| self.params[j]).sum::<F>())
    }

    /// Mean squared error against `targets` and its gradient.
    pub fn value_loss(&self, states: &[&[usize]], targets: &[F]) -> Result<(F, Vec<F>)> {
        if states.len() != targets.len() || states.is_empty() {
            return Err(Error::input("value loss needs equal, non-empty state and target lists"));
        }
        let n = F::of_usize(states.len());
        let mut grad = vec![F::zero(); self.params.len()];
        let mut loss = F::zero();
        for (&s, &target) in states.iter().zip(targets) {
            let err = self.predict(s)? - target;
            loss = loss + err * err;
            let g = F::of(2.0) * err / n;
            grad[0] = grad[0] + g;
            for j in self.feature_indices(s) {
                grad[j] = grad[j] + g;
            }
        }
        Ok((loss / n, grad))
    }
}
