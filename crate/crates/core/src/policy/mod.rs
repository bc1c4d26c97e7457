//! Exact linear-softmax policies over sequences and mutation actions.
//!
//! Every policy here factorizes a sequence likelihood into softmax rows of a
//! flat parameter vector, so log-probabilities, score functions and KL terms
//! are available in closed form.

mod checkpoint;
mod markov;
mod mutation;
mod position;

pub use checkpoint::{PolicyCheckpoint, CHECKPOINT_VERSION};
pub use markov::MarkovPolicy;
pub use mutation::{
    MutateOptions, MutationAction, MutationOutcome, MutationPolicy, Temperatures,
    DEFAULT_MAX_SITES, DEFAULT_POSITION_THRESHOLD, DEFAULT_POSITION_WEIGHT,
};
pub use position::PositionCategoricalPolicy;

use crate::dist::{log_softmax_unchecked, softmax_unchecked, top_p_filter, CategoricalDist};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::sequence::Sequence;

/// Log-probability together with its gradient over the flat parameter layout.
#[derive(Clone, Debug, PartialEq)]
pub struct LogProbGrad<F> {
    pub log_prob: F,
    pub grad: Vec<F>,
}

/// One softmax factor of a sequence likelihood: the row of logits starting at
/// `offset` (of width `alphabet_size`) emits `token`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Factor {
    pub offset: usize,
    pub token: usize,
}

/// A generative policy over fixed-alphabet sequences.
pub trait SequencePolicy<F: Real>: Clone + Send + Sync {
    /// Name written to checkpoints.
    fn family(&self) -> &'static str;

    /// Length of generated sequences.
    fn length(&self) -> usize;

    fn alphabet_size(&self) -> usize;

    fn params(&self) -> &[F];

    fn params_mut(&mut self) -> &mut [F];

    fn num_params(&self) -> usize {
        self.params().len()
    }

    /// Decomposes the likelihood of `seq` into softmax factors.
    fn factors(&self, seq: &Sequence) -> Result<Vec<Factor>>;

    /// Logit row used to draw the token at `position` given the prefix generated so far.
    fn row_offset_for(&self, position: usize, prefix: &[usize]) -> usize;

    /// Draws a sequence of `length()` tokens from the temperature-scaled,
    /// nucleus-filtered conditionals.
    fn sample(&self, temperature: F, top_p: F, rng: &mut RngStream) -> Result<Sequence> {
        if !(temperature > F::zero()) {
            return Err(Error::input(format!("temperature must be > 0, got {temperature}")));
        }
        if !(top_p > F::zero() && top_p <= F::one()) {
            return Err(Error::input(format!("top_p must lie in (0, 1], got {top_p}")));
        }
        let a = self.alphabet_size();
        let mut tokens = Vec::with_capacity(self.length());
        for t in 0..self.length() {
            let offset = self.row_offset_for(t, &tokens);
            let row = &self.params()[offset..offset + a];
            let dist = CategoricalDist::new(softmax_unchecked(row, temperature))?;
            let dist = top_p_filter(&dist, top_p)?;
            tokens.push(dist.sample(rng));
        }
        Ok(Sequence::from_raw(tokens))
    }

    /// Training-time log-likelihood: temperature 1, no nucleus filtering.
    fn log_prob(&self, seq: &Sequence) -> Result<F> {
        let a = self.alphabet_size();
        let params = self.params();
        Ok(self
            .factors(seq)?
            .into_iter()
            .map(|f| log_softmax_unchecked(&params[f.offset..f.offset + a], F::one())[f.token])
            .sum())
    }

    /// Closed-form score function: per factor row, `onehot(token) - softmax(row)`.
    fn grad_log_prob(&self, seq: &Sequence) -> Result<LogProbGrad<F>> {
        let a = self.alphabet_size();
        let params = self.params();
        let mut grad = vec![F::zero(); params.len()];
        let mut log_prob = F::zero();
        for f in self.factors(seq)? {
            let row = &params[f.offset..f.offset + a];
            let lp = log_softmax_unchecked(row, F::one());
            log_prob = log_prob + lp[f.token];
            for (j, l) in lp.into_iter().enumerate() {
                grad[f.offset + j] = grad[f.offset + j] - l.exp();
            }
            grad[f.offset + f.token] = grad[f.offset + f.token] + F::one();
        }
        Ok(LogProbGrad { log_prob, grad })
    }

    /// Sum over the generation contexts visited by `seq` of
    /// `KL(self(.|ctx) || reference(.|ctx))`, with its gradient in `self`'s parameters.
    fn kl_along(&self, reference: &Self, seq: &Sequence) -> Result<(F, Vec<F>)> {
        if reference.num_params() != self.num_params() {
            return Err(Error::input("reference policy has a different parameter layout"));
        }
        let a = self.alphabet_size();
        let mut grad = vec![F::zero(); self.num_params()];
        let mut total = F::zero();
        for f in self.factors(seq)? {
            let (kl, g) = row_kl(
                &self.params()[f.offset..f.offset + a],
                &reference.params()[f.offset..f.offset + a],
            );
            total = total + kl;
            for (j, gj) in g.into_iter().enumerate() {
                grad[f.offset + j] = grad[f.offset + j] + gj;
            }
        }
        Ok((total, grad))
    }
}

/// `KL(softmax(p) || softmax(q))` and its gradient in `p`:
/// `d/dp_j = pi_j (log pi_j - log rho_j - KL)`.
pub(crate) fn row_kl<F: Real>(p_logits: &[F], q_logits: &[F]) -> (F, Vec<F>) {
    let lp = log_softmax_unchecked(p_logits, F::one());
    let lq = log_softmax_unchecked(q_logits, F::one());
    let kl: F = lp.iter().zip(&lq).map(|(&a, &b)| a.exp() * (a - b)).sum();
    let grad = lp
        .iter()
        .zip(&lq)
        .map(|(&a, &b)| a.exp() * (a - b - kl))
        .collect();
    (kl, grad)
}

pub(crate) fn check_finite<F: Real>(xs: &[F], what: &str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::input(format!("{what} must be finite")))
    }
}

pub(crate) fn check_tokens(seq: &Sequence, alphabet_size: usize) -> Result<()> {
    if let Some(&t) = seq.tokens().iter().find(|&&t| t >= alphabet_size) {
        return Err(Error::input(format!(
            "token {t} out of range for alphabet of size {alphabet_size}"
        )));
    }
    Ok(())
}
