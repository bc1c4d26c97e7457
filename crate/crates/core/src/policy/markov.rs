use rand_distr::{Distribution, Normal};

use super::{check_finite, check_tokens, Factor, SequencePolicy};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::sequence::Sequence;

/// First-order autoregressive policy.
///
/// Parameters are laid out as `[start (A) | transition (A x A)]`, where
/// transition row `a` holds the logits of the token following `a`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovPolicy<F> {
    length: usize,
    alphabet_size: usize,
    params: Vec<F>,
}

impl<F: Real> MarkovPolicy<F> {
    pub fn new(length: usize, start_logits: Vec<F>, transition_logits: Vec<F>) -> Result<Self> {
        let a = start_logits.len();
        if length == 0 || a == 0 {
            return Err(Error::input("policy dimensions must be positive"));
        }
        if transition_logits.len() != a * a {
            return Err(Error::input(format!(
                "transition matrix must be {a}x{a}, got {} entries",
                transition_logits.len()
            )));
        }
        let mut params = start_logits;
        params.extend(transition_logits);
        Self::from_params(length, a, params)
    }

    pub(crate) fn from_params(length: usize, alphabet_size: usize, params: Vec<F>) -> Result<Self> {
        if length == 0 || alphabet_size == 0 {
            return Err(Error::input("policy dimensions must be positive"));
        }
        if params.len() != alphabet_size * (alphabet_size + 1) {
            return Err(Error::input("markov parameter vector has the wrong size"));
        }
        check_finite(&params, "policy logits")?;
        Ok(Self {
            length,
            alphabet_size,
            params,
        })
    }

    pub fn uniform(length: usize, alphabet_size: usize) -> Self {
        Self::from_params(
            length,
            alphabet_size,
            vec![F::zero(); alphabet_size * (alphabet_size + 1)],
        )
        .expect("positive dimensions")
    }

    pub fn random(length: usize, alphabet_size: usize, scale: f64, rng: &mut RngStream) -> Self {
        let normal = Normal::new(0.0, scale).expect("finite scale");
        let params = (0..alphabet_size * (alphabet_size + 1))
            .map(|_| F::of(normal.sample(rng)))
            .collect();
        Self::from_params(length, alphabet_size, params).expect("finite logits")
    }

    pub fn start_logits(&self) -> &[F] {
        &self.params[..self.alphabet_size]
    }

    pub fn transition_row(&self, previous: usize) -> &[F] {
        let a = self.alphabet_size;
        &self.params[a + previous * a..a + (previous + 1) * a]
    }
}

impl<F: Real> SequencePolicy<F> for MarkovPolicy<F> {
    fn family(&self) -> &'static str {
        "markov"
    }

    fn length(&self) -> usize {
        self.length
    }

    fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    fn params(&self) -> &[F] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    /// Any length >= 1 is scored; generation always emits `length()` tokens.
    fn factors(&self, seq: &Sequence) -> Result<Vec<Factor>> {
        check_tokens(seq, self.alphabet_size)?;
        let tokens = seq.tokens();
        Ok(tokens
            .iter()
            .enumerate()
            .map(|(t, &token)| Factor {
                offset: self.row_offset_for(t, &tokens[..t]),
                token,
            })
            .collect())
    }

    fn row_offset_for(&self, position: usize, prefix: &[usize]) -> usize {
        let a = self.alphabet_size;
        if position == 0 {
            0
        } else {
            a + prefix[position - 1] * a
        }
    }
}
