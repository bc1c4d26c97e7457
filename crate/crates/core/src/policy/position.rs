use rand_distr::{Distribution, Normal};

use super::{check_finite, check_tokens, Factor, SequencePolicy};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;
use crate::sequence::Sequence;

/// Independent categorical per position: an `L x A` logit matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PositionCategoricalPolicy<F> {
    length: usize,
    alphabet_size: usize,
    logits: Vec<F>,
}

impl<F: Real> PositionCategoricalPolicy<F> {
    pub fn new(length: usize, alphabet_size: usize, logits: Vec<F>) -> Result<Self> {
        if length == 0 || alphabet_size == 0 {
            return Err(Error::input("policy dimensions must be positive"));
        }
        if logits.len() != length * alphabet_size {
            return Err(Error::input(format!(
                "expected {} logits for a {length}x{alphabet_size} policy, got {}",
                length * alphabet_size,
                logits.len()
            )));
        }
        check_finite(&logits, "policy logits")?;
        Ok(Self {
            length,
            alphabet_size,
            logits,
        })
    }

    pub fn uniform(length: usize, alphabet_size: usize) -> Self {
        Self::new(length, alphabet_size, vec![F::zero(); length * alphabet_size])
            .expect("positive dimensions")
    }

    /// Logits drawn i.i.d. from `N(0, scale^2)`.
    pub fn random(length: usize, alphabet_size: usize, scale: f64, rng: &mut RngStream) -> Self {
        let normal = Normal::new(0.0, scale).expect("finite scale");
        let logits = (0..length * alphabet_size)
            .map(|_| F::of(normal.sample(rng)))
            .collect();
        Self::new(length, alphabet_size, logits).expect("finite logits")
    }

    pub fn row(&self, position: usize) -> &[F] {
        let a = self.alphabet_size;
        &self.logits[position * a..(position + 1) * a]
    }
}

impl<F: Real> SequencePolicy<F> for PositionCategoricalPolicy<F> {
    fn family(&self) -> &'static str {
        "position_categorical"
    }

    fn length(&self) -> usize {
        self.length
    }

    fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    fn params(&self) -> &[F] {
        &self.logits
    }

    fn params_mut(&mut self) -> &mut [F] {
        &mut self.logits
    }

    fn factors(&self, seq: &Sequence) -> Result<Vec<Factor>> {
        if seq.len() != self.length {
            return Err(Error::input(format!(
                "sequence length {} does not match policy length {}",
                seq.len(),
                self.length
            )));
        }
        check_tokens(seq, self.alphabet_size)?;
        Ok(seq
            .tokens()
            .iter()
            .enumerate()
            .map(|(i, &token)| Factor {
                offset: i * self.alphabet_size,
                token,
            })
            .collect())
    }

    fn row_offset_for(&self, position: usize, _prefix: &[usize]) -> usize {
        position * self.alphabet_size
    }
}
