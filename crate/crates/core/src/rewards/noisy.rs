use std::sync::Arc;

use super::RewardOracle;
use crate::error::{Error, Result};
use crate::rng::{hash_tokens, RngStream};
use crate::sequence::Sequence;

/// Degrades a base oracle with deterministic per-sequence noise and corruption.
///
/// For each sequence a private stream is derived from `(seed, sequence)`.
/// With probability `corruption_rate` the base value is reflected about
/// `flip_threshold`, which flips the success predicate `value > flip_threshold`;
/// then Gaussian noise with standard deviation `noise_sd` is added. The result
/// depends only on the sequence, so query order and concurrency never matter.
#[derive(Clone)]
pub struct NoisyOracle {
    base: Arc<dyn RewardOracle>,
    noise_sd: f64,
    corruption_rate: f64,
    flip_threshold: f64,
    seed: u64,
}

impl NoisyOracle {
    pub fn new(
        base: Arc<dyn RewardOracle>,
        noise_sd: f64,
        corruption_rate: f64,
        flip_threshold: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
            return Err(Error::input("noise_sd must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&corruption_rate) {
            return Err(Error::input("corruption_rate must lie in [0, 1]"));
        }
        Ok(Self {
            base,
            noise_sd,
            corruption_rate,
            flip_threshold,
            seed,
        })
    }

    pub fn corruption_rate(&self) -> f64 {
        self.corruption_rate
    }

    pub fn noise_sd(&self) -> f64 {
        self.noise_sd
    }

    /// Whether the success predicate of `seq` is flipped.
    pub fn is_corrupted(&self, seq: &Sequence) -> bool {
        self.corruption_rate > 0.0 && self.stream(seq).uniform() < self.corruption_rate
    }

    fn stream(&self, seq: &Sequence) -> RngStream {
        RngStream::new(hash_tokens(self.seed, seq.tokens()), 0)
    }
}

impl RewardOracle for NoisyOracle {
    fn score(&self, seq: &Sequence) -> Result<f64> {
        let mut value = self.base.score(seq)?;
        if self.corruption_rate == 0.0 && self.noise_sd == 0.0 {
            return Ok(value);
        }
        let mut rng = self.stream(seq);
        if rng.uniform() < self.corruption_rate {
            value = 2.0 * self.flip_threshold - value;
        }
        if self.noise_sd > 0.0 {
            value += self.noise_sd * rng.normal();
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rewards::NKLandscape;

    fn base() -> Arc<dyn RewardOracle> {
        Arc::new(NKLandscape::generate(6, 2, 4, 3).unwrap())
    }

    fn random_seqs(n: usize) -> Vec<Sequence> {
        let mut rng = RngStream::new(77, 0);
        (0..n)
            .map(|_| Sequence::new((0..6).map(|_| rng.below(4)).collect(), 4).unwrap())
            .collect()
    }

    #[test]
    fn clean_oracle_equals_base() {
        let b = base();
        let noisy = NoisyOracle::new(b.clone(), 0.0, 0.0, 0.5, 9).unwrap();
        for s in random_seqs(10_000) {
            assert_eq!(noisy.score(&s).unwrap().to_bits(), b.score(&s).unwrap().to_bits());
        }
    }

    #[test]
    fn corruption_flips_predicate_at_the_stated_rate() {
        let b = base();
        let t = 0.5;
        let noisy = NoisyOracle::new(b.clone(), 0.0, 0.25, t, 9).unwrap();
        let seqs = random_seqs(10_000);
        let mut flipped = 0;
        for s in &seqs {
            let (clean, dirty) = (b.score(s).unwrap(), noisy.score(s).unwrap());
            if noisy.is_corrupted(s) {
                flipped += 1;
                assert!((dirty - (2.0 * t - clean)).abs() < 1e-12);
            } else {
                assert_eq!(dirty, clean);
            }
            // per-sequence determinism
            assert_eq!(dirty.to_bits(), noisy.score(s).unwrap().to_bits());
        }
        // duplicates in the sample share a verdict; the rate still concentrates
        let rate = flipped as f64 / seqs.len() as f64;
        assert!((rate - 0.25).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NoisyOracle::new(base(), -1.0, 0.0, 0.0, 0).is_err());
        assert!(NoisyOracle::new(base(), 0.0, 1.5, 0.0, 0).is_err());
    }
}
