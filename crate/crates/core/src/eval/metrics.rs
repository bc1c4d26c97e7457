use crate::dist::{shannon_entropy, CategoricalDist, LogBase};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sequence::Sequence;

/// Empirical residue entropy at each of `positions`.
pub fn positional_entropy(
    samples: &[Sequence],
    positions: &[usize],
    alphabet_size: usize,
    base: LogBase,
) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::input("positional entropy needs at least one sample"));
    }
    positions
        .iter()
        .map(|&p| {
            let mut counts = vec![0.0f64; alphabet_size];
            for s in samples {
                let t = s
                    .get(p)
                    .ok_or_else(|| Error::input(format!("sample shorter than position {p}")))?;
                *counts
                    .get_mut(t)
                    .ok_or_else(|| Error::input("token outside the alphabet"))? += 1.0;
            }
            Ok(shannon_entropy(&CategoricalDist::from_weights(counts)?, base))
        })
        .collect()
}

/// `exp(-sum log_probs / sum token_counts)`.
pub fn perplexity<F: Real>(log_probs: &[F], token_counts: &[usize]) -> Result<F> {
    if log_probs.len() != token_counts.len() || log_probs.is_empty() {
        return Err(Error::input("perplexity needs equal, non-empty log-prob and count lists"));
    }
    if token_counts.contains(&0) {
        return Err(Error::input("token counts must be positive"));
    }
    let total: usize = token_counts.iter().sum();
    let nll = -log_probs.iter().copied().sum::<F>();
    Ok((nll / F::of_usize(total)).exp())
}

/// Positional identity: matching positions over the shared prefix divided by
/// the longer length.
pub fn identity(a: &Sequence, b: &Sequence) -> f64 {
    let matches = a.tokens().iter().zip(b.tokens()).filter(|(x, y)| x == y).count();
    matches as f64 / a.len().max(b.len()) as f64
}

/// Mean identity over unordered pairs.
pub fn pairwise_similarity(samples: &[Sequence]) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::input("pairwise similarity needs at least two samples"));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += identity(&samples[i], &samples[j]);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

/// `1 - pairwise_similarity`.
pub fn pairwise_diversity(samples: &[Sequence]) -> Result<f64> {
    Ok(1.0 - pairwise_similarity(samples)?)
}

/// Mean over samples of `1 - max_ref identity(sample, ref)`.
pub fn novelty(samples: &[Sequence], reference: &[Sequence]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::input("novelty needs a non-empty reference set"));
    }
    if samples.is_empty() {
        return Err(Error::input("novelty needs at least one sample"));
    }
    let total: f64 = samples
        .iter()
        .map(|s| {
            1.0 - reference
                .iter()
                .map(|r| identity(s, r))
                .fold(0.0, f64::max)
        })
        .sum();
    Ok(total / samples.len() as f64)
}

/// Fraction of positions where `generated` matches `native`.
pub fn recovery_rate(generated: &Sequence, native: &Sequence) -> Result<f64> {
    if generated.len() != native.len() {
        return Err(Error::input(format!(
            "recovery needs equal lengths, got {} and {}",
            generated.len(),
            native.len()
        )));
    }
    Ok(identity(generated, native))
}
