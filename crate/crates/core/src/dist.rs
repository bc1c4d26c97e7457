//! Categorical distributions, tempered softmax, nucleus filtering and entropy.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// A validated probability vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoricalDist<F> {
    probs: Vec<F>,
}

/// Logarithm base for entropy reporting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl<F: Real> CategoricalDist<F> {
    /// Validates non-negativity and unit mass.
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::input("distribution must have non-empty support"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < F::zero()) {
            return Err(Error::input("probabilities must be finite and non-negative"));
        }
        let total: F = probs.iter().copied().sum();
        if (total - F::one()).abs() > F::normalization_tolerance() {
            return Err(Error::input(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    pub fn from_weights(weights: Vec<F>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < F::zero()) {
            return Err(Error::input("weights must be finite and non-negative"));
        }
        let total: F = weights.iter().copied().sum();
        if total <= F::zero() {
            return Err(Error::input("weights have zero total mass"));
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        Self {
            probs: vec![F::one() / F::of_usize(n); n],
        }
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn prob(&self, i: usize) -> F {
        self.probs[i]
    }

    /// Highest-probability index; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    /// Inverse-CDF draw.
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let u = F::of(rng.uniform());
        let mut acc = F::zero();
        let mut last_positive = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > F::zero() {
                last_positive = i;
                acc = acc + p;
                if u < acc {
                    return i;
                }
            }
        }
        // rounding left u above the accumulated mass
        last_positive
    }

    /// Copy with `index` zeroed and the remainder renormalized.
    pub fn exclude(&self, index: usize) -> Result<Self> {
        let mut w = self.probs.clone();
        w[index] = F::zero();
        Self::from_weights(w)
    }
}

/// Index of the maximum entry; ties resolved toward the lowest index.
pub fn argmax<F: Real>(xs: &[F]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn check_softmax_args<F: Real>(logits: &[F], temperature: F) -> Result<()> {
    if logits.is_empty() {
        return Err(Error::input("softmax of an empty logit vector"));
    }
    if !(temperature > F::zero()) || !temperature.is_finite() {
        return Err(Error::input(format!("temperature must be > 0, got {temperature}")));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::input("logits must be finite"));
    }
    Ok(())
}

/// `exp(l_i / t) / sum_j exp(l_j / t)` with max-subtraction.
pub fn softmax<F: Real>(logits: &[F], temperature: F) -> Result<CategoricalDist<F>> {
    check_softmax_args(logits, temperature)?;
    Ok(CategoricalDist {
        probs: softmax_unchecked(logits, temperature),
    })
}

pub(crate) fn softmax_unchecked<F: Real>(logits: &[F], temperature: F) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&l| ((l - max) / temperature).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Log-probabilities of the tempered softmax.
pub fn log_softmax<F: Real>(logits: &[F], temperature: F) -> Result<Vec<F>> {
    check_softmax_args(logits, temperature)?;
    Ok(log_softmax_unchecked(logits, temperature))
}

pub(crate) fn log_softmax_unchecked<F: Real>(logits: &[F], temperature: F) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let scaled: Vec<F> = logits.iter().map(|&l| (l - max) / temperature).collect();
    let lse = scaled.iter().map(|&s| s.exp()).sum::<F>().ln();
    scaled.into_iter().map(|s| s - lse).collect()
}

/// Nucleus filter: keeps the smallest descending-probability prefix with mass
/// `>= p` (ties by ascending index), zeroes the rest and renormalizes.
pub fn top_p_filter<F: Real>(dist: &CategoricalDist<F>, p: F) -> Result<CategoricalDist<F>> {
    if !(p > F::zero() && p <= F::one()) {
        return Err(Error::input(format!("top_p must lie in (0, 1], got {p}")));
    }
    if p == F::one() {
        return Ok(dist.clone());
    }
    let mut order: Vec<usize> = (0..dist.support_size()).collect();
    order.sort_by(|&a, &b| {
        dist.probs[b]
            .partial_cmp(&dist.probs[a])
            .expect("probabilities are finite")
            .then(a.cmp(&b))
    });
    let mut kept = vec![F::zero(); dist.support_size()];
    let mut acc = F::zero();
    for &i in &order {
        kept[i] = dist.probs[i];
        acc = acc + dist.probs[i];
        if acc >= p {
            break;
        }
    }
    CategoricalDist::from_weights(kept)
}

/// Shannon entropy with `0 log 0 = 0`.
pub fn shannon_entropy<F: Real>(dist: &CategoricalDist<F>, base: LogBase) -> F {
    let nats = -dist
        .probs
        .iter()
        .filter(|&&p| p > F::zero())
        .map(|&p| p * p.ln())
        .sum::<F>();
    match base {
        LogBase::Natural => nats,
        LogBase::Two => nats / F::of(std::f64::consts::LN_2),
    }
}

/// `KL(p || q) = sum p ln(p / q)`; infinite when `q` lacks support of `p`.
pub fn kl_divergence<F: Real>(p: &CategoricalDist<F>, q: &CategoricalDist<F>) -> Result<F> {
    if p.support_size() != q.support_size() {
        return Err(Error::input("KL between distributions of different support size"));
    }
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .filter(|(&pi, _)| pi > F::zero())
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.ln()))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn softmax_examples() {
        let d = softmax(&[0.0, 0.0, 0.0], 1.0).unwrap();
        assert!(close(d.probs(), &[1.0 / 3.0; 3], 1e-15));
        let d = softmax(&[2.0_f64.ln(), 0.0], 1.0).unwrap();
        assert!(close(d.probs(), &[2.0 / 3.0, 1.0 / 3.0], 1e-15));
        // 40-digit reference evaluation
        let d = softmax(&[3.1, -0.7, 0.2], 0.5).unwrap();
        let reference = [
            0.996_484_396_890_675_537_5,
            0.000_498_692_044_825_141_000_2,
            0.003_016_911_064_499_321_502,
        ];
        assert!(close(d.probs(), &reference, 1e-12), "{:?}", d.probs());
    }

    #[test]
    fn softmax_rejects_bad_input() {
        assert!(matches!(softmax(&[0.0, f64::NAN], 1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(softmax(&[0.0, f64::INFINITY], 1.0), Err(Error::InvalidInput(_))));
        assert!(matches!(softmax(&[0.0, 1.0], 0.0), Err(Error::InvalidInput(_))));
        assert!(matches!(softmax(&[0.0, 1.0], -1.0), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn softmax_is_stable_for_huge_logits() {
        let d = softmax(&[1000.0_f64, 0.0], 1.0).unwrap();
        assert_eq!(d.probs()[0], 1.0);
        let lp = log_softmax(&[1000.0_f64, 0.0], 1.0).unwrap();
        assert!((lp[1] + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn top_p_examples() {
        let d = CategoricalDist::new(vec![0.5, 0.3, 0.2]).unwrap();
        let f = top_p_filter(&d, 0.7).unwrap();
        assert!(close(f.probs(), &[0.625, 0.375, 0.0], 1e-15));
        assert_eq!(top_p_filter(&d, 1.0).unwrap(), d);

        let u = CategoricalDist::<f64>::uniform(4);
        let f = top_p_filter(&u, 0.5).unwrap();
        assert_eq!(f.probs(), &[0.5, 0.5, 0.0, 0.0]);
        assert!(top_p_filter(&u, 0.0).is_err());
        assert!(top_p_filter(&u, 1.5).is_err());
    }

    #[test]
    fn top_p_tie_break_matches_enumeration() {
        // reference: rank = (descending prob, ascending index), keep while mass < p
        let probs = [0.1, 0.3, 0.1, 0.3, 0.2];
        let d = CategoricalDist::new(probs.to_vec()).unwrap();
        for &p in &[0.2, 0.3, 0.5, 0.6, 0.7, 0.85, 0.95] {
            let mut idx: Vec<usize> = (0..probs.len()).collect();
            idx.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
            let mut keep = vec![false; probs.len()];
            let mut mass = 0.0;
            for &i in &idx {
                keep[i] = true;
                mass += probs[i];
                if mass >= p {
                    break;
                }
            }
            let f = top_p_filter(&d, p).unwrap();
            for i in 0..probs.len() {
                assert_eq!(f.probs()[i] > 0.0, keep[i], "p = {p}, index {i}");
            }
        }
    }

    #[test]
    fn entropy_examples() {
        let u = CategoricalDist::<f64>::uniform(20);
        assert!((shannon_entropy(&u, LogBase::Natural) - 20.0_f64.ln()).abs() < 1e-12);
        let one_hot = CategoricalDist::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(shannon_entropy(&one_hot, LogBase::Natural), 0.0);
        let dyadic = CategoricalDist::new(vec![0.5_f64, 0.25, 0.25]).unwrap();
        assert!((shannon_entropy(&dyadic, LogBase::Two) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn sampling_follows_probabilities() {
        let d = CategoricalDist::new(vec![0.2, 0.0, 0.8]).unwrap();
        let mut rng = RngStream::new(1, 0);
        let n = 20_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[d.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        let sd = (n as f64 * 0.2 * 0.8).sqrt();
        assert!((counts[0] as f64 - 0.2 * n as f64).abs() < 4.0 * sd);
    }

    #[test]
    fn f32_softmax_normalizes() {
        let d = softmax(&[1.0_f32, 2.0, 3.0], 0.7).unwrap();
        let total: f32 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    fn logits_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, 1..12)
    }

    fn dist_strategy() -> impl Strategy<Value = CategoricalDist<f64>> {
        prop::collection::vec(0.0..1.0f64, 1..12)
            .prop_filter("positive mass", |w| w.iter().sum::<f64>() > 1e-3)
            .prop_map(|w| CategoricalDist::from_weights(w).unwrap())
    }

    proptest! {
        #[test]
        fn softmax_shift_invariant(logits in logits_strategy(), c in -50.0..50.0f64, t in 0.1..5.0f64) {
            let a = softmax(&logits, t).unwrap();
            let shifted: Vec<f64> = logits.iter().map(|l| l + c).collect();
            let b = softmax(&shifted, t).unwrap();
            prop_assert!(close(a.probs(), b.probs(), 1e-12));
        }

        #[test]
        fn softmax_argmax_temperature_invariant(logits in logits_strategy(), t in 0.05..20.0f64) {
            let base = softmax(&logits, 1.0).unwrap();
            let tempered = softmax(&logits, t).unwrap();
            prop_assert_eq!(argmax(&logits), base.argmax());
            prop_assert_eq!(base.argmax(), tempered.argmax());
        }

        #[test]
        fn top_p_normalized_and_nested(d in dist_strategy(), p in 0.01..1.0f64, q in 0.01..1.0f64) {
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            let small = top_p_filter(&d, lo).unwrap();
            let large = top_p_filter(&d, hi).unwrap();
            let mass: f64 = small.probs().iter().sum();
            prop_assert!((mass - 1.0).abs() < 1e-12);
            for i in 0..d.support_size() {
                if small.probs()[i] > 0.0 {
                    prop_assert!(large.probs()[i] > 0.0);
                }
            }
            let near_one = top_p_filter(&d, 1.0 - 1e-12).unwrap();
            for i in 0..d.support_size() {
                if large.probs()[i] > 0.0 {
                    prop_assert!(near_one.probs()[i] > 0.0);
                }
            }
        }

        #[test]
        fn uniform_maximizes_entropy(d in dist_strategy()) {
            let u = CategoricalDist::<f64>::uniform(d.support_size());
            prop_assert!(shannon_entropy(&d, LogBase::Natural) <= shannon_entropy(&u, LogBase::Natural) + 1e-12);
        }

        #[test]
        fn kl_non_negative(p in dist_strategy()) {
            let q = CategoricalDist::<f64>::uniform(p.support_size());
            prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
            prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
        }
    }
}
