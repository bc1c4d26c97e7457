use crate::error::{Error, Result};
use crate::scalar::{mean, Real};

/// Group-relative advantages `R_j - mean(R)`.
///
/// With `rank_normalize`, rewards are first replaced by their within-group
/// average ranks mapped linearly onto `[-1, 1]`, then centered.
pub fn grpo_advantages<F: Real>(group_rewards: &[F], rank_normalize: bool) -> Result<Vec<F>> {
    let m = group_rewards.len();
    if m < 2 {
        return Err(Error::input(format!("GRPO group needs >= 2 members, got {m}")));
    }
    if group_rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::input("group rewards must be finite"));
    }
    let scores = if rank_normalize {
        let ranks = average_ranks(group_rewards);
        let span = F::of_usize(m - 1);
        ranks
            .into_iter()
            .map(|r| F::of(2.0) * (r - F::one()) / span - F::one())
            .collect()
    } else {
        group_rewards.to_vec()
    };
    let mu = mean(&scores);
    Ok(scores.into_iter().map(|s| s - mu).collect())
}

/// 1-based ranks with ties sharing their average rank.
fn average_ranks<F: Real>(xs: &[F]) -> Vec<F> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite rewards"));
    let mut ranks = vec![F::zero(); xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j share ranks i+1..=j+1
        let avg = F::of((i + j + 2) as f64 / 2.0);
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mean_centering() {
        assert_eq!(grpo_advantages(&[1.0, 2.0, 3.0], false).unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(grpo_advantages(&[5.0, 5.0, 5.0], false).unwrap(), vec![0.0; 3]);
        assert_eq!(grpo_advantages(&[5.0, 5.0, 5.0], true).unwrap(), vec![0.0; 3]);
        assert!(grpo_advantages(&[1.0], false).is_err());
    }

    /// Rank by counting: rank = #less + (#equal + 1) / 2.
    fn reference_rank_scores(xs: &[f64]) -> Vec<f64> {
        let m = xs.len() as f64;
        let scores: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let less = xs.iter().filter(|&&y| y < x).count() as f64;
                let equal = xs.iter().filter(|&&y| y == x).count() as f64;
                let rank = less + (equal + 1.0) / 2.0;
                2.0 * (rank - 1.0) / (m - 1.0) - 1.0
            })
            .collect();
        let mu = scores.iter().sum::<f64>() / m;
        scores.iter().map(|s| s - mu).collect()
    }

    #[test]
    fn rank_normalization_with_ties() {
        let got = grpo_advantages(&[10.0, 1.0, 1.0, 1.0], true).unwrap();
        let want = reference_rank_scores(&[10.0, 1.0, 1.0, 1.0]);
        // rank 4 -> 1, shared rank 2 -> -1/3; already centered
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!((got[0] - 1.0).abs() < 1e-15);
        assert!(got[1..].iter().all(|&x| (x + 1.0 / 3.0).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn advantages_sum_to_zero(
            xs in prop::collection::vec(prop_oneof![(-100.0..100.0f64), Just(1.0)], 2..20),
            rank in any::<bool>(),
        ) {
            let a = grpo_advantages(&xs, rank).unwrap();
            prop_assert!(a.iter().sum::<f64>().abs() < 1e-9);
            if rank {
                let want = reference_rank_scores(&xs);
                for (g, w) in a.iter().zip(&want) {
                    prop_assert!((g - w).abs() < 1e-12);
                }
            }
        }
    }
}
