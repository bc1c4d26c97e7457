use crate::error::{Error, Result};
use crate::scalar::Real;

/// Generalized advantage estimation by backward recursion:
/// `delta_t = r_t + gamma V_{t+1} - V_t`, `A_t = delta_t + gamma lambda A_{t+1}`,
/// with `V_T = bootstrap`. Returns `(advantages, advantages + values)`.
pub fn gae<F: Real>(
    rewards: &[F],
    values: &[F],
    bootstrap: F,
    gamma: F,
    lam: F,
) -> Result<(Vec<F>, Vec<F>)> {
    if rewards.len() != values.len() {
        return Err(Error::input(format!(
            "{} rewards but {} values",
            rewards.len(),
            values.len()
        )));
    }
    let unit = F::zero()..=F::one();
    if !unit.contains(&gamma) || !unit.contains(&lam) {
        return Err(Error::input("gamma and lambda must lie in [0, 1]"));
    }
    let n = rewards.len();
    let mut advantages = vec![F::zero(); n];
    let mut next_value = bootstrap;
    let mut next_adv = F::zero();
    for t in (0..n).rev() {
        let delta = rewards[t] + gamma * next_value - values[t];
        next_adv = delta + gamma * lam * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(&a, &v)| a + v).collect();
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_step() {
        let (a, r) = gae(&[2.0], &[0.5], 0.0, 0.99, 0.95).unwrap();
        assert_eq!(a, vec![1.5]);
        assert_eq!(r, vec![2.0]);
    }

    #[test]
    fn monte_carlo_limit_gives_suffix_sums() {
        let rewards = [1.0, -2.0, 0.5, 3.0];
        let (a, _) = gae(&rewards, &[0.0; 4], 0.0, 1.0, 1.0).unwrap();
        assert_eq!(a, vec![2.5, 1.5, 3.5, 3.0]);
    }

    #[test]
    fn zero_discount_is_reward_minus_value() {
        let rewards = [0.0, 0.0, 0.0, 7.0];
        let values = [0.3, -0.1, 0.2, 1.0];
        let (a, _) = gae(&rewards, &values, 5.0, 0.0, 0.95).unwrap();
        let expected: Vec<f64> = rewards.iter().zip(&values).map(|(r, v)| r - v).collect();
        assert_eq!(a, expected);
    }

    #[test]
    fn rejects_mismatch() {
        assert!(gae(&[1.0, 2.0], &[0.0], 0.0, 0.9, 0.9).is_err());
        assert!(gae(&[1.0], &[0.0], 0.0, 1.1, 0.9).is_err());
    }

    proptest! {
        #[test]
        fn lambda_zero_is_one_step_td(
            rv in prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 1..8),
            boot in -5.0..5.0f64,
            gamma in 0.0..=1.0f64,
        ) {
            let (r, v): (Vec<f64>, Vec<f64>) = rv.into_iter().unzip();
            let (a, _) = gae(&r, &v, boot, gamma, 0.0).unwrap();
            for t in 0..r.len() {
                let next = if t + 1 < r.len() { v[t + 1] } else { boot };
                prop_assert_eq!(a[t], r[t] + gamma * next - v[t]);
            }
        }
    }
}
