use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// `1 - (1 - c/n)^k`.
    Plugin,
    /// `1 - C(n - c, k) / C(n, k)`.
    Unbiased,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Plugin => "plugin",
            Estimator::Unbiased => "unbiased",
        }
    }
}

fn check(n: usize, c: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::input("k must be >= 1"));
    }
    if k > n {
        return Err(Error::input(format!("k = {k} exceeds the {n} available samples")));
    }
    if c > n {
        return Err(Error::input(format!("{c} successes out of {n} samples")));
    }
    Ok(())
}

pub fn pass_at_k_plugin(n: usize, c: usize, k: usize) -> Result<f64> {
    check(n, c, k)?;
    let p = c as f64 / n as f64;
    if k == 1 {
        // avoid the 1 - (1 - p) rounding round trip
        return Ok(p);
    }
    Ok(1.0 - (1.0 - p).powi(k as i32))
}

/// Unbiased estimator via the stable product
/// `C(n-c, k) / C(n, k) = prod_{i = n-c+1}^{n} (1 - k / i)`.
pub fn pass_at_k_unbiased(n: usize, c: usize, k: usize) -> Result<f64> {
    check(n, c, k)?;
    if n - c < k {
        return Ok(1.0);
    }
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    Ok(1.0 - miss)
}

/// Per-context pass@k and its mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassAtK {
    pub k: usize,
    pub estimator: Estimator,
    pub per_context: Vec<f64>,
    pub mean: f64,
}

pub fn pass_at_k(success_flags: &[Vec<bool>], k: usize, estimator: Estimator) -> Result<PassAtK> {
    if success_flags.is_empty() {
        return Err(Error::input("pass@k needs at least one context"));
    }
    let per_context = success_flags
        .iter()
        .map(|flags| {
            let c = flags.iter().filter(|&&f| f).count();
            match estimator {
                Estimator::Plugin => pass_at_k_plugin(flags.len(), c, k),
                Estimator::Unbiased => pass_at_k_unbiased(flags.len(), c, k),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = per_context.iter().sum::<f64>() / per_context.len() as f64;
    Ok(PassAtK {
        k,
        estimator,
        per_context,
        mean,
    })
}

/// Mean pass@k at `k = 1, 2, 4, ...` up to and including `k_max`.
pub fn pass_at_k_curve(
    success_flags: &[Vec<bool>],
    k_max: usize,
    estimator: Estimator,
) -> Result<Vec<(usize, f64)>> {
    let mut ks = Vec::new();
    let mut k = 1;
    while k < k_max {
        ks.push(k);
        k *= 2;
    }
    ks.push(k_max);
    ks.into_iter()
        .map(|k| Ok((k, pass_at_k(success_flags, k, estimator)?.mean)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plugin_arithmetic() {
        assert_eq!(pass_at_k_plugin(10, 5, 1).unwrap(), 0.5);
        assert_eq!(pass_at_k_plugin(10, 5, 2).unwrap(), 0.75);
        assert_eq!(pass_at_k_plugin(7, 7, 3).unwrap(), 1.0);
    }

    #[test]
    fn unbiased_edge_cases() {
        assert_eq!(pass_at_k_unbiased(5, 0, 3).unwrap(), 0.0);
        assert_eq!(pass_at_k_unbiased(5, 3, 3).unwrap(), 1.0);
        assert!((pass_at_k_unbiased(4, 1, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!(pass_at_k_unbiased(3, 1, 4).is_err());
        assert!(pass_at_k_unbiased(3, 1, 0).is_err());
    }

    #[test]
    fn unbiased_matches_binomial_ratio() {
        // n = 128, c = 13, k = 32 against exact big-integer binomials
        fn binom(n: u128, k: u128) -> u128 {
            (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
        }
        let exact = 1.0 - binom(115, 32) as f64 / binom(128, 32) as f64;
        assert!((pass_at_k_unbiased(128, 13, 32).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn curve_ks() {
        let flags = vec![vec![true, false, false, false, false, false]];
        let ks: Vec<usize> = pass_at_k_curve(&flags, 6, Estimator::Plugin)
            .unwrap()
            .into_iter()
            .map(|(k, _)| k)
            .collect();
        assert_eq!(ks, vec![1, 2, 4, 6]);
    }

    proptest! {
        #[test]
        fn non_decreasing_in_k(n in 1usize..40, frac in 0.0..=1.0f64) {
            let c = ((n as f64) * frac).round() as usize;
            for est in [pass_at_k_plugin, pass_at_k_unbiased] {
                let mut prev = 0.0;
                for k in 1..=n {
                    let v = est(n, c, k).unwrap();
                    prop_assert!(v + 1e-12 >= prev);
                    prev = v;
                }
            }
        }

        #[test]
        fn plugin_pass_at_one_is_success_rate(flags in proptest::collection::vec(any::<bool>(), 1..50)) {
            let c = flags.iter().filter(|&&f| f).count();
            let r = pass_at_k(&[flags.clone()], 1, Estimator::Plugin).unwrap();
            prop_assert_eq!(r.mean, c as f64 / flags.len() as f64);
        }
    }
}
