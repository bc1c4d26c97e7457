//! Synthetic four-site, twenty-residue landscapes with a sparse high-fitness set.

use super::TableLandscape;
use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sequence::Sequence;

/// Number of mutable sites.
pub const PHOQ_SITES: usize = 4;
/// Wild-type residues at the four sites.
pub const PHOQ_WILD_TYPE: &str = "AVST";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhoqLikeParams {
    /// Fraction of all variants with fitness above 10.
    pub high_fraction: f64,
    /// Fraction of variants that receive a table entry (1.0 = complete table).
    pub labeled_fraction: f64,
    pub seed: u64,
}

impl Default for PhoqLikeParams {
    fn default() -> Self {
        Self {
            high_fraction: 0.01,
            labeled_fraction: 1.0,
            seed: 0,
        }
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Builds a long-tailed table over `20^4` variants of the four-site wild type.
///
/// Exactly `round(high_fraction * 20^4)` variants get fitness `> 10`
/// (`10 + 20 Exp(1)`); the rest are 40% exactly 0, 40% in `(0, 1]` and 20% in
/// `(1, 10]`. When `labeled_fraction < 1`, that share of the low-fitness
/// variants is left out of the table and reads as unlabeled.
pub fn phoq_like(params: &PhoqLikeParams) -> Result<TableLandscape> {
    if !(0.0..=1.0).contains(&params.high_fraction) {
        return Err(Error::input("high_fraction must lie in [0, 1]"));
    }
    if !(params.labeled_fraction > 0.0 && params.labeled_fraction <= 1.0) {
        return Err(Error::input("labeled_fraction must lie in (0, 1]"));
    }
    let alphabet = Alphabet::amino_acids();
    let a = alphabet.size();
    let wild_type = Sequence::parse(PHOQ_WILD_TYPE, &alphabet)?;
    let mut land = TableLandscape::new((0..PHOQ_SITES).collect(), wild_type, a)?;

    let total = a.pow(PHOQ_SITES as u32);
    let n_high = (params.high_fraction * total as f64).round() as usize;
    let mut rng = RngStream::new(params.seed, 0x9405);

    let mut order: Vec<usize> = (0..total).collect();
    for i in 0..n_high {
        let j = i + rng.below(total - i);
        order.swap(i, j);
    }
    let mut is_high = vec![false; total];
    for &v in &order[..n_high] {
        is_high[v] = true;
    }

    for v in 0..total {
        let residues: Vec<usize> = (0..PHOQ_SITES).map(|s| (v / a.pow(s as u32)) % a).collect();
        let fitness = if is_high[v] {
            (10.0 + round4(20.0 * rng.exponential())).max(10.0001)
        } else {
            if rng.uniform() >= params.labeled_fraction {
                continue;
            }
            let u = rng.uniform();
            if u < 0.4 {
                0.0
            } else if u < 0.8 {
                round4(rng.uniform()).max(0.0001)
            } else {
                round4(1.0 + 9.0 * rng.uniform()).max(1.0001)
            }
        };
        land.insert(&residues, fitness)?;
    }
    Ok(land)
}
