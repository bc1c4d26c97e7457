use super::RewardOracle;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sequence::Sequence;

/// Largest contribution table per site, `A^(k+1)` entries.
const MAX_TABLE_ENTRIES: usize = 1 << 24;

/// Kauffman NK landscape over an `A`-letter alphabet.
///
/// Site `i` contributes `table_i[(s_i, s_{n_1}, ..., s_{n_k})]`, a uniform
/// `[0, 1)` value; fitness is the mean contribution.
#[derive(Clone, Debug)]
pub struct NKLandscape {
    n: usize,
    k: usize,
    alphabet_size: usize,
    seed: u64,
    neighbors: Vec<Vec<usize>>,
    contributions: Vec<Vec<f64>>,
}

impl NKLandscape {
    pub fn generate(n: usize, k: usize, alphabet_size: usize, seed: u64) -> Result<Self> {
        if n == 0 || alphabet_size == 0 {
            return Err(Error::input("NK landscape needs n >= 1 and a non-empty alphabet"));
        }
        if k >= n {
            return Err(Error::input(format!("interaction order k = {k} must be < n = {n}")));
        }
        let entries = (alphabet_size as u128).pow(k as u32 + 1);
        if entries > MAX_TABLE_ENTRIES as u128 {
            return Err(Error::input(format!(
                "A^(k+1) = {entries} contribution entries per site is too large"
            )));
        }
        let mut rng = RngStream::new(seed, 0);
        let neighbors: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                // partial Fisher-Yates
                for slot in 0..k {
                    let pick = slot + rng.below(others.len() - slot);
                    others.swap(slot, pick);
                }
                others.truncate(k);
                others
            })
            .collect();
        let contributions = (0..n)
            .map(|_| (0..entries as usize).map(|_| rng.uniform()).collect())
            .collect();
        Ok(Self {
            n,
            k,
            alphabet_size,
            seed,
            neighbors,
            contributions,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    /// Contribution of `site` given the full sequence.
    pub fn site_contribution(&self, site: usize, tokens: &[usize]) -> f64 {
        let a = self.alphabet_size;
        let mut idx = tokens[site];
        for &j in &self.neighbors[site] {
            idx = idx * a + tokens[j];
        }
        self.contributions[site][idx]
    }

    pub fn fitness(&self, seq: &Sequence) -> Result<f64> {
        if seq.len() != self.n {
            return Err(Error::input(format!(
                "sequence length {} does not match n = {}",
                seq.len(),
                self.n
            )));
        }
        if seq.tokens().iter().any(|&t| t >= self.alphabet_size) {
            return Err(Error::input("token outside the landscape alphabet"));
        }
        let total: f64 = (0..self.n).map(|i| self.site_contribution(i, seq.tokens())).sum();
        Ok(total / self.n as f64)
    }
}

impl RewardOracle for NKLandscape {
    fn score(&self, seq: &Sequence) -> Result<f64> {
        self.fitness(seq)
    }
}
