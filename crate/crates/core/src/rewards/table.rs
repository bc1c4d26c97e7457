use std::collections::HashMap;

use super::RewardOracle;
use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Fitness assigned to site tuples absent from the table.
pub const DEFAULT_UNLABELED: f64 = -1.0;
/// Fitness assigned to sequences mutated outside the designated sites.
pub const DEFAULT_INVALID_PENALTY: f64 = -100.0;

/// Lookup-table landscape over the residues at a fixed set of sites.
#[derive(Clone, Debug)]
pub struct TableLandscape {
    site_positions: Vec<usize>,
    wild_type: Sequence,
    alphabet_size: usize,
    table: HashMap<u64, f64>,
    pub default_unlabeled: f64,
    pub invalid_penalty: f64,
}

impl TableLandscape {
    pub fn new(site_positions: Vec<usize>, wild_type: Sequence, alphabet_size: usize) -> Result<Self> {
        if site_positions.is_empty() {
            return Err(Error::input("landscape needs at least one site"));
        }
        if let Some(&p) = site_positions.iter().find(|&&p| p >= wild_type.len()) {
            return Err(Error::input(format!(
                "site {p} is outside a wild type of length {}",
                wild_type.len()
            )));
        }
        let mut sorted = site_positions.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != site_positions.len() {
            return Err(Error::input("site positions must be distinct"));
        }
        if wild_type.tokens().iter().any(|&t| t >= alphabet_size) {
            return Err(Error::input("wild type has a token outside the alphabet"));
        }
        let fits = (alphabet_size as u128)
            .checked_pow(site_positions.len() as u32)
            .is_some_and(|n| n <= u64::MAX as u128);
        if !fits {
            return Err(Error::input("too many sites for the key encoding"));
        }
        Ok(Self {
            site_positions,
            wild_type,
            alphabet_size,
            table: HashMap::new(),
            default_unlabeled: DEFAULT_UNLABELED,
            invalid_penalty: DEFAULT_INVALID_PENALTY,
        })
    }

    pub fn site_positions(&self) -> &[usize] {
        &self.site_positions
    }

    pub fn wild_type(&self) -> &Sequence {
        &self.wild_type
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn encode(&self, residues: &[usize]) -> Result<u64> {
        if residues.len() != self.site_positions.len() {
            return Err(Error::input(format!(
                "variant arity {} does not match {} sites",
                residues.len(),
                self.site_positions.len()
            )));
        }
        let mut key = 0u64;
        for &r in residues.iter().rev() {
            if r >= self.alphabet_size {
                return Err(Error::input(format!("residue {r} outside the alphabet")));
            }
            key = key * self.alphabet_size as u64 + r as u64;
        }
        Ok(key)
    }

    fn decode(&self, mut key: u64) -> Vec<usize> {
        let a = self.alphabet_size as u64;
        (0..self.site_positions.len())
            .map(|_| {
                let r = (key % a) as usize;
                key /= a;
                r
            })
            .collect()
    }

    /// Inserts a site tuple; returns `false` (leaving the table unchanged) if it
    /// was already present.
    pub fn insert(&mut self, residues: &[usize], fitness: f64) -> Result<bool> {
        let key = self.encode(residues)?;
        if self.table.contains_key(&key) {
            return Ok(false);
        }
        self.table.insert(key, fitness);
        Ok(true)
    }

    pub fn get(&self, residues: &[usize]) -> Option<f64> {
        self.encode(residues).ok().and_then(|k| self.table.get(&k).copied())
    }

    /// Residues of `seq` at the landscape's sites.
    pub fn site_residues(&self, seq: &Sequence) -> Vec<usize> {
        self.site_positions.iter().map(|&p| seq.tokens()[p]).collect()
    }

    /// Full sequence carrying `residues` at the sites and wild type elsewhere.
    pub fn sequence_for(&self, residues: &[usize]) -> Sequence {
        let mut tokens = self.wild_type.tokens().to_vec();
        for (&p, &r) in self.site_positions.iter().zip(residues) {
            tokens[p] = r;
        }
        Sequence::from_raw(tokens)
    }

    /// Table fitness with the unlabeled and invalid-sequence conventions.
    pub fn fitness(&self, seq: &Sequence) -> Result<f64> {
        if seq.len() != self.wild_type.len() {
            return Err(Error::input(format!(
                "sequence length {} does not match wild type length {}",
                seq.len(),
                self.wild_type.len()
            )));
        }
        let off_site = seq
            .diff_positions(&self.wild_type)
            .into_iter()
            .any(|p| !self.site_positions.contains(&p));
        if off_site {
            return Ok(self.invalid_penalty);
        }
        let key = self.encode(&self.site_residues(seq))?;
        Ok(self.table.get(&key).copied().unwrap_or(self.default_unlabeled))
    }

    /// Entries in ascending key order (first site varies fastest).
    pub fn entries(&self) -> Vec<(Vec<usize>, f64)> {
        let mut keys: Vec<u64> = self.table.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(|k| (self.decode(k), self.table[&k]))
            .collect()
    }
}

impl RewardOracle for TableLandscape {
    fn score(&self, seq: &Sequence) -> Result<f64> {
        self.fitness(seq)
    }
}
