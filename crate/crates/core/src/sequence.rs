use std::fmt;

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

/// A non-empty vector of token indices over some alphabet.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Sequence(Vec<usize>);

impl Sequence {
    /// Builds a sequence, checking it is non-empty and every token is `< alphabet_size`.
    pub fn new(tokens: Vec<usize>, alphabet_size: usize) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::input("sequence must have length >= 1"));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= alphabet_size) {
            return Err(Error::input(format!(
                "token {bad} out of range for alphabet of size {alphabet_size}"
            )));
        }
        Ok(Self(tokens))
    }

    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        Self::new(alphabet.encode(text)?, alphabet.size())
    }

    pub(crate) fn from_raw(tokens: Vec<usize>) -> Self {
        debug_assert!(!tokens.is_empty());
        Self(tokens)
    }

    pub fn tokens(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, position: usize) -> Option<usize> {
        self.0.get(position).copied()
    }

    /// Copy of this sequence with `residue` substituted at `position`.
    pub fn with_substitution(&self, position: usize, residue: usize) -> Self {
        let mut tokens = self.0.clone();
        tokens[position] = residue;
        Self(tokens)
    }

    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        alphabet.decode(&self.0)
    }

    /// Positions at which `self` and `other` differ (over the shared prefix).
    pub fn diff_positions(&self, other: &Sequence) -> Vec<usize> {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
            .collect()
    }
}

impl fmt::Debug for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sequence{:?}", self.0)
    }
}

impl AsRef<[usize]> for Sequence {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_tokens_and_length() {
        assert!(Sequence::new(vec![], 4).is_err());
        assert!(Sequence::new(vec![0, 4], 4).is_err());
        let s = Sequence::new(vec![0, 3], 4).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn text_round_trip_and_diff() {
        let a = Alphabet::amino_acids();
        let s = Sequence::parse("AVST", &a).unwrap();
        assert_eq!(s.to_text(&a), "AVST");
        let t = s.with_substitution(2, a.index('W').unwrap());
        assert_eq!(t.to_text(&a), "AVWT");
        assert_eq!(s.diff_positions(&t), vec![2]);
    }
}
