use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// The 20 canonical amino acids in one-letter code.
pub const CANONICAL_AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";

/// Ordered residue alphabet; token `i` is `symbols[i]`.
#[derive(Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl Alphabet {
    pub fn new(symbols: impl IntoIterator<Item = char>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().collect();
        if symbols.is_empty() {
            return Err(Error::input("alphabet must contain at least one symbol"));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, &c) in symbols.iter().enumerate() {
            if index.insert(c, i).is_some() {
                return Err(Error::input(format!("duplicate alphabet symbol `{c}`")));
            }
        }
        Ok(Self { symbols, index })
    }

    /// The 20 canonical amino acids.
    pub fn amino_acids() -> Self {
        Self::new(CANONICAL_AMINO_ACIDS.chars()).expect("canonical alphabet is valid")
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol(&self, token: usize) -> Option<char> {
        self.symbols.get(token).copied()
    }

    pub fn index(&self, symbol: char) -> Option<usize> {
        self.index.get(&symbol).copied()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    /// Encodes a string into token indices.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.chars()
            .map(|c| {
                self.index(c)
                    .ok_or_else(|| Error::input(format!("symbol `{c}` is not in the alphabet")))
            })
            .collect()
    }

    /// Decodes token indices; panics on an out-of-range token.
    pub fn decode(&self, tokens: &[usize]) -> String {
        tokens.iter().map(|&t| self.symbols[t]).collect()
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::amino_acids()
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({:?})", self.symbols.iter().collect::<String>())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let a = Alphabet::amino_acids();
        assert_eq!(a.size(), 20);
        for i in 0..a.size() {
            assert_eq!(a.index(a.symbol(i).unwrap()), Some(i));
        }
    }

    #[test]
    fn rejects_duplicates_and_unknown_symbols() {
        assert!(Alphabet::new("ABA".chars()).is_err());
        assert!(Alphabet::new("".chars()).is_err());
        assert!(Alphabet::amino_acids().encode("ACZ").is_err());
    }
}
