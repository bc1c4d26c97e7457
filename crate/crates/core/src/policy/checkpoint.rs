//! Text checkpoint format.
//!
//! ```text
//! seqlab-policy-checkpoint
//! version = 1
//! family = position_categorical
//! length = 4
//! alphabet_size = 20
//! params = 0.0 -0.25 1.5 ...
//! ```
//!
//! Mutation policies add `position_weight = ...`. Floats are written in
//! shortest round-trip form, so a save/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use super::{MarkovPolicy, MutationPolicy, PositionCategoricalPolicy, SequencePolicy};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "seqlab-policy-checkpoint";

#[derive(Clone, Debug, PartialEq)]
pub enum PolicyCheckpoint<F> {
    PositionCategorical(PositionCategoricalPolicy<F>),
    Markov(MarkovPolicy<F>),
    Mutation(MutationPolicy<F>),
}

fn fmt_float<F: Real>(x: F) -> String {
    format!("{:?}", x.as_f64())
}

impl<F: Real> PolicyCheckpoint<F> {
    pub fn family(&self) -> &'static str {
        match self {
            Self::PositionCategorical(p) => p.family(),
            Self::Markov(p) => p.family(),
            Self::Mutation(p) => p.family(),
        }
    }

    pub fn length(&self) -> usize {
        match self {
            Self::PositionCategorical(p) => p.length(),
            Self::Markov(p) => p.length(),
            Self::Mutation(p) => p.length(),
        }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            Self::PositionCategorical(p) => p.alphabet_size(),
            Self::Markov(p) => p.alphabet_size(),
            Self::Mutation(p) => p.alphabet_size(),
        }
    }

    pub fn params(&self) -> &[F] {
        match self {
            Self::PositionCategorical(p) => p.params(),
            Self::Markov(p) => p.params(),
            Self::Mutation(p) => p.params(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MAGIC}\nversion = {CHECKPOINT_VERSION}\nfamily = {}\nlength = {}\nalphabet_size = {}\n",
            self.family(),
            self.length(),
            self.alphabet_size()
        );
        if let Self::Mutation(p) = self {
            out.push_str(&format!("position_weight = {}\n", fmt_float(p.position_weight())));
        }
        let params: Vec<String> = self.params().iter().map(|&x| fmt_float(x)).collect();
        out.push_str(&format!("params = {}\n", params.join(" ")));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == MAGIC => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("missing `{MAGIC}` header"),
                })
            }
        }
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            if fields.insert(k.trim(), (i + 1, v.trim())).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate key `{}`", k.trim()),
                });
            }
        }
        let get = |key: &str| {
            fields.get(key).copied().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing key `{key}`"),
            })
        };
        let uint = |key: &str| -> Result<usize> {
            let (line, v) = get(key)?;
            v.parse().map_err(|_| Error::Parse {
                line,
                message: format!("`{key}` is not an unsigned integer"),
            })
        };
        let float = |line: usize, v: &str| -> Result<F> {
            v.parse::<f64>().map(F::of).map_err(|_| Error::Parse {
                line,
                message: format!("`{v}` is not a number"),
            })
        };

        let version = uint("version")?;
        if version != CHECKPOINT_VERSION as usize {
            return Err(Error::Parse {
                line: get("version")?.0,
                message: format!("unsupported checkpoint version {version}"),
            });
        }
        let length = uint("length")?;
        let alphabet_size = uint("alphabet_size")?;
        let (pline, praw) = get("params")?;
        let params = praw
            .split_whitespace()
            .map(|v| float(pline, v))
            .collect::<Result<Vec<F>>>()?;
        let (fline, family) = get("family")?;
        match family {
            "position_categorical" => Ok(Self::PositionCategorical(PositionCategoricalPolicy::new(
                length,
                alphabet_size,
                params,
            )?)),
            "markov" => Ok(Self::Markov(MarkovPolicy::from_params(length, alphabet_size, params)?)),
            "mutation" => {
                let (wline, w) = get("position_weight")?;
                Ok(Self::Mutation(MutationPolicy::from_params(
                    length,
                    alphabet_size,
                    params,
                    float(wline, w)?,
                )?))
            }
            other => Err(Error::Parse {
                line: fline,
                message: format!("unknown policy family `{other}`"),
            }),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
