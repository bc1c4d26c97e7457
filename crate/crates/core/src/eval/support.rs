use std::fmt;

use serde::{Deserialize, Serialize};

use super::samples::SampleLog;
use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Expansion-shrinkage ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Esr {
    Finite(f64),
    /// Expansion > 0 with no shrinkage.
    Infinite,
    /// Neither expansion nor shrinkage.
    Undefined,
}

impl Esr {
    pub fn value(&self) -> f64 {
        match *self {
            Esr::Finite(v) => v,
            Esr::Infinite => f64::INFINITY,
            Esr::Undefined => f64::NAN,
        }
    }

    pub fn is_computable(&self) -> bool {
        matches!(self, Esr::Finite(_) | Esr::Infinite)
    }

    /// Value rounded half away from zero to `decimals` places.
    pub fn rounded(&self, decimals: u32) -> Option<f64> {
        match *self {
            Esr::Finite(v) => Some(round_to(v, decimals)),
            _ => None,
        }
    }
}

impl fmt::Display for Esr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Esr::Finite(v) => write!(f, "{v:.2}"),
            Esr::Infinite => f.write_str("inf"),
            Esr::Undefined => f.write_str("undefined"),
        }
    }
}

fn round_to(v: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (v * scale).round() / scale
}

/// `|expansion| / |shrinkage|`.
pub fn esr(expansion: usize, shrinkage: usize) -> Esr {
    match (expansion, shrinkage) {
        (0, 0) => Esr::Undefined,
        (_, 0) => Esr::Infinite,
        (e, s) => Esr::Finite(e as f64 / s as f64),
    }
}

/// How a printed ESR relates to the counts it was printed next to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportedEsr {
    /// Equals expansion / shrinkage at the printed precision.
    Consistent,
    /// Equals shrinkage / expansion instead: the ratio was likely transposed.
    Reciprocal,
    Inconsistent,
}

pub fn classify_reported_esr(
    expansion: usize,
    shrinkage: usize,
    reported: f64,
    decimals: u32,
) -> ReportedEsr {
    let same = |e: Esr| e.rounded(decimals) == Some(round_to(reported, decimals));
    if same(esr(expansion, shrinkage)) {
        ReportedEsr::Consistent
    } else if same(esr(shrinkage, expansion)) {
        ReportedEsr::Reciprocal
    } else {
        ReportedEsr::Inconsistent
    }
}

/// Partition of the problem set by which model solves each context at k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub k: usize,
    pub preservation: usize,
    pub expansion: usize,
    pub shrinkage: usize,
    /// Solved by neither model.
    pub out_of_support: usize,
    pub esr: Esr,
}

impl SupportReport {
    pub fn from_counts(
        k: usize,
        preservation: usize,
        expansion: usize,
        shrinkage: usize,
        out_of_support: usize,
    ) -> Self {
        Self {
            k,
            preservation,
            expansion,
            shrinkage,
            out_of_support,
            esr: esr(expansion, shrinkage),
        }
    }

    pub fn total(&self) -> usize {
        self.preservation + self.expansion + self.shrinkage + self.out_of_support
    }
}

/// Partition from per-context success flags; a context is solved iff one of
/// its first `k` flags is set.
pub fn support_from_flags(base: &[Vec<bool>], tuned: &[Vec<bool>], k: usize) -> Result<SupportReport> {
    if base.len() != tuned.len() {
        return Err(Error::input("base and tuned flag sets cover different contexts"));
    }
    if k == 0 {
        return Err(Error::input("k must be >= 1"));
    }
    let mut r = SupportReport::from_counts(k, 0, 0, 0, 0);
    for (i, (b, t)) in base.iter().zip(tuned).enumerate() {
        if b.len() < k || t.len() < k {
            return Err(Error::input(format!("context {i} has fewer than k = {k} samples")));
        }
        let sb = b[..k].iter().any(|&f| f);
        let st = t[..k].iter().any(|&f| f);
        match (sb, st) {
            (true, true) => r.preservation += 1,
            (false, true) => r.expansion += 1,
            (true, false) => r.shrinkage += 1,
            (false, false) => r.out_of_support += 1,
        }
    }
    r.esr = esr(r.expansion, r.shrinkage);
    Ok(r)
}

/// Partition of the shared context set of two sample logs.
pub fn support_partition<S>(base: &SampleLog, tuned: &SampleLog, success: S, k: usize) -> Result<SupportReport>
where
    S: Fn(&Sequence) -> Result<bool>,
{
    base.check_same_contexts(tuned)?;
    let flags = |log: &SampleLog| -> Result<Vec<Vec<bool>>> {
        base.context_ids()
            .map(|id| {
                let samples = log.samples(id).expect("checked context sets");
                samples.iter().take(k).map(|(s, _)| success(s)).collect()
            })
            .collect()
    };
    let (fb, ft) = (flags(base)?, flags(tuned)?);
    support_from_flags(&fb, &ft, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn esr_edge_cases() {
        assert_eq!(esr(0, 0), Esr::Undefined);
        assert_eq!(esr(3, 0), Esr::Infinite);
        assert_eq!(esr(7, 49).rounded(2), Some(0.14));
        assert!(esr(5, 4).value() > 1.0);
    }

    #[test]
    fn transposed_ratio_is_flagged() {
        assert_eq!(classify_reported_esr(12, 23, 1.92, 2), ReportedEsr::Reciprocal);
        assert_eq!(classify_reported_esr(9, 21, 2.33, 2), ReportedEsr::Reciprocal);
        assert_eq!(classify_reported_esr(7, 49, 0.14, 2), ReportedEsr::Consistent);
        assert_eq!(classify_reported_esr(7, 49, 0.3, 2), ReportedEsr::Inconsistent);
    }

    #[test]
    fn identical_flags_only_preserve() {
        let flags = vec![vec![true, false], vec![false, false], vec![false, true]];
        let r = support_from_flags(&flags, &flags, 2).unwrap();
        assert_eq!((r.preservation, r.expansion, r.shrinkage, r.out_of_support), (2, 0, 0, 1));
        assert_eq!(r.esr, Esr::Undefined);
    }

    #[test]
    fn uses_first_k_samples() {
        let base = vec![vec![false, true]];
        let tuned = vec![vec![true, false]];
        let r = support_from_flags(&base, &tuned, 1).unwrap();
        assert_eq!(r.expansion, 1);
        let r = support_from_flags(&base, &tuned, 2).unwrap();
        assert_eq!(r.preservation, 1);
    }
}
