use serde::{Deserialize, Serialize};

use crate::rewards::TableLandscape;
use crate::rng::RngStream;
use crate::sequence::Sequence;

/// Stratification bins over table fitness: `= 0`, `(0, 1]`, `(1, 10]`, `> 10`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessBin {
    Zero,
    UpToOne,
    UpToTen,
    AboveTen,
}

impl FitnessBin {
    pub const ALL: [FitnessBin; 4] = [
        FitnessBin::Zero,
        FitnessBin::UpToOne,
        FitnessBin::UpToTen,
        FitnessBin::AboveTen,
    ];
}

/// Bin of a fitness value; negative values (unlabeled or invalid) have none.
pub fn fitness_bin(fitness: f64) -> Option<FitnessBin> {
    if fitness == 0.0 {
        Some(FitnessBin::Zero)
    } else if fitness > 0.0 && fitness <= 1.0 {
        Some(FitnessBin::UpToOne)
    } else if fitness > 1.0 && fitness <= 10.0 {
        Some(FitnessBin::UpToTen)
    } else if fitness > 10.0 {
        Some(FitnessBin::AboveTen)
    } else {
        None
    }
}

/// Draws up to `per_bin` table variants from each bin without replacement,
/// returned bin by bin as full sequences.
pub fn fitness_bin_pool(
    landscape: &TableLandscape,
    per_bin: usize,
    rng: &mut RngStream,
) -> Vec<(FitnessBin, Sequence)> {
    let entries = landscape.entries();
    let mut out = Vec::new();
    for bin in FitnessBin::ALL {
        let mut members: Vec<&Vec<usize>> = entries
            .iter()
            .filter(|(_, f)| fitness_bin(*f) == Some(bin))
            .map(|(k, _)| k)
            .collect();
        let take = per_bin.min(members.len());
        // partial Fisher-Yates
        for i in 0..take {
            let j = i + rng.below(members.len() - i);
            members.swap(i, j);
        }
        out.extend(
            members[..take]
                .iter()
                .map(|k| (bin, landscape.sequence_for(k))),
        );
    }
    out
}
