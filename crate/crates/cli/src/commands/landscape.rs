use std::path::PathBuf;

use seqlab::alphabet::CANONICAL_AMINO_ACIDS;
use seqlab::rewards::{phoq_like, write_landscape_csv, NKLandscape, PhoqLikeParams, TableLandscape};
use seqlab::{Alphabet, Sequence};

use crate::error::CliError;
use crate::manifest::Artifacts;
use crate::{LandscapeArgs, LandscapeKind};

/// Largest complete NK table we are willing to enumerate.
pub const MAX_TABLE_ROWS: usize = 2_000_000;

pub const LANDSCAPE_FILE: &str = "landscape.csv";

/// Complete table of an NK landscape over the first `alphabet_size` canonical residues.
pub fn nk_table(n: usize, k: usize, alphabet_size: usize, seed: u64) -> Result<(TableLandscape, Alphabet), CliError> {
    if !(2..=CANONICAL_AMINO_ACIDS.len()).contains(&alphabet_size) {
        return Err(CliError::Validation(format!(
            "--alphabet-size must lie in [2, {}]",
            CANONICAL_AMINO_ACIDS.len()
        )));
    }
    let rows = (alphabet_size as f64).powi(n as i32);
    if rows > MAX_TABLE_ROWS as f64 {
        return Err(CliError::Validation(format!(
            "{alphabet_size}^{n} rows exceeds the {MAX_TABLE_ROWS}-row limit"
        )));
    }
    let nk = NKLandscape::generate(n, k, alphabet_size, seed)?;
    let alphabet = Alphabet::new(CANONICAL_AMINO_ACIDS.chars().take(alphabet_size))?;
    let wild_type = Sequence::new(vec![0; n], alphabet_size)?;
    let mut table = TableLandscape::new((0..n).collect(), wild_type, alphabet_size)?;
    let mut tokens = vec![0usize; n];
    for _ in 0..rows as usize {
        let f = nk.fitness(&Sequence::new(tokens.clone(), alphabet_size)?)?;
        table.insert(&tokens, f)?;
        // odometer increment, last site fastest
        for t in tokens.iter_mut().rev() {
            *t += 1;
            if *t < alphabet_size {
                break;
            }
            *t = 0;
        }
    }
    Ok((table, alphabet))
}

pub fn make_landscape(args: &LandscapeArgs) -> Result<PathBuf, CliError> {
    let (table, alphabet) = match args.kind {
        LandscapeKind::Nk => {
            let n = args
                .n
                .ok_or_else(|| CliError::Validation("nk landscapes need --n".into()))?;
            let k = args
                .k
                .ok_or_else(|| CliError::Validation("nk landscapes need --k".into()))?;
            nk_table(n, k, args.alphabet_size, args.seed)?
        }
        LandscapeKind::PhoqLike => {
            if args.n.is_some() || args.k.is_some() {
                return Err(CliError::Validation("--n and --k apply to nk landscapes only".into()));
            }
            let table = phoq_like(&PhoqLikeParams {
                high_fraction: args.high_fraction,
                labeled_fraction: args.labeled_fraction,
                seed: args.seed,
            })?;
            (table, Alphabet::amino_acids())
        }
    };
    let mut csv = Vec::new();
    write_landscape_csv(&table, &alphabet, &mut csv)?;
    let mut art = Artifacts::new("make-landscape", None, Some(args.seed));
    art.add(LANDSCAPE_FILE, csv);
    art.commit(&args.out, "completed")?;
    Ok(args.out.clone())
}
