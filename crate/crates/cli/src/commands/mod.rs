mod evaluate;
mod landscape;
mod sample;
mod train;

use std::path::PathBuf;

pub use evaluate::{evaluate, evaluate_logs, Evaluation, EvaluationSummary, ModelSummary};
pub use landscape::{make_landscape, nk_table};
pub use sample::{draw_samples, sample};
pub use train::{train, train_policy};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::manifest::{manifest_location, read_manifest, verify};
use crate::{RunArgs, VerifyArgs};

/// Loads the config and applies the `--seed` override.
pub(crate) fn load_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// `--out` wins; otherwise `output_dir` joined with `subdir`.
pub(crate) fn output_dir(args: &RunArgs, cfg: &ExperimentConfig, subdir: Option<&str>) -> Result<PathBuf, CliError> {
    if let Some(out) = &args.out {
        return Ok(out.clone());
    }
    match (&cfg.output_dir, subdir) {
        (Some(d), Some(s)) => Ok(d.join(s)),
        (Some(d), None) => Ok(d.clone()),
        (None, _) => Err(CliError::Validation(
            "no output directory: pass --out or set `output_dir` in the config".into(),
        )),
    }
}

pub(crate) fn csv_bytes<T: serde::Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Runtime(format!("csv write failed: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Runtime(format!("csv write failed: {e}")))
}

pub fn verify_manifest(args: &VerifyArgs) -> Result<usize, CliError> {
    let (dir, path) = manifest_location(&args.path);
    let manifest = read_manifest(&path)?;
    let problems = verify(&dir, &manifest);
    if problems.is_empty() {
        Ok(manifest.files.len())
    } else {
        let list: Vec<String> = problems.iter().map(|p| p.to_string()).collect();
        Err(CliError::Validation(format!(
            "manifest {} does not match: {}",
            path.display(),
            list.join("; ")
        )))
    }
}

