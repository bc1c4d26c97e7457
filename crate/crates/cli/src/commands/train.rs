use std::path::PathBuf;

use seqlab::policy::PolicyCheckpoint;
use seqlab::rl::{train_mutation, train_sequence, TrainingReport};

use super::{load_config, output_dir};
use crate::config::{ExperimentConfig, Landscape};
use crate::error::CliError;
use crate::manifest::Artifacts;
use crate::RunArgs;

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const LAST_GOOD_FILE: &str = "checkpoint_last_good.txt";

/// Trains `policy` in place per the config.
pub fn train_policy(
    cfg: &ExperimentConfig,
    landscape: &Landscape,
    policy: &mut PolicyCheckpoint<f64>,
) -> seqlab::Result<TrainingReport> {
    let reward = cfg
        .training_oracle(landscape)
        .map_err(|e| seqlab::Error::InvalidConfig(e.to_string()))?;
    let (alg, steps, rng) = (cfg.training.algorithm, cfg.training.steps, cfg.train_rng());
    match policy {
        PolicyCheckpoint::PositionCategorical(p) => train_sequence(p, alg, &*reward, &cfg.rl, steps, &rng),
        PolicyCheckpoint::Markov(p) => train_sequence(p, alg, &*reward, &cfg.rl, steps, &rng),
        PolicyCheckpoint::Mutation(p) => {
            let env = cfg
                .mutation_env(landscape, reward)
                .map_err(|e| seqlab::Error::InvalidConfig(e.to_string()))?;
            train_mutation(p, alg, &env, &cfg.anneal, &cfg.rl, steps, &rng)
        }
    }
}

pub fn train(args: &RunArgs) -> Result<PathBuf, CliError> {
    let cfg = load_config(args)?;
    let out = output_dir(args, &cfg, None)?;
    let landscape = cfg.build_landscape()?;
    let mut policy = cfg.initial_policy()?;
    // fail on bad env settings before any training time is spent
    if cfg.task == crate::config::Task::Mutation {
        cfg.mutation_env(&landscape, landscape.oracle.clone())?;
    }

    let mut art = Artifacts::new("train", Some(cfg.hash()?), Some(cfg.seed));
    art.add("config.toml", cfg.to_toml()?.into_bytes());
    match train_policy(&cfg, &landscape, &mut policy) {
        Ok(report) => {
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            let mut jsonl = Vec::new();
            report.write_jsonl(&mut jsonl)?;
            art.add(CHECKPOINT_FILE, policy.to_text().into_bytes());
            art.add("training.csv", csv);
            art.add("training.jsonl", jsonl);
            art.commit(&out, "completed")?;
            Ok(out)
        }
        Err(e @ seqlab::Error::Diverged { .. }) => {
            art.add(LAST_GOOD_FILE, policy.to_text().into_bytes());
            art.commit(&out, "diverged")?;
            Err(CliError::Diverged {
                message: e.to_string(),
                checkpoint: out.join(LAST_GOOD_FILE),
            })
        }
        Err(e) => Err(e.into()),
    }
}
