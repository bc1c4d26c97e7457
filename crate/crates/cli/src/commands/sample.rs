use std::path::PathBuf;

use rayon::prelude::*;

use seqlab::envs::{rollout_from, AnnealSchedule};
use seqlab::eval::SampleLog;
use seqlab::policy::{PolicyCheckpoint, SequencePolicy};
use seqlab::rl::LinearValue;
use seqlab::Sequence;

use super::{load_config, output_dir};
use crate::config::{ExperimentConfig, Landscape};
use crate::error::CliError;
use crate::manifest::Artifacts;
use crate::SampleArgs;

pub const SAMPLES_FILE: &str = "samples.jsonl";

type ContextSamples = (String, Vec<(Sequence, f64)>);

/// `samples_per_context` draws for each context. Context `c` uses the sample
/// stream forked at `c`, so the log is independent of the worker count.
pub fn draw_samples(
    cfg: &ExperimentConfig,
    landscape: &Landscape,
    policy: &PolicyCheckpoint<f64>,
    tag: &str,
) -> Result<SampleLog, CliError> {
    let per_context: Vec<ContextSamples> = match policy {
        PolicyCheckpoint::PositionCategorical(p) => generate(cfg, p)?,
        PolicyCheckpoint::Markov(p) => generate(cfg, p)?,
        PolicyCheckpoint::Mutation(p) => {
            let alphabet = cfg.alphabet()?;
            let env = cfg.mutation_env(landscape, landscape.oracle.clone())?;
            let schedule = AnnealSchedule::constant(cfg.sampling.temperature);
            let value = LinearValue::constant();
            let pool = env.pool().to_vec();
            pool.into_par_iter()
                .enumerate()
                .map(|(c, start)| {
                    let mut env = env.clone();
                    let mut rng = cfg.sample_rng().fork(c as u64);
                    let id = format!("{c}:{}", start.to_text(&alphabet));
                    let draws = (0..cfg.sampling.samples_per_context)
                        .map(|_| {
                            let t = rollout_from(&mut env, start.clone(), p, &value, &schedule, 0, &mut rng)?;
                            Ok((t.final_state, t.log_probs_old.iter().sum()))
                        })
                        .collect::<seqlab::Result<_>>()?;
                    Ok((id, draws))
                })
                .collect::<seqlab::Result<_>>()?
        }
    };
    let mut log = SampleLog::new(tag);
    for (id, draws) in per_context {
        for (s, lp) in draws {
            log.push(&id, s, lp);
        }
    }
    Ok(log)
}

fn generate<P: SequencePolicy<f64>>(cfg: &ExperimentConfig, policy: &P) -> Result<Vec<ContextSamples>, CliError> {
    let s = &cfg.sampling;
    Ok((0..s.contexts)
        .into_par_iter()
        .map(|c| {
            let mut rng = cfg.sample_rng().fork(c as u64);
            let draws = (0..s.samples_per_context)
                .map(|_| {
                    let seq = policy.sample(s.temperature, s.top_p, &mut rng)?;
                    let lp = policy.log_prob(&seq)?;
                    Ok((seq, lp))
                })
                .collect::<seqlab::Result<_>>()?;
            Ok((format!("ctx{c}"), draws))
        })
        .collect::<seqlab::Result<_>>()?)
}

pub fn sample(args: &SampleArgs) -> Result<PathBuf, CliError> {
    let cfg = load_config(&args.run)?;
    let policy = match &args.checkpoint {
        Some(path) => {
            let ckpt = PolicyCheckpoint::load(path)?;
            cfg.check_checkpoint(&ckpt)?;
            ckpt
        }
        None => cfg.initial_policy()?,
    };
    let tag = args
        .tag
        .clone()
        .unwrap_or_else(|| if args.checkpoint.is_some() { "tuned" } else { "base" }.to_string());
    if tag.trim().is_empty() {
        return Err(CliError::Validation("--tag must not be empty".into()));
    }
    let out = output_dir(&args.run, &cfg, Some(&format!("samples-{tag}")))?;
    let landscape = cfg.build_landscape()?;
    let log = draw_samples(&cfg, &landscape, &policy, &tag)?;

    let mut bytes = Vec::new();
    log.write_jsonl(&mut bytes, &cfg.alphabet()?)?;
    let mut art = Artifacts::new("sample", Some(cfg.hash()?), Some(cfg.seed));
    art.add("config.toml", cfg.to_toml()?.into_bytes());
    art.add(SAMPLES_FILE, bytes);
    art.commit(&out, "completed")?;
    Ok(out)
}
