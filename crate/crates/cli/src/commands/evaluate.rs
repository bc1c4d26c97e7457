use std::io::BufReader;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use seqlab::dist::LogBase;
use seqlab::eval::{
    novelty, pairwise_diversity, pass_at_k_curve, perplexity, positional_entropy, recovery_rate,
    support_from_flags, Estimator, SampleLog, SupportReport,
};
use seqlab::{Alphabet, Sequence};

use super::{csv_bytes, load_config, output_dir};
use crate::config::{ExperimentConfig, Landscape};
use crate::error::CliError;
use crate::manifest::Artifacts;
use crate::EvaluateArgs;

/// Pairwise metrics use at most this many samples per model, taken in log order.
pub const PAIRWISE_CAP: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub tag: String,
    pub samples: usize,
    pub mean_reward: f64,
    pub success_rate: f64,
    pub pass_at_1_plugin: f64,
    pub pass_at_1_unbiased: f64,
    pub pass_at_k_max_plugin: f64,
    pub pass_at_k_max_unbiased: f64,
    pub perplexity: f64,
    pub diversity: f64,
    pub novelty: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recovery: Option<f64>,
    pub mean_entropy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub name: String,
    pub contexts: usize,
    pub k_max: usize,
    pub base: ModelSummary,
    pub tuned: ModelSummary,
    /// Partition at `k_max`.
    pub support: SupportReport,
    pub esr: String,
    pub esr_computable: bool,
    pub pass_at_k_non_decreasing: bool,
}

/// Report rows and the summary, ready to be written.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub summary: EvaluationSummary,
    pub passk: Vec<PassRow>,
    pub support: Vec<SupportRow>,
    pub entropy: Vec<EntropyRow>,
    pub metrics: Vec<MetricRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PassRow {
    pub model: String,
    pub estimator: &'static str,
    pub k: usize,
    pub pass_at_k: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupportRow {
    pub k: usize,
    pub preservation: usize,
    pub expansion: usize,
    pub shrinkage: usize,
    pub out_of_support: usize,
    pub esr: String,
    pub esr_value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyRow {
    pub model: String,
    pub position: usize,
    pub entropy_nats: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricRow {
    pub model: String,
    pub metric: &'static str,
    pub value: f64,
}

struct Scored {
    flags: Vec<Vec<bool>>,
    rewards: Vec<f64>,
}

fn score(log: &SampleLog, landscape: &Landscape, cfg: &ExperimentConfig) -> Result<Scored, CliError> {
    let success = cfg.success.predicate();
    let ids: Vec<&str> = log.context_ids().collect();
    let per_context: Vec<(Vec<bool>, Vec<f64>)> = ids
        .par_iter()
        .map(|id| {
            let samples = log.samples(id).expect("id comes from the log");
            let rewards = samples
                .iter()
                .map(|(s, _)| landscape.oracle.score(s))
                .collect::<seqlab::Result<Vec<f64>>>()?;
            Ok((rewards.iter().map(|&r| success.is_success(r)).collect(), rewards))
        })
        .collect::<seqlab::Result<_>>()?;
    let (flags, rewards): (Vec<_>, Vec<_>) = per_context.into_iter().unzip();
    Ok(Scored {
        flags,
        rewards: rewards.into_iter().flatten().collect(),
    })
}

/// Native sequence per context, when one is known.
fn natives(log: &SampleLog, landscape: &Landscape, alphabet: &Alphabet) -> Option<Vec<Sequence>> {
    log.context_ids()
        .map(|id| match id.split_once(':') {
            Some((_, text)) => Sequence::parse(text, alphabet).ok(),
            None => landscape.wild_type.clone(),
        })
        .collect()
}

fn non_decreasing(curve: &[(usize, f64)]) -> bool {
    curve.windows(2).all(|w| w[1].1 >= w[0].1)
}

#[allow(clippy::too_many_arguments)]
fn model_rows(
    log: &SampleLog,
    other: &SampleLog,
    scored: &Scored,
    natives: Option<&[Sequence]>,
    landscape: &Landscape,
    alphabet: &Alphabet,
    k_max: usize,
    ev: &mut Evaluation,
) -> Result<(ModelSummary, bool), CliError> {
    let tag = log.model_tag().to_string();
    let mut monotone = true;
    let mut at = |est: Estimator| -> Result<(f64, f64), CliError> {
        let curve = pass_at_k_curve(&scored.flags, k_max, est)?;
        monotone &= non_decreasing(&curve);
        for &(k, v) in &curve {
            ev.passk.push(PassRow {
                model: tag.clone(),
                estimator: est.name(),
                k,
                pass_at_k: v,
            });
        }
        Ok((curve[0].1, curve[curve.len() - 1].1))
    };
    let (p1, pk) = at(Estimator::Plugin)?;
    let (u1, uk) = at(Estimator::Unbiased)?;

    let seqs: Vec<Sequence> = log.all_sequences().cloned().collect();
    let positions: Vec<usize> = (0..landscape.length).collect();
    let entropy = positional_entropy(&seqs, &positions, alphabet.size(), LogBase::Natural)?;
    for (&position, &h) in positions.iter().zip(&entropy) {
        ev.entropy.push(EntropyRow {
            model: tag.clone(),
            position,
            entropy_nats: h,
        });
    }

    let mut log_probs = Vec::with_capacity(seqs.len());
    for id in log.context_ids() {
        log_probs.extend(log.samples(id).expect("own id").iter().map(|&(_, lp)| lp));
    }
    let counts: Vec<usize> = seqs.iter().map(Sequence::len).collect();
    let ppl = perplexity(&log_probs, &counts)?;

    let capped: Vec<Sequence> = seqs.iter().take(PAIRWISE_CAP).cloned().collect();
    let other_capped: Vec<Sequence> = other.all_sequences().take(PAIRWISE_CAP).cloned().collect();
    let diversity = if capped.len() >= 2 { pairwise_diversity(&capped)? } else { 0.0 };
    let nov = novelty(&capped, &other_capped)?;

    let recovery = match natives {
        Some(natives) => {
            let mut total = 0.0;
            let mut n = 0usize;
            for (id, native) in log.context_ids().zip(natives) {
                for (s, _) in log.samples(id).expect("own id") {
                    total += recovery_rate(s, native)?;
                    n += 1;
                }
            }
            Some(total / n as f64)
        }
        None => None,
    };

    let n = scored.rewards.len();
    let mean_reward = scored.rewards.iter().sum::<f64>() / n as f64;
    let successes = scored.flags.iter().flatten().filter(|&&f| f).count();
    let summary = ModelSummary {
        tag: tag.clone(),
        samples: n,
        mean_reward,
        success_rate: successes as f64 / n as f64,
        pass_at_1_plugin: p1,
        pass_at_1_unbiased: u1,
        pass_at_k_max_plugin: pk,
        pass_at_k_max_unbiased: uk,
        perplexity: ppl,
        diversity,
        novelty: nov,
        recovery,
        mean_entropy: entropy.iter().sum::<f64>() / entropy.len().max(1) as f64,
    };
    let mut metric = |metric: &'static str, value: f64| {
        ev.metrics.push(MetricRow {
            model: tag.clone(),
            metric,
            value,
        })
    };
    metric("mean_reward", summary.mean_reward);
    metric("success_rate", summary.success_rate);
    metric("perplexity", summary.perplexity);
    metric("diversity", summary.diversity);
    metric("novelty", summary.novelty);
    if let Some(r) = summary.recovery {
        metric("recovery", r);
    }
    metric("mean_entropy_nats", summary.mean_entropy);
    Ok((summary, monotone))
}

/// Scores both logs with the clean landscape and assembles every report table.
pub fn evaluate_logs(
    cfg: &ExperimentConfig,
    landscape: &Landscape,
    base: &SampleLog,
    tuned: &SampleLog,
) -> Result<Evaluation, CliError> {
    base.check_same_contexts(tuned)?;
    if base.num_contexts() == 0 {
        return Err(CliError::Validation("sample logs are empty".into()));
    }
    let alphabet = cfg.alphabet()?;
    let k_max = cfg.k_max().min(base.k_max()).min(tuned.k_max());
    if k_max == 0 {
        return Err(CliError::Validation("a context has no samples".into()));
    }
    let sb = score(base, landscape, cfg)?;
    let st = score(tuned, landscape, cfg)?;
    let nat = natives(base, landscape, &alphabet);

    let mut ev = Evaluation {
        summary: EvaluationSummary {
            name: cfg.name.clone(),
            contexts: base.num_contexts(),
            k_max,
            base: placeholder(),
            tuned: placeholder(),
            support: SupportReport::from_counts(k_max, 0, 0, 0, 0),
            esr: String::new(),
            esr_computable: false,
            pass_at_k_non_decreasing: false,
        },
        passk: Vec::new(),
        support: Vec::new(),
        entropy: Vec::new(),
        metrics: Vec::new(),
    };
    let (bsum, bmono) = model_rows(base, tuned, &sb, nat.as_deref(), landscape, &alphabet, k_max, &mut ev)?;
    let (tsum, tmono) = model_rows(tuned, base, &st, nat.as_deref(), landscape, &alphabet, k_max, &mut ev)?;

    let mut k = 1;
    let mut ks = Vec::new();
    while k < k_max {
        ks.push(k);
        k *= 2;
    }
    ks.push(k_max);
    let mut last = None;
    for &k in &ks {
        let r = support_from_flags(&sb.flags, &st.flags, k)?;
        ev.support.push(SupportRow {
            k,
            preservation: r.preservation,
            expansion: r.expansion,
            shrinkage: r.shrinkage,
            out_of_support: r.out_of_support,
            esr: r.esr.to_string(),
            esr_value: r.esr.value(),
        });
        last = Some(r);
    }
    let support = last.expect("at least one k");
    ev.summary.base = bsum;
    ev.summary.tuned = tsum;
    ev.summary.esr = support.esr.to_string();
    ev.summary.esr_computable = support.esr.is_computable();
    ev.summary.support = support;
    ev.summary.pass_at_k_non_decreasing = bmono && tmono;
    Ok(ev)
}

fn placeholder() -> ModelSummary {
    ModelSummary {
        tag: String::new(),
        samples: 0,
        mean_reward: 0.0,
        success_rate: 0.0,
        pass_at_1_plugin: 0.0,
        pass_at_1_unbiased: 0.0,
        pass_at_k_max_plugin: 0.0,
        pass_at_k_max_unbiased: 0.0,
        perplexity: 0.0,
        diversity: 0.0,
        novelty: 0.0,
        recovery: None,
        mean_entropy: 0.0,
    }
}

fn read_log(path: &Path, alphabet: &Alphabet) -> Result<SampleLog, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    SampleLog::read_jsonl(BufReader::new(file), alphabet)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn evaluate(args: &EvaluateArgs) -> Result<PathBuf, CliError> {
    let cfg = load_config(&args.run)?;
    let alphabet = cfg.alphabet()?;
    let base = read_log(&args.base, &alphabet)?;
    let tuned = read_log(&args.tuned, &alphabet)?;
    let out = output_dir(&args.run, &cfg, Some("eval"))?;
    let landscape = cfg.build_landscape()?;
    let ev = evaluate_logs(&cfg, &landscape, &base, &tuned)?;

    let mut summary = serde_json::to_vec_pretty(&ev.summary)
        .map_err(|e| CliError::Runtime(format!("cannot serialize summary: {e}")))?;
    summary.push(b'\n');
    let mut art = Artifacts::new("evaluate", Some(cfg.hash()?), Some(cfg.seed));
    art.add("config.toml", cfg.to_toml()?.into_bytes());
    art.add("passk.csv", csv_bytes(&ev.passk)?);
    art.add("support.csv", csv_bytes(&ev.support)?);
    art.add("entropy.csv", csv_bytes(&ev.entropy)?);
    art.add("metrics.csv", csv_bytes(&ev.metrics)?);
    art.add("summary.json", summary);
    art.commit(&out, "completed")?;
    Ok(out)
}
