//! Experiment configuration: one TOML document per run.
//!
//! Unknown keys are rejected, and every parse or validation error names the
//! offending field path (`rl.clip_eps`, `landscape.n`, ...).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use seqlab::alphabet::CANONICAL_AMINO_ACIDS;
use seqlab::envs::{fitness_bin_pool, AnnealSchedule, MutationEnv, RewardMode, DEFAULT_MAX_STEPS};
use seqlab::policy::{
    MarkovPolicy, MutationPolicy, PolicyCheckpoint, PositionCategoricalPolicy, DEFAULT_POSITION_WEIGHT,
};
use seqlab::rewards::{
    load_landscape_csv, phoq_like, LandscapeSchema, NKLandscape, NoisyOracle, PhoqLikeParams, TableLandscape,
    ThresholdClassifierReward, DEFAULT_CLASSIFIER_THRESHOLD, DEFAULT_INVALID_PENALTY, DEFAULT_UNLABELED,
    PHOQ_SITES,
};
use seqlab::rl::{Algorithm, RLConfig};
use seqlab::{Alphabet, RewardOracle, RngStream, Sequence, SuccessPredicate};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

// Independent random streams derived from the run seed.
const POLICY_INIT_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;
const SAMPLE_STREAM: u64 = 3;
const POOL_STREAM: u64 = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub policy: PolicySpec,
    pub landscape: LandscapeSpec,
    /// Corrupts the training reward only; evaluation always scores with the clean landscape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    pub training: TrainingSpec,
    #[serde(default)]
    pub rl: RLConfig,
    #[serde(default)]
    pub env: EnvSpec,
    #[serde(default)]
    pub anneal: AnnealSchedule,
    #[serde(default)]
    pub sampling: SamplingSpec,
    pub success: SuccessSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    /// Sequence-level generation scored as a whole.
    Generation,
    /// Multi-step editing of wild-type sequences.
    Mutation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyFamily {
    PositionCategorical,
    Markov,
    Mutation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyInit {
    #[default]
    Uniform,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub family: PolicyFamily,
    /// Defaults to the landscape's sequence length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<usize>,
    #[serde(default = "default_alphabet")]
    pub alphabet: String,
    #[serde(default)]
    pub init: PolicyInit,
    #[serde(default = "one")]
    pub init_scale: f64,
    /// Weight of the position term in mutation log-probabilities.
    #[serde(default = "default_position_weight")]
    pub position_weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LandscapeSpec {
    /// `variant,fitness` table on disk; relative paths resolve against the config file.
    Table {
        path: PathBuf,
        site_positions: Vec<usize>,
        wild_type: String,
        #[serde(default = "default_unlabeled")]
        unlabeled: f64,
        #[serde(default = "default_invalid_penalty")]
        invalid_penalty: f64,
    },
    Nk {
        n: usize,
        k: usize,
        #[serde(default)]
        seed: u64,
    },
    PhoqLike {
        #[serde(default = "default_high_fraction")]
        high_fraction: f64,
        #[serde(default = "one")]
        labeled_fraction: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `2 (f - lambda)` over an NK score in `[0, 1)`.
    Threshold {
        n: usize,
        k: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub corruption_rate: f64,
    pub flip_threshold: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSpec {
    pub algorithm: Algorithm,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolSpec {
    /// The landscape's own wild type.
    WildType,
    /// Up to `per_bin` table variants from each fitness bin.
    FitnessBins { per_bin: usize },
    /// Uniformly random sequences.
    Random { count: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Mutable positions; all positions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutable_positions: Option<Vec<usize>>,
    #[serde(default)]
    pub terminate_on_improvement: bool,
    #[serde(default)]
    pub reward_mode: RewardMode,
    #[serde(default = "default_pool")]
    pub pool: PoolSpec,
}

impl Default for EnvSpec {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            mutable_positions: None,
            terminate_on_improvement: false,
            reward_mode: RewardMode::PerStep,
            pool: PoolSpec::WildType,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    pub temperature: f64,
    pub top_p: f64,
    /// Number of contexts for generation; mutation runs use one context per pool sequence.
    pub contexts: usize,
    pub samples_per_context: usize,
    /// Largest k on the pass@k curve; defaults to `samples_per_context`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            top_p: 1.0,
            contexts: 16,
            samples_per_context: 32,
            k_max: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessSpec {
    pub threshold: f64,
    #[serde(default)]
    pub inclusive: bool,
}

impl SuccessSpec {
    pub fn predicate(&self) -> SuccessPredicate {
        SuccessPredicate {
            threshold: self.threshold,
            inclusive: self.inclusive,
        }
    }
}

fn default_alphabet() -> String {
    CANONICAL_AMINO_ACIDS.to_string()
}
fn one() -> f64 {
    1.0
}
fn default_position_weight() -> f64 {
    DEFAULT_POSITION_WEIGHT
}
fn default_unlabeled() -> f64 {
    DEFAULT_UNLABELED
}
fn default_invalid_penalty() -> f64 {
    DEFAULT_INVALID_PENALTY
}
fn default_high_fraction() -> f64 {
    PhoqLikeParams::default().high_fraction
}
fn default_lambda() -> f64 {
    DEFAULT_CLASSIFIER_THRESHOLD
}
fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}
fn default_pool() -> PoolSpec {
    PoolSpec::WildType
}

/// Everything derived from the landscape section.
#[derive(Clone)]
pub struct Landscape {
    pub oracle: Arc<dyn RewardOracle>,
    pub table: Option<Arc<TableLandscape>>,
    pub length: usize,
    pub wild_type: Option<Sequence>,
}

fn invalid(field: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {why}"))
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::parse(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Validation(format!("config field `{path}`: {}", inner.message().trim()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Relative paths in the document resolve against the config file's directory.
    fn resolve_paths(&mut self, base: &Path) {
        if let LandscapeSpec::Table { path, .. } = &mut self.landscape {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let Some(dir) = &mut self.output_dir {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
    }

    /// Canonical TOML form; its digest identifies the run.
    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Runtime(format!("cannot serialize config: {e}")))
    }

    pub fn hash(&self) -> Result<String, CliError> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn alphabet(&self) -> Result<Alphabet, CliError> {
        Alphabet::new(self.policy.alphabet.chars()).map_err(|e| invalid("policy.alphabet", e))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        let alphabet = self.alphabet()?;
        match (self.task, self.policy.family) {
            (Task::Mutation, PolicyFamily::Mutation) => {}
            (Task::Generation, PolicyFamily::PositionCategorical | PolicyFamily::Markov) => {}
            (task, family) => {
                return Err(invalid(
                    "policy.family",
                    format!("{family:?} does not fit task {task:?}"),
                ))
            }
        }
        if !(self.policy.init_scale >= 0.0 && self.policy.init_scale.is_finite()) {
            return Err(invalid("policy.init_scale", "must be finite and >= 0"));
        }
        if !(self.policy.position_weight >= 0.0 && self.policy.position_weight.is_finite()) {
            return Err(invalid("policy.position_weight", "must be finite and >= 0"));
        }
        match &self.landscape {
            LandscapeSpec::Table {
                site_positions,
                wild_type,
                ..
            } => {
                if site_positions.is_empty() {
                    return Err(invalid("landscape.site_positions", "must not be empty"));
                }
                let wt = alphabet.encode(wild_type).map_err(|e| invalid("landscape.wild_type", e))?;
                if let Some(&p) = site_positions.iter().find(|&&p| p >= wt.len()) {
                    return Err(invalid(
                        "landscape.site_positions",
                        format!("position {p} is outside the wild type of length {}", wt.len()),
                    ));
                }
            }
            LandscapeSpec::Nk { n, k, .. } | LandscapeSpec::Threshold { n, k, .. } => {
                if *n == 0 {
                    return Err(invalid("landscape.n", "must be >= 1"));
                }
                if k >= n {
                    return Err(invalid("landscape.k", format!("must be < n = {n}")));
                }
            }
            LandscapeSpec::PhoqLike {
                high_fraction,
                labeled_fraction,
                ..
            } => {
                if alphabet.symbols().iter().collect::<String>() != CANONICAL_AMINO_ACIDS {
                    return Err(invalid(
                        "policy.alphabet",
                        "phoq_like landscapes use the 20 canonical amino acids",
                    ));
                }
                if !(0.0..=1.0).contains(high_fraction) {
                    return Err(invalid("landscape.high_fraction", "must lie in [0, 1]"));
                }
                if !(*labeled_fraction > 0.0 && *labeled_fraction <= 1.0) {
                    return Err(invalid("landscape.labeled_fraction", "must lie in (0, 1]"));
                }
            }
        }
        if let LandscapeSpec::Threshold { lambda, .. } = &self.landscape {
            if !lambda.is_finite() {
                return Err(invalid("landscape.lambda", "must be finite"));
            }
        }
        let length = self.landscape_length()?;
        if let Some(l) = self.policy.length {
            if l != length {
                return Err(invalid(
                    "policy.length",
                    format!("{l} does not match the landscape sequence length {length}"),
                ));
            }
        }
        if let Some(noise) = &self.noise {
            if !(noise.noise_sd >= 0.0 && noise.noise_sd.is_finite()) {
                return Err(invalid("noise.noise_sd", "must be finite and >= 0"));
            }
            if !(0.0..=1.0).contains(&noise.corruption_rate) {
                return Err(invalid("noise.corruption_rate", "must lie in [0, 1]"));
            }
            if !noise.flip_threshold.is_finite() {
                return Err(invalid("noise.flip_threshold", "must be finite"));
            }
        }
        self.rl.validate().map_err(|e| match e {
            seqlab::Error::InvalidConfig(m) => CliError::Validation(m),
            other => CliError::Validation(format!("rl: {other}")),
        })?;
        if self.task == Task::Mutation && self.training.algorithm == Algorithm::Dpo {
            return Err(invalid("training.algorithm", "mutation runs support ppo and grpo"));
        }
        self.anneal
            .validate()
            .map_err(|e| invalid("anneal", e))?;
        if self.env.max_steps == 0 {
            return Err(invalid("env.max_steps", "must be >= 1"));
        }
        if let Some(m) = &self.env.mutable_positions {
            if m.is_empty() {
                return Err(invalid("env.mutable_positions", "must not be empty"));
            }
            if let Some(&p) = m.iter().find(|&&p| p >= length) {
                return Err(invalid(
                    "env.mutable_positions",
                    format!("position {p} is outside sequences of length {length}"),
                ));
            }
        }
        match &self.env.pool {
            PoolSpec::WildType if self.task == Task::Mutation && self.landscape_wild_type()?.is_none() => {
                return Err(invalid("env.pool", "this landscape has no wild type; use `random`"));
            }
            PoolSpec::FitnessBins { .. } if !self.has_table() && self.task == Task::Mutation => {
                return Err(invalid("env.pool", "fitness bins need a table landscape"));
            }
            PoolSpec::FitnessBins { per_bin: 0 } => return Err(invalid("env.pool.per_bin", "must be >= 1")),
            PoolSpec::Random { count: 0 } => return Err(invalid("env.pool.count", "must be >= 1")),
            _ => {}
        }
        let s = &self.sampling;
        if !(s.temperature > 0.0 && s.temperature.is_finite()) {
            return Err(invalid("sampling.temperature", "must be finite and > 0"));
        }
        if !(s.top_p > 0.0 && s.top_p <= 1.0) {
            return Err(invalid("sampling.top_p", "must lie in (0, 1]"));
        }
        if s.contexts == 0 {
            return Err(invalid("sampling.contexts", "must be >= 1"));
        }
        if s.samples_per_context == 0 {
            return Err(invalid("sampling.samples_per_context", "must be >= 1"));
        }
        if let Some(k) = s.k_max {
            if k == 0 || k > s.samples_per_context {
                return Err(invalid(
                    "sampling.k_max",
                    format!("must lie in [1, samples_per_context = {}]", s.samples_per_context),
                ));
            }
        }
        if !self.success.threshold.is_finite() {
            return Err(invalid("success.threshold", "must be finite"));
        }
        Ok(())
    }

    fn has_table(&self) -> bool {
        matches!(self.landscape, LandscapeSpec::Table { .. } | LandscapeSpec::PhoqLike { .. })
    }

    fn landscape_length(&self) -> Result<usize, CliError> {
        Ok(match &self.landscape {
            LandscapeSpec::Table { wild_type, .. } => wild_type.chars().count(),
            LandscapeSpec::Nk { n, .. } | LandscapeSpec::Threshold { n, .. } => *n,
            LandscapeSpec::PhoqLike { .. } => PHOQ_SITES,
        })
    }

    fn landscape_wild_type(&self) -> Result<Option<Sequence>, CliError> {
        let alphabet = self.alphabet()?;
        Ok(match &self.landscape {
            LandscapeSpec::Table { wild_type, .. } => {
                Some(Sequence::parse(wild_type, &alphabet).map_err(|e| invalid("landscape.wild_type", e))?)
            }
            LandscapeSpec::PhoqLike { .. } => Some(
                Sequence::parse(seqlab::rewards::PHOQ_WILD_TYPE, &alphabet)
                    .map_err(|e| invalid("landscape", e))?,
            ),
            _ => None,
        })
    }

    pub fn k_max(&self) -> usize {
        self.sampling.k_max.unwrap_or(self.sampling.samples_per_context)
    }

    pub fn policy_rng(&self) -> RngStream {
        RngStream::new(self.seed, POLICY_INIT_STREAM)
    }

    pub fn train_rng(&self) -> RngStream {
        RngStream::new(self.seed, TRAIN_STREAM)
    }

    pub fn sample_rng(&self) -> RngStream {
        RngStream::new(self.seed, SAMPLE_STREAM)
    }

    /// Clean landscape oracle; reads the table from disk when needed.
    pub fn build_landscape(&self) -> Result<Landscape, CliError> {
        let alphabet = self.alphabet()?;
        let a = alphabet.size();
        let length = self.landscape_length()?;
        let wild_type = self.landscape_wild_type()?;
        Ok(match &self.landscape {
            LandscapeSpec::Table {
                path,
                site_positions,
                unlabeled,
                invalid_penalty,
                ..
            } => {
                let schema = LandscapeSchema {
                    site_positions: site_positions.clone(),
                    wild_type: wild_type.clone().expect("table landscapes have a wild type"),
                };
                let mut table = load_landscape_csv(path, &schema, &alphabet)
                    .map_err(|e| invalid("landscape.path", e))?
                    .landscape;
                table.default_unlabeled = *unlabeled;
                table.invalid_penalty = *invalid_penalty;
                let table = Arc::new(table);
                Landscape {
                    oracle: table.clone(),
                    table: Some(table),
                    length,
                    wild_type,
                }
            }
            LandscapeSpec::PhoqLike {
                high_fraction,
                labeled_fraction,
                seed,
            } => {
                let table = Arc::new(
                    phoq_like(&PhoqLikeParams {
                        high_fraction: *high_fraction,
                        labeled_fraction: *labeled_fraction,
                        seed: *seed,
                    })
                    .map_err(|e| invalid("landscape", e))?,
                );
                Landscape {
                    oracle: table.clone(),
                    table: Some(table),
                    length,
                    wild_type,
                }
            }
            LandscapeSpec::Nk { n, k, seed } => Landscape {
                oracle: Arc::new(NKLandscape::generate(*n, *k, a, *seed).map_err(|e| invalid("landscape", e))?),
                table: None,
                length,
                wild_type,
            },
            LandscapeSpec::Threshold { n, k, seed, lambda } => {
                let nk = NKLandscape::generate(*n, *k, a, *seed).map_err(|e| invalid("landscape", e))?;
                Landscape {
                    oracle: Arc::new(ThresholdClassifierReward::new(Arc::new(nk), *lambda)),
                    table: None,
                    length,
                    wild_type,
                }
            }
        })
    }

    /// Reward used during training: the clean oracle, optionally corrupted.
    pub fn training_oracle(&self, landscape: &Landscape) -> Result<Arc<dyn RewardOracle>, CliError> {
        match &self.noise {
            None => Ok(landscape.oracle.clone()),
            Some(n) => Ok(Arc::new(
                NoisyOracle::new(
                    landscape.oracle.clone(),
                    n.noise_sd,
                    n.corruption_rate,
                    n.flip_threshold,
                    n.seed,
                )
                .map_err(|e| invalid("noise", e))?,
            )),
        }
    }

    /// Starting policy; `base` samples and training both begin here.
    pub fn initial_policy(&self) -> Result<PolicyCheckpoint<f64>, CliError> {
        let a = self.alphabet()?.size();
        let l = self.landscape_length()?;
        let scale = self.policy.init_scale;
        let mut rng = self.policy_rng();
        let random = self.policy.init == PolicyInit::Random;
        Ok(match self.policy.family {
            PolicyFamily::PositionCategorical => PolicyCheckpoint::PositionCategorical(if random {
                PositionCategoricalPolicy::random(l, a, scale, &mut rng)
            } else {
                PositionCategoricalPolicy::uniform(l, a)
            }),
            PolicyFamily::Markov => PolicyCheckpoint::Markov(if random {
                MarkovPolicy::random(l, a, scale, &mut rng)
            } else {
                MarkovPolicy::uniform(l, a)
            }),
            PolicyFamily::Mutation => {
                let mut p = if random {
                    MutationPolicy::random(l, a, scale, &mut rng)
                } else {
                    MutationPolicy::uniform(l, a)
                };
                p.set_position_weight(self.policy.position_weight);
                PolicyCheckpoint::Mutation(p)
            }
        })
    }

    /// Rejects checkpoints whose family or dimensions disagree with this config.
    pub fn check_checkpoint(&self, ckpt: &PolicyCheckpoint<f64>) -> Result<(), CliError> {
        let expected = self.initial_policy()?;
        if ckpt.family() != expected.family()
            || ckpt.length() != expected.length()
            || ckpt.alphabet_size() != expected.alphabet_size()
        {
            return Err(CliError::Validation(format!(
                "invalid configuration: checkpoint is {} L={} A={}, config expects {} L={} A={}",
                ckpt.family(),
                ckpt.length(),
                ckpt.alphabet_size(),
                expected.family(),
                expected.length(),
                expected.alphabet_size()
            )));
        }
        Ok(())
    }

    /// Wild-type pool of the mutation environment, in a fixed order.
    pub fn pool(&self, landscape: &Landscape) -> Result<Vec<Sequence>, CliError> {
        let a = self.alphabet()?.size();
        let mut rng = RngStream::new(self.seed, POOL_STREAM);
        let pool = match &self.env.pool {
            PoolSpec::WildType => vec![landscape
                .wild_type
                .clone()
                .ok_or_else(|| invalid("env.pool", "landscape has no wild type"))?],
            PoolSpec::FitnessBins { per_bin } => {
                let table = landscape
                    .table
                    .as_ref()
                    .ok_or_else(|| invalid("env.pool", "fitness bins need a table landscape"))?;
                fitness_bin_pool(table, *per_bin, &mut rng)
                    .into_iter()
                    .map(|(_, s)| s)
                    .collect()
            }
            PoolSpec::Random { count } => (0..*count)
                .map(|_| {
                    let tokens = (0..landscape.length).map(|_| rng.below(a)).collect();
                    Sequence::new(tokens, a).map_err(|e| invalid("env.pool", e))
                })
                .collect::<Result<_, _>>()?,
        };
        if pool.is_empty() {
            return Err(invalid("env.pool", "pool is empty"));
        }
        Ok(pool)
    }

    pub fn mutation_env(&self, landscape: &Landscape, reward: Arc<dyn RewardOracle>) -> Result<MutationEnv, CliError> {
        let a = self.alphabet()?.size();
        let l = landscape.length;
        let mask = match &self.env.mutable_positions {
            None => vec![true; l],
            Some(ps) => {
                let mut m = vec![false; l];
                for &p in ps {
                    m[p] = true;
                }
                m
            }
        };
        let mut env = MutationEnv::new(self.pool(landscape)?, mask, self.env.max_steps, a, reward)
            .map_err(|e| invalid("env", e))?;
        env.terminate_on_improvement = self.env.terminate_on_improvement;
        env.reward_mode = self.env.reward_mode;
        Ok(env)
    }
}
