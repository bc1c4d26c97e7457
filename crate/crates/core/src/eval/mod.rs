//! Base-versus-tuned comparison metrics.

mod metrics;
mod passk;
mod samples;
mod support;

pub use metrics::{
    identity, novelty, pairwise_diversity, pairwise_similarity, perplexity, positional_entropy,
    recovery_rate,
};
pub use passk::{pass_at_k, pass_at_k_curve, pass_at_k_plugin, pass_at_k_unbiased, Estimator, PassAtK};
pub use samples::{SampleLog, SampleRecord};
pub use support::{
    classify_reported_esr, esr, support_from_flags, support_partition, Esr, ReportedEsr,
    SupportReport,
};
