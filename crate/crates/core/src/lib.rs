//! A desk-scale laboratory for fine-tuning generative sequence policies with
//! preference and policy-gradient methods.
//!
//! Policies are exact linear-softmax models, so every likelihood, gradient and
//! KL term is closed form. The crate is generic over the scalar type (`f32` or
//! `f64`); the aliases at the root fix it to `f64`, with `f32` variants where
//! reduced precision is useful.

pub mod alphabet;
pub mod dist;
pub mod envs;
pub mod error;
pub mod eval;
pub mod policy;
pub mod rewards;
pub mod rl;
pub mod rng;
pub mod scalar;
pub mod sequence;

pub use alphabet::Alphabet;
pub use error::{Error, Result};
pub use rewards::{RewardOracle, SuccessPredicate};
pub use rng::RngStream;
pub use scalar::Real;
pub use sequence::Sequence;

pub type CategoricalDist = dist::CategoricalDist<f64>;
pub type PositionCategoricalPolicy = policy::PositionCategoricalPolicy<f64>;
pub type MarkovPolicy = policy::MarkovPolicy<f64>;
pub type MutationPolicy = policy::MutationPolicy<f64>;
pub type PolicyCheckpoint = policy::PolicyCheckpoint<f64>;
pub type Trajectory = envs::Trajectory<f64>;
pub type LinearValue = rl::LinearValue<f64>;

pub type CategoricalDistF32 = dist::CategoricalDist<f32>;
pub type PositionCategoricalPolicyF32 = policy::PositionCategoricalPolicy<f32>;
pub type MarkovPolicyF32 = policy::MarkovPolicy<f32>;
pub type MutationPolicyF32 = policy::MutationPolicy<f32>;
