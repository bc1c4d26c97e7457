use std::io::Write;

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use crate::error::{Error, Result};

/// Metrics of one training step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub policy_loss: f64,
    pub kl: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_reward: f64,
    pub clipped_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub algorithm: Algorithm,
    pub records: Vec<StepRecord>,
}

impl TrainingReport {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            records: Vec::new(),
        }
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(|e| Error::input(e.to_string()))?;
            writeln!(out, "{line}").map_err(|e| Error::io("<training report>", e))?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(|e| Error::input(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<training report>", e))
    }

    pub fn mean_rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.mean_reward).collect()
    }
}
