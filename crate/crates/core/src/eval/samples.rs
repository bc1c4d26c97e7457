use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// One line of a sample log file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub context_id: String,
    pub model_tag: String,
    pub sample_index: usize,
    pub sequence: String,
    pub log_prob: f64,
}

/// Samples per context from one generator, kept in generation order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleLog {
    model_tag: String,
    order: Vec<String>,
    index: HashMap<String, usize>,
    samples: Vec<Vec<(Sequence, f64)>>,
}

impl SampleLog {
    pub fn new(model_tag: impl Into<String>) -> Self {
        Self {
            model_tag: model_tag.into(),
            ..Self::default()
        }
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn push(&mut self, context_id: &str, sequence: Sequence, log_prob: f64) {
        let slot = match self.index.get(context_id) {
            Some(&i) => i,
            None => {
                self.order.push(context_id.to_string());
                self.samples.push(Vec::new());
                self.index.insert(context_id.to_string(), self.order.len() - 1);
                self.order.len() - 1
            }
        };
        self.samples[slot].push((sequence, log_prob));
    }

    /// Context ids in first-appearance order.
    pub fn context_ids(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    pub fn num_contexts(&self) -> usize {
        self.order.len()
    }

    pub fn samples(&self, context_id: &str) -> Option<&[(Sequence, f64)]> {
        self.index.get(context_id).map(|&i| self.samples[i].as_slice())
    }

    /// Largest k every context supports.
    pub fn k_max(&self) -> usize {
        self.samples.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn all_sequences(&self) -> impl Iterator<Item = &Sequence> {
        self.samples.iter().flatten().map(|(s, _)| s)
    }

    /// Errors listing the contexts present in only one of the logs.
    pub fn check_same_contexts(&self, other: &SampleLog) -> Result<()> {
        let only_self: Vec<&str> = self.context_ids().filter(|c| other.samples(c).is_none()).collect();
        let only_other: Vec<&str> = other.context_ids().filter(|c| self.samples(c).is_none()).collect();
        if only_self.is_empty() && only_other.is_empty() {
            return Ok(());
        }
        Err(Error::input(format!(
            "sample logs cover different contexts: only in `{}`: {:?}; only in `{}`: {:?}",
            self.model_tag, only_self, other.model_tag, only_other
        )))
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W, alphabet: &Alphabet) -> Result<()> {
        for (ctx, samples) in self.order.iter().zip(&self.samples) {
            for (i, (seq, lp)) in samples.iter().enumerate() {
                let rec = SampleRecord {
                    context_id: ctx.clone(),
                    model_tag: self.model_tag.clone(),
                    sample_index: i,
                    sequence: seq.to_text(alphabet),
                    log_prob: *lp,
                };
                let line = serde_json::to_string(&rec).map_err(|e| Error::input(e.to_string()))?;
                writeln!(out, "{line}").map_err(|e| Error::io("<sample log>", e))?;
            }
        }
        Ok(())
    }

    /// Reads a log; per context, `sample_index` must run 0, 1, 2, ... in file order
    /// and every record must carry the same model tag.
    pub fn read_jsonl<R: BufRead>(input: R, alphabet: &Alphabet) -> Result<Self> {
        let mut log: Option<SampleLog> = None;
        for (n, line) in input.lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::io("<sample log>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: SampleRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            let log = log.get_or_insert_with(|| SampleLog::new(rec.model_tag.clone()));
            if rec.model_tag != log.model_tag {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("model tag `{}` differs from `{}`", rec.model_tag, log.model_tag),
                });
            }
            let expected = log.samples(&rec.context_id).map_or(0, <[_]>::len);
            if rec.sample_index != expected {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "context `{}`: sample_index {} where {expected} was expected",
                        rec.context_id, rec.sample_index
                    ),
                });
            }
            let seq = Sequence::parse(&rec.sequence, alphabet).map_err(|e| Error::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            log.push(&rec.context_id, seq, rec.log_prob);
        }
        log.ok_or_else(|| Error::input("sample log is empty"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let a = Alphabet::amino_acids();
        let mut log = SampleLog::new("base");
        log.push("c2", Sequence::parse("AC", &a).unwrap(), -1.5);
        log.push("c1", Sequence::parse("DE", &a).unwrap(), -0.25);
        log.push("c2", Sequence::parse("AA", &a).unwrap(), -3.0);
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf, &a).unwrap();
        let back = SampleLog::read_jsonl(buf.as_slice(), &a).unwrap();
        assert_eq!(back, log);
        assert_eq!(back.context_ids().collect::<Vec<_>>(), vec!["c2", "c1"]);
        assert_eq!(back.k_max(), 1);
    }

    #[test]
    fn rejects_gaps_and_mismatches() {
        let a = Alphabet::amino_acids();
        let gap = r#"{"context_id":"c","model_tag":"m","sample_index":1,"sequence":"A","log_prob":0.0}"#;
        assert!(matches!(SampleLog::read_jsonl(gap.as_bytes(), &a), Err(Error::Parse { line: 1, .. })));
        let mut x = SampleLog::new("x");
        x.push("a", Sequence::new(vec![0], 2).unwrap(), 0.0);
        let mut y = SampleLog::new("y");
        y.push("b", Sequence::new(vec![0], 2).unwrap(), 0.0);
        let err = x.check_same_contexts(&y).unwrap_err().to_string();
        assert!(err.contains("\"a\"") && err.contains("\"b\""));
    }
}
