//! Per-step chain records and their on-disk formats.
//!
//! CSV schema (header included):
//!
//! ```text
//! step,basis,accepted,elapsed_ns
//! 0,0 2,1,0
//! 1,1 2,0,8311
//! ```
//!
//! `basis` holds the ascending 0-based column indices separated by single
//! spaces. Row 0 is the initial state and always has `accepted = 1`. Lazy
//! self-loops of the basis-exchange chain are written as `accepted = 0`.
//! `elapsed_ns` counts from the start of the chain, or is `0` for every row
//! when timing is disabled.
//!
//! The JSON-lines form carries the same fields, one object per line:
//! `{"step":1,"basis":[1,2],"accepted":0,"elapsed_ns":8311}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Basis;

pub const CSV_HEADER: &str = "step,basis,accepted,elapsed_ns";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepOutcome {
    Initial,
    Accepted,
    Rejected,
    /// Basis-exchange laziness: no proposal was made.
    Lazy,
}

impl StepOutcome {
    pub fn accepted_flag(self) -> u8 {
        matches!(self, StepOutcome::Initial | StepOutcome::Accepted) as u8
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub step: u64,
    pub basis: Basis,
    pub outcome: StepOutcome,
    pub elapsed_ns: u64,
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    step: u64,
    basis: Basis,
    accepted: u8,
    elapsed_ns: u64,
}

/// Trace of one chain, initial state first.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ChainTrace {
    pub chain: usize,
    pub records: Vec<StepRecord>,
    /// False when the run stopped on an error before its budget.
    pub complete: bool,
}

impl ChainTrace {
    pub fn new(chain: usize) -> Self {
        Self {
            chain,
            records: Vec::new(),
            complete: false,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of transitions (records after the initial one).
    pub fn steps(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn bases(&self) -> impl Iterator<Item = &Basis> {
        self.records.iter().map(|r| &r.basis)
    }

    /// Records with index ≥ `skip`.
    pub fn after(&self, skip: usize) -> &[StepRecord] {
        &self.records[skip.min(self.records.len())..]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{}",
                r.step,
                r.basis,
                r.outcome.accepted_flag(),
                r.elapsed_ns
            )?;
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for r in &self.records {
            let rec = JsonRecord {
                step: r.step,
                basis: r.basis.clone(),
                accepted: r.outcome.accepted_flag(),
                elapsed_ns: r.elapsed_ns,
            };
            serde_json::to_writer(&mut w, &rec).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(w)?;
        }
        Ok(())
    }

    /// Reads the CSV form. Lazy steps read back as rejections.
    pub fn read_csv<R: BufRead>(chain: usize, reader: R) -> Result<Self> {
        let mut trace = ChainTrace::new(chain);
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if i == 0 {
                if line.trim() != CSV_HEADER {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected header {CSV_HEADER:?}"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let bad = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            if fields.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", fields.len())));
            }
            let step: u64 = fields[0].parse().map_err(|e| bad(format!("step: {e}")))?;
            let basis: Basis = fields[1].parse().map_err(|e: Error| bad(e.to_string()))?;
            let outcome = match (step, fields[2]) {
                (0, "1") => StepOutcome::Initial,
                (_, "1") => StepOutcome::Accepted,
                (_, "0") => StepOutcome::Rejected,
                (_, other) => return Err(bad(format!("accepted flag {other:?}"))),
            };
            let elapsed_ns = fields[3]
                .parse()
                .map_err(|e| bad(format!("elapsed_ns: {e}")))?;
            trace.records.push(StepRecord {
                step,
                basis,
                outcome,
                elapsed_ns,
            });
        }
        trace.complete = true;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ChainTrace {
        let mk = |step, b: Vec<usize>, outcome, ns| StepRecord {
            step,
            basis: Basis::from_indices(b),
            outcome,
            elapsed_ns: ns,
        };
        ChainTrace {
            chain: 3,
            records: vec![
                mk(0, vec![0, 2], StepOutcome::Initial, 0),
                mk(1, vec![1, 2], StepOutcome::Accepted, 10),
                mk(2, vec![1, 2], StepOutcome::Rejected, 25),
            ],
            complete: true,
        }
    }

    #[test]
    fn csv_layout_is_fixed() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "step,basis,accepted,elapsed_ns\n0,0 2,1,0\n1,1 2,1,10\n2,1 2,0,25\n"
        );
    }

    #[test]
    fn jsonl_layout_is_fixed() {
        let mut buf = Vec::new();
        sample().write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            r#"{"step":1,"basis":[1,2],"accepted":1,"elapsed_ns":10}"#
        );
    }

    #[test]
    fn csv_reads_back() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let back = ChainTrace::read_csv(3, buf.as_slice()).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn csv_rejects_bad_header() {
        let err = ChainTrace::read_csv(0, "a,b\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
