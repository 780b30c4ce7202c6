//! Head-of-family checks for the open set condition, its strong form, the
//! distance sum (6) and the tail-ratio condition (7).
//!
//! Every verdict is about the first `m` maps only. A `fails` verdict always
//! names a witness; `holds-on-head` never claims anything about the maps
//! beyond the head.

mod geometry;
mod osc;
mod sums;

use std::fmt;
use std::io::Write;

use crate::error::Result;
use crate::sampler::io_err;

pub use osc::{check_osc, check_strong_osc, pairwise_distances, DistanceMatrix};
pub use sums::{
    condition6_diagnostic, condition7_search, default_eps_grid, default_lambda_grid,
    default_m_grid, q_lambda, Condition7Search, FeasiblePair, CONDITION6_RATE,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConditionId {
    Osc,
    StrongOsc,
    DistanceSum,
    TailRatio,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConditionId::Osc => "osc",
            ConditionId::StrongOsc => "strong",
            ConditionId::DistanceSum => "6",
            ConditionId::TailRatio => "7",
        })
    }
}

impl std::str::FromStr for ConditionId {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "osc" => Ok(ConditionId::Osc),
            "strong" | "strong-osc" => Ok(ConditionId::StrongOsc),
            "6" => Ok(ConditionId::DistanceSum),
            "7" => Ok(ConditionId::TailRatio),
            other => Err(crate::error::Error::invalid(format!(
                "unknown condition '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    HoldsOnHead,
    Fails,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::HoldsOnHead => "holds-on-head",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub verdict: Verdict,
    /// Number of maps examined.
    pub head: usize,
    /// Ordered key/value witness data.
    pub witness: Vec<(String, String)>,
}

impl ConditionReport {
    pub(crate) fn new(condition: ConditionId, verdict: Verdict, head: usize) -> Self {
        ConditionReport {
            condition,
            verdict,
            head,
            witness: Vec::new(),
        }
    }

    pub(crate) fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.witness.push((key.to_string(), value.to_string()));
        self
    }

    pub fn witness_value(&self, key: &str) -> Option<&str> {
        self.witness
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// CSV rows `(condition, verdict, key, value)`; the head size is always the first row.
    pub fn rows(&self) -> Vec<[String; 4]> {
        std::iter::once(("head".to_string(), self.head.to_string()))
            .chain(self.witness.iter().cloned())
            .map(|(k, v)| [self.condition.to_string(), self.verdict.to_string(), k, v])
            .collect()
    }
}

pub fn write_reports_csv<W: Write>(reports: &[ConditionReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["condition", "verdict", "key", "value"])
        .map_err(io_err)?;
    for r in reports {
        for row in r.rows() {
            w.write_record(&row).map_err(io_err)?;
        }
    }
    w.flush().map_err(|e| io_err(csv::Error::from(e)))?;
    Ok(())
}

pub(crate) fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let r = ConditionReport::new(ConditionId::StrongOsc, Verdict::Fails, 2).with("pair", "1,2");
        let mut buf = Vec::new();
        write_reports_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "condition,verdict,key,value\nstrong,fails,head,2\nstrong,fails,pair,\"1,2\"\n"
        );
    }

    #[test]
    fn parse_ids() {
        for id in [
            ConditionId::Osc,
            ConditionId::StrongOsc,
            ConditionId::DistanceSum,
            ConditionId::TailRatio,
        ] {
            assert_eq!(id.to_string().parse::<ConditionId>().unwrap(), id);
        }
        assert!("8".parse::<ConditionId>().is_err());
    }
}
