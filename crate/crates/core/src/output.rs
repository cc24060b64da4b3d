//! JSON and CSV renderings of branch tables and protocol runs.
//!
//! Exact rationals are written as decimal numerator/denominator strings with
//! a float convenience field; the strings are authoritative.

use std::io::Write;

use serde::Serialize;

use crate::amplitude::{rational_to_f64, AmplitudeJson, Rational, RationalJson};
use crate::error::{Error, Result};
use crate::plans::{format_outcomes, BranchRecord, LeafClass};
use crate::protocol::{ProtocolConfig, TrialResult, WValue};

#[derive(Debug, Clone, Serialize)]
pub struct BranchRow {
    pub outcomes: String,
    pub probability: RationalJson,
    pub class: LeafClass,
    pub level: usize,
    pub bob_amp0: AmplitudeJson,
    pub bob_amp1: AmplitudeJson,
}

impl From<&BranchRecord> for BranchRow {
    fn from(r: &BranchRecord) -> Self {
        BranchRow {
            outcomes: format_outcomes(&r.outcomes),
            probability: RationalJson::from(&r.probability),
            class: r.class,
            level: r.level,
            bob_amp0: AmplitudeJson::from(r.bob_state.amp0()),
            bob_amp1: AmplitudeJson::from(r.bob_state.amp1()),
        }
    }
}

pub fn branches_json(records: &[BranchRecord]) -> Result<String> {
    let rows: Vec<BranchRow> = records.iter().map(BranchRow::from).collect();
    to_pretty_json(&rows)
}

pub const BRANCH_CSV_HEADER: [&str; 15] = [
    "outcomes",
    "probability_num",
    "probability_den",
    "probability_float",
    "class",
    "level",
    "bob_amp0_sign",
    "bob_amp0_sq_num",
    "bob_amp0_sq_den",
    "bob_amp0_float",
    "bob_amp1_sign",
    "bob_amp1_sq_num",
    "bob_amp1_sq_den",
    "bob_amp1_float",
    "bob_p1_float",
];

pub fn write_branches_csv<W: Write>(records: &[BranchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BRANCH_CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let row = BranchRow::from(r);
        let norm = r.bob_state.norm_sq();
        let p1 = if norm == Rational::from_integer(0.into()) {
            0.0
        } else {
            rational_to_f64(&(r.bob_state.amp1().sq() / norm))
        };
        let amp_cols = |a: &AmplitudeJson| {
            vec![
                a.sign.to_string(),
                a.mag_sq.num.clone(),
                a.mag_sq.den.clone(),
                float_str(a.float),
            ]
        };
        let mut rec = vec![
            row.outcomes.clone(),
            row.probability.num.clone(),
            row.probability.den.clone(),
            float_str(row.probability.float),
            row.class.to_string(),
            row.level.to_string(),
        ];
        rec.extend(amp_cols(&row.bob_amp0));
        rec.extend(amp_cols(&row.bob_amp1));
        rec.push(p1.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::domain(e.to_string()))
}

fn float_str(f: Option<f64>) -> String {
    f.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::domain(format!("csv: {e}"))
}

#[derive(Debug, Clone, Serialize)]
pub struct WEntry {
    pub l: usize,
    /// `null` when every state in the group is an η hit.
    pub w: Option<RationalJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub states: u64,
    pub empirical_p1: f64,
    pub oracle_p1: RationalJson,
    pub eta_hits: usize,
    pub w_values: Vec<WEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationOutput<'a> {
    pub config: &'a ProtocolConfig,
    pub per_trial: &'a [TrialResult],
    pub summary: SimulationSummary,
}

pub fn summarize(trials: &[TrialResult], oracle_p1: &Rational, w_values: Vec<(usize, WValue)>) -> SimulationSummary {
    let (mut ones, mut states, mut eta_hits) = (0u64, 0u64, 0usize);
    for t in trials {
        eta_hits += t.eta_hits;
        for g in &t.per_group {
            ones += g.ones as u64;
            states += (g.ones + g.zeros) as u64;
        }
    }
    SimulationSummary {
        states,
        empirical_p1: if states == 0 { 0.0 } else { ones as f64 / states as f64 },
        oracle_p1: RationalJson::from(oracle_p1),
        eta_hits,
        w_values: w_values
            .into_iter()
            .map(|(l, w)| WEntry {
                l,
                w: match w {
                    WValue::Finite(r) => Some(RationalJson::from(&r)),
                    WValue::Infinite => None,
                },
            })
            .collect(),
    }
}

pub const GROUP_CSV_HEADER: [&str; 7] = ["trial", "group", "zeros", "ones", "ratio", "eta_hits", "decision"];

pub fn write_groups_csv<W: Write>(trials: &[TrialResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GROUP_CSV_HEADER).map_err(csv_err)?;
    for (t, trial) in trials.iter().enumerate() {
        for (g, group) in trial.per_group.iter().enumerate() {
            w.write_record([
                t.to_string(),
                g.to_string(),
                group.zeros.to_string(),
                group.ones.to_string(),
                group.ratio.map(|r| r.to_string()).unwrap_or_default(),
                group.eta_hits.to_string(),
                group.decision.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::domain(e.to_string()))
}

pub fn to_pretty_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::domain(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plans::{enumerate_branches, PlanParams, SpmPlan};

    #[test]
    fn branch_json_shape() {
        let records = enumerate_branches(&SpmPlan::new(PlanParams::with_qubits(3).unwrap()));
        let v: serde_json::Value = serde_json::from_str(&branches_json(&records).unwrap()).unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 4);
        let first = &rows[0];
        assert_eq!(first["outcomes"], "00");
        assert_eq!(first["class"], "MU_PLUS");
        assert_eq!(first["level"], 1);
        assert_eq!(first["probability"]["num"], "1");
        assert_eq!(first["probability"]["den"], "4");
        assert_eq!(first["bob_amp0"]["sign"], 1);
        assert_eq!(rows[3]["class"], "ETA");
    }

    #[test]
    fn branch_csv_has_header_and_rows() {
        let records = enumerate_branches(&SpmPlan::new(PlanParams::with_qubits(4).unwrap()));
        let mut buf = Vec::new();
        write_branches_csv(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 9);
        assert!(lines[0].starts_with("outcomes,probability_num"));
        assert!(lines[8].starts_with("111,"));
        assert!(lines[8].contains(",ETA,4,"));
    }
}
