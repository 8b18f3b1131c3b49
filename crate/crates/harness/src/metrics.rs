use std::io::Write;

use dyncc::engine::{Record, RecordKind};
use serde::Serialize;

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

/// One line of the metrics stream.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Row {
    Run(RunRow),
    Query(EngineRow),
    Commit(EngineRow),
    Trial(TrialRow),
    Aggregate(AggregateRow),
    Static(StaticRow),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRow {
    pub command: String,
    pub source: String,
    pub trials: u64,
    pub seed: u64,
    pub epsilon: f64,
    pub mu: f64,
    pub mode: String,
    pub pipeline: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EngineRow {
    pub trial: u64,
    pub update: u64,
    pub cost: Option<usize>,
    pub opt: Option<usize>,
    pub ratio: Option<f64>,
    pub violation: usize,
    pub epoch: u64,
    pub steps: u64,
}

impl EngineRow {
    pub fn from_record(trial: u64, r: &Record) -> Row {
        let row = EngineRow {
            trial,
            update: r.update_index,
            cost: r.cost,
            opt: r.opt_cost,
            ratio: r.ratio,
            violation: r.violation_size,
            epoch: r.epoch,
            steps: r.steps_used,
        };
        match r.kind {
            RecordKind::Query => Row::Query(row),
            RecordKind::Commit => Row::Commit(row),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    pub n: usize,
    pub updates: u64,
    pub rebuilds: usize,
    pub final_cost: Option<usize>,
    pub final_opt: Option<usize>,
    /// Served cost right after the scenario's target update.
    pub target_cost: Option<usize>,
    pub target_failed: Option<bool>,
    pub mean_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    /// Updates where the served cost exceeded the asserted ratio bound.
    pub ratio_violations: usize,
    /// Updates whose served cost differed from a recount on the graph.
    pub cost_mismatches: usize,
    pub risky_violations: usize,
    /// Non-commit deamortized updates above the per-update step bound.
    pub step_violations: usize,
    pub max_update_steps: u64,
    pub ok: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct AggregateRow {
    pub trials: u64,
    /// Mean over trials of the per-trial mean ratio.
    pub mean_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub target_failures: usize,
    pub target_failure_rate: Option<f64>,
    pub failed_trials: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticRow {
    pub n: usize,
    pub m: usize,
    pub pipeline: String,
    pub seed: u64,
    pub input_cost: usize,
    pub cost: usize,
    pub opt: Option<usize>,
    pub ratio: Option<f64>,
    pub clusters: usize,
    pub steps: u64,
}

#[derive(Serialize)]
struct Line<'a> {
    schema_version: u32,
    #[serde(flatten)]
    row: &'a Row,
}

pub fn to_line(row: &Row) -> String {
    serde_json::to_string(&Line { schema_version: SCHEMA_VERSION, row }).expect("rows serialize")
}

pub fn write_rows<W: Write>(out: &mut W, rows: &[Row]) -> std::io::Result<()> {
    for r in rows {
        writeln!(out, "{}", to_line(r))?;
    }
    Ok(())
}

/// cost/opt, 1 when both vanish, `None` when only opt does.
pub fn ratio(cost: usize, opt: usize) -> Option<f64> {
    match (cost, opt) {
        (0, 0) => Some(1.0),
        (_, 0) => None,
        _ => Some(cost as f64 / opt as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_carry_kind_and_version() {
        let row = Row::Aggregate(AggregateRow { trials: 3, ok: true, ..Default::default() });
        let line = to_line(&row);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["kind"], "aggregate");
        assert_eq!(v["trials"], 3);
        assert!(v["mean_ratio"].is_null());
    }

    #[test]
    fn ratio_edge_cases() {
        assert_eq!(ratio(0, 0), Some(1.0));
        assert_eq!(ratio(2, 0), None);
        assert_eq!(ratio(3, 2), Some(1.5));
    }
}
