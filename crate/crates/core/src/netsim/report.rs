//! Simulation results and their CSV/TOML serializations.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::NetsimError;
use crate::economics::PayoffRecord;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClaimRow {
    pub chain_id: u64,
    pub block_index: usize,
    pub claimant: String,
    pub result: String,
    pub reason: String,
    pub claim_time: u64,
    /// Empty for rejected claims.
    pub confirm_time: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub time: u64,
    pub node: String,
    pub phase_from: String,
    pub phase_to: String,
    pub event: String,
    pub actions: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BalanceRow {
    pub node_id: String,
    pub rewards_confirmed: u64,
    pub costs: u64,
    pub net: i64,
}

impl From<&PayoffRecord> for BalanceRow {
    fn from(r: &PayoffRecord) -> Self {
        BalanceRow {
            node_id: r.node_id.to_string(),
            rewards_confirmed: r.rewards_confirmed,
            costs: r.forwarding_costs_incurred,
            net: r.net,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatencyRow {
    pub workload: String,
    pub label: String,
    pub src: String,
    pub dst: String,
    pub message_length: u64,
    pub start: u64,
    pub end: Option<u64>,
    pub latency_ns: Option<u64>,
    pub intact: bool,
}

/// Per-workload outcome, written to summary.toml.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct WorkloadSummary {
    pub id: String,
    pub model: String,
    pub delivered: bool,
    pub chain_ids: Vec<u64>,
    pub note: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SimulationReport {
    pub seed: u64,
    pub horizon_ns: u64,
    /// Time of the last processed event.
    pub end_time_ns: u64,
    /// True when the event queue drained before the horizon.
    pub quiescent: bool,
    pub events_processed: u64,
    pub conservation_ok: bool,
    pub total_confirmed_value: u64,
    #[serde(skip)]
    pub claims: Vec<ClaimRow>,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    #[serde(skip)]
    pub balances: Vec<PayoffRecord>,
    #[serde(skip)]
    pub latency: Vec<LatencyRow>,
    pub workloads: Vec<WorkloadSummary>,
}

impl SimulationReport {
    pub fn balance(&self, node: &str) -> Option<&PayoffRecord> {
        self.balances.iter().find(|b| b.node_id.as_str() == node)
    }

    pub fn accepted_claims(&self) -> impl Iterator<Item = &ClaimRow> {
        self.claims.iter().filter(|c| c.result == "accepted")
    }

    pub fn latency_row(&self, workload: &str, label: &str) -> Option<&LatencyRow> {
        self.latency.iter().find(|r| r.workload == workload && r.label == label)
    }

    pub fn summary_toml(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }

    /// Writes claims.csv, events.csv, balances.csv, latency.csv and summary.toml.
    pub fn write_outputs(&self, dir: &Path) -> Result<(), NetsimError> {
        fs::create_dir_all(dir)?;
        write_csv(&dir.join("claims.csv"), &self.claims)?;
        write_csv(&dir.join("events.csv"), &self.trace)?;
        let balances: Vec<BalanceRow> = self.balances.iter().map(BalanceRow::from).collect();
        write_csv(&dir.join("balances.csv"), &balances)?;
        write_csv(&dir.join("latency.csv"), &self.latency)?;
        fs::write(dir.join("summary.toml"), self.summary_toml())?;
        Ok(())
    }
}

/// Header-only files for empty tables keep downstream tooling simple.
fn write_csv<T: Serialize + HeaderOnly>(path: &Path, rows: &[T]) -> Result<(), NetsimError> {
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_path(path)?;
    if rows.is_empty() {
        w.write_record(T::HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

trait HeaderOnly {
    const HEADER: &'static [&'static str];
}

impl HeaderOnly for ClaimRow {
    const HEADER: &'static [&'static str] =
        &["chain_id", "block_index", "claimant", "result", "reason", "claim_time", "confirm_time"];
}

impl HeaderOnly for TraceRow {
    const HEADER: &'static [&'static str] = &["time", "node", "phase_from", "phase_to", "event", "actions"];
}

impl HeaderOnly for BalanceRow {
    const HEADER: &'static [&'static str] = &["node_id", "rewards_confirmed", "costs", "net"];
}

impl HeaderOnly for LatencyRow {
    const HEADER: &'static [&'static str] =
        &["workload", "label", "src", "dst", "message_length", "start", "end", "latency_ns", "intact"];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_writes_headers() {
        let dir = tempfile::tempdir().unwrap();
        SimulationReport::default().write_outputs(dir.path()).unwrap();
        let claims = fs::read_to_string(dir.path().join("claims.csv")).unwrap();
        assert_eq!(claims.trim(), ClaimRow::HEADER.join(","));
        let summary = fs::read_to_string(dir.path().join("summary.toml")).unwrap();
        assert!(summary.contains("quiescent = false"));
    }

    #[test]
    fn rejected_claim_leaves_confirm_time_empty() {
        let dir = tempfile::tempdir().unwrap();
        let report = SimulationReport {
            claims: vec![ClaimRow {
                chain_id: 0,
                block_index: 1,
                claimant: "x".into(),
                result: "rejected".into(),
                reason: "out_of_order".into(),
                claim_time: 5,
                confirm_time: None,
            }],
            ..Default::default()
        };
        report.write_outputs(dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("claims.csv")).unwrap();
        assert_eq!(text.lines().nth(1), Some("0,1,x,rejected,out_of_order,5,"));
    }
}
