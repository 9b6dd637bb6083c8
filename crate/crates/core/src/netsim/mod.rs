//! Deterministic discrete-event network simulator.
//!
//! A scenario describes nodes, links, reward chains and workloads. The engine
//! keeps one global queue ordered by (time, sequence) and feeds protocol
//! reducers, the ledger and adversarial crackers from it. All randomness is
//! derived from the scenario seed, so a report is a pure function of the
//! scenario text and seed.

mod cache;
mod engine;
mod report;
mod scenario;
pub mod templates;
mod topology;

use thiserror::Error;

pub use cache::{choose_offer, ContentCache};
pub use engine::{run, sub_seed};
pub use report::{BalanceRow, ClaimRow, LatencyRow, SimulationReport, TraceRow, WorkloadSummary};
pub use scenario::{
    validate, ChainSection, ComparisonSection, Diagnostic, FaultKind, FaultSection, LedgerSection, LinkKind,
    LinkSection, Model, NodeBehavior, NodeSection, ParamsSection, Role, ScenarioConfig, WorkloadSection,
};
pub use topology::{transfer_time, Link, Node, PathComparison, Route, Topology, SPEED_OF_LIGHT};

#[derive(Debug, Error)]
pub enum NetsimError {
    #[error("invalid scenario:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Diagnostic>),
    #[error("no route from {src} to {dst}")]
    NoRoute { src: String, dst: String },
    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),
    #[error(transparent)]
    Timelock(#[from] crate::timelock::TimelockError),
    #[error(transparent)]
    Ledger(#[from] crate::ledger::LedgerError),
    #[error(transparent)]
    Coding(#[from] crate::coding::CodingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
