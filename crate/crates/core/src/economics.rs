//! Negotiation, surge pricing and payoff accounting.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::Ledger;
use crate::time::{SimDuration, SimTime};
use crate::NodeId;

pub const DEFAULT_SURGE_CAP: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EconomicsError {
    #[error("no feasible forwarding path (hop {hop} has no acceptable candidate)")]
    NoCandidate { hop: usize },
    #[error("cheapest path costs {cost}, budget is {budget}")]
    OverBudget { cost: u64, budget: u64 },
    #[error("utilization {0} outside [0, 1)")]
    Utilization(f64),
}

/// What a node advertises when asked to forward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityQuote {
    pub node_id: NodeId,
    pub technology_tag: String,
    pub range_meters: u32,
    pub expected_latency: SimDuration,
    pub price: u64,
}

/// Cheapest-first ordering: price, then latency, then node id.
pub fn quote_order(a: &CapabilityQuote, b: &CapabilityQuote) -> std::cmp::Ordering {
    (a.price, a.expected_latency, &a.node_id).cmp(&(b.price, b.expected_latency, &b.node_id))
}

/// Picks one quote per hop position, hop by hop, cheapest first. Candidates
/// slower than `latency_bound` are skipped; the total must fit `budget`.
pub fn select_path(
    candidates: &[Vec<CapabilityQuote>],
    budget: u64,
    latency_bound: SimDuration,
) -> Result<Vec<CapabilityQuote>, EconomicsError> {
    let mut path = Vec::with_capacity(candidates.len());
    let mut cost: u64 = 0;
    for (hop, quotes) in candidates.iter().enumerate() {
        let best = quotes
            .iter()
            .filter(|q| q.expected_latency <= latency_bound)
            .min_by(|a, b| quote_order(a, b))
            .ok_or(EconomicsError::NoCandidate { hop })?;
        cost = cost.saturating_add(best.price);
        path.push(best.clone());
    }
    if cost > budget {
        return Err(EconomicsError::OverBudget { cost, budget });
    }
    Ok(path)
}

/// `base_price × min(1 / (1 − utilization), cap)`, rounded up.
pub fn surge_price(base_price: u64, utilization: f64, cap: f64) -> Result<u64, EconomicsError> {
    if !(0.0..1.0).contains(&utilization) {
        return Err(EconomicsError::Utilization(utilization));
    }
    let factor = (1.0 / (1.0 - utilization)).min(cap).max(1.0);
    let raw = base_price as f64 * factor;
    // Absorb float noise like 1/(1-0.8) = 5.000000000000001 before rounding up.
    let snapped = (raw * 1e9).round() / 1e9;
    Ok(snapped.ceil() as u64)
}

/// Busy intervals of one link, used to derive a trailing-window utilization.
#[derive(Clone, Debug, Default)]
pub struct BusyLog {
    intervals: VecDeque<(SimTime, SimTime)>,
}

impl BusyLog {
    pub fn record(&mut self, start: SimTime, end: SimTime) {
        if end > start {
            self.intervals.push_back((start, end));
        }
    }

    /// Fraction of `[now - window, now]` during which the link was busy.
    pub fn utilization(&self, now: SimTime, window: SimDuration) -> f64 {
        if window.0 == 0 {
            return 0.0;
        }
        let from = SimTime(now.0.saturating_sub(window.0));
        let busy: u64 = self
            .intervals
            .iter()
            .map(|&(s, e)| {
                let s = s.max(from);
                let e = e.min(now);
                e.0.saturating_sub(s.0)
            })
            .sum();
        busy as f64 / window.0 as f64
    }

    /// Drops intervals that ended before `horizon`.
    pub fn prune(&mut self, horizon: SimTime) {
        while self.intervals.front().is_some_and(|&(_, e)| e < horizon) {
            self.intervals.pop_front();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffRecord {
    pub node_id: NodeId,
    pub rewards_confirmed: u64,
    pub forwarding_costs_incurred: u64,
    pub net: i64,
}

/// One record per node in `nodes` plus any claimant or cost holder not listed.
pub fn settle(
    nodes: &[NodeId],
    ledger: &Ledger,
    costs: &BTreeMap<NodeId, u64>,
    now: SimTime,
) -> Vec<PayoffRecord> {
    let mut all: BTreeSet<NodeId> = nodes.iter().cloned().collect();
    all.extend(ledger.claimants());
    all.extend(costs.keys().cloned());
    all.into_iter()
        .map(|node_id| {
            let rewards_confirmed = ledger.confirmed_balance(&node_id, now);
            let forwarding_costs_incurred = costs.get(&node_id).copied().unwrap_or(0);
            PayoffRecord {
                net: rewards_confirmed as i64 - forwarding_costs_incurred as i64,
                node_id,
                rewards_confirmed,
                forwarding_costs_incurred,
            }
        })
        .collect()
}

/// Total rewards across records equal the value of confirmed claims.
pub fn conserves_value(records: &[PayoffRecord], ledger: &Ledger, now: SimTime) -> bool {
    records.iter().map(|r| r.rewards_confirmed).sum::<u64>() == ledger.confirmed_value(now)
}
