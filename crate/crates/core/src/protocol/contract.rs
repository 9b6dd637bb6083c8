//! Contract forwarding: a contractor takes responsibility for delivery and
//! may hand the job on to subcontractors, keeping a margin at every level.

use crate::economics::{quote_order, CapabilityQuote};
use crate::ledger::Ledger;
use crate::time::SimTime;
use crate::timelock::generate_chain;
use crate::NodeId;

use super::forwarder::{Assignment, Behavior, ForwarderEvent, ForwarderState, ReceiverEvent, ReceiverMode, ReceiverState};
use super::{MessageManifest, ProtocolError};

pub const DEFAULT_MARGIN_BPS: u32 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ContractPolicy {
    /// Share of the price a contractor keeps when subcontracting, in basis points.
    pub margin_bps: u32,
    pub max_depth: usize,
}

impl Default for ContractPolicy {
    fn default() -> Self {
        ContractPolicy { margin_bps: DEFAULT_MARGIN_BPS, max_depth: 16 }
    }
}

impl ContractPolicy {
    pub fn offer_below(&self, price: u64) -> u64 {
        let keep = 10_000u64.saturating_sub(self.margin_bps as u64);
        (price as u128 * keep as u128 / 10_000) as u64
    }
}

/// What a contractor can see of the network around it.
pub trait ContractTopology {
    /// Whether `holder` can hand the message to `receiver` itself.
    fn in_range(&self, holder: &NodeId, receiver: &NodeId) -> bool;
    /// Quotes from nodes willing to take the job off `holder`.
    fn bids(&self, holder: &NodeId, receiver: &NodeId) -> Vec<CapabilityQuote>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractState {
    pub contract_id: u64,
    pub principal: NodeId,
    pub contractor: NodeId,
    pub agreed_price: u64,
    pub deadline: SimTime,
    pub subcontracts: Vec<ContractState>,
}

impl ContractState {
    pub fn depth(&self) -> usize {
        1 + self.subcontracts.iter().map(ContractState::depth).max().unwrap_or(0)
    }

    /// Contracts from the root down to the leaf, following first subcontracts.
    pub fn levels(&self) -> Vec<&ContractState> {
        let mut out = vec![self];
        let mut cur = self;
        while let Some(next) = cur.subcontracts.first() {
            out.push(next);
            cur = next;
        }
        out
    }

    pub fn respects_budget(&self) -> bool {
        self.subcontracts.iter().map(|s| s.agreed_price).sum::<u64>() <= self.agreed_price
            && self.subcontracts.iter().all(ContractState::respects_budget)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractPlan {
    pub root: ContractState,
    /// Message source first, receiver last.
    pub delivery_path: Vec<NodeId>,
}

#[allow(clippy::too_many_arguments)]
pub fn negotiate_contract(
    source: &NodeId,
    principal: &NodeId,
    contractor: &NodeId,
    receiver: &NodeId,
    agreed_price: u64,
    deadline: SimTime,
    policy: &ContractPolicy,
    topology: &dyn ContractTopology,
) -> Result<ContractPlan, ProtocolError> {
    let mut chain = vec![(principal.clone(), contractor.clone(), agreed_price)];
    let mut holder = contractor.clone();
    let mut price = agreed_price;
    let mut path = vec![source.clone()];
    if holder != *source {
        path.push(holder.clone());
    }
    while !topology.in_range(&holder, receiver) {
        if chain.len() >= policy.max_depth {
            return Err(ProtocolError::ContractDeclined { holder: holder.to_string(), offer: 0 });
        }
        let offer = policy.offer_below(price);
        let taken: Vec<&NodeId> = path.iter().chain([principal, receiver]).collect();
        let pick = topology
            .bids(&holder, receiver)
            .into_iter()
            .filter(|b| b.price <= offer && !taken.contains(&&b.node_id))
            .min_by(quote_order)
            .ok_or_else(|| ProtocolError::ContractDeclined { holder: holder.to_string(), offer })?;
        chain.push((holder.clone(), pick.node_id.clone(), offer));
        holder = pick.node_id;
        price = offer;
        path.push(holder.clone());
    }
    path.push(receiver.clone());

    let mut root: Option<ContractState> = None;
    for (id, (p, c, price)) in chain.into_iter().enumerate().rev() {
        root = Some(ContractState {
            contract_id: id as u64,
            principal: p,
            contractor: c,
            agreed_price: price,
            deadline,
            subcontracts: root.into_iter().collect(),
        });
    }
    Ok(ContractPlan { root: root.expect("at least one level"), delivery_path: path })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractOutcome {
    pub plan: ContractPlan,
    pub delivered: bool,
    /// (payee, amount) for every contract level that was settled on the ledger.
    pub payments: Vec<(NodeId, u64)>,
}

/// Untimed reference run: negotiate, relay the message along the contracted
/// path, then settle each level with a one-block reward chain whose key the
/// payer releases after the receiver's acknowledgement.
#[allow(clippy::too_many_arguments)]
pub fn run_contract(
    source: &NodeId,
    principal: &NodeId,
    contractor: &NodeId,
    receiver: &NodeId,
    body: &[u8],
    manifest: &MessageManifest,
    agreed_price: u64,
    policy: &ContractPolicy,
    topology: &dyn ContractTopology,
    ledger: &mut Ledger,
    seed: u64,
) -> Result<ContractOutcome, ProtocolError> {
    let plan = negotiate_contract(
        source,
        principal,
        contractor,
        receiver,
        agreed_price,
        SimTime::MAX,
        policy,
        topology,
    )?;
    let relays = &plan.delivery_path[1..plan.delivery_path.len() - 1];
    let mut fws: Vec<ForwarderState> = relays
        .iter()
        .map(|_| {
            let mut f = ForwarderState::new(4, Behavior::Honest);
            f.step(ForwarderEvent::Setup { header: manifest.header(), assignment: Assignment::Relay });
            f
        })
        .collect();
    let mut rx = ReceiverState::new();
    rx.step(ReceiverEvent::Setup {
        header: manifest.header(),
        expected_hash: manifest.full_hash,
        mode: ReceiverMode::EndToEnd { sender: principal.clone() },
    });
    for chunk in body.chunks(manifest.chunk_size as usize) {
        let mut carry = chunk.to_vec();
        for f in &mut fws {
            for a in f.step(ForwarderEvent::Chunk(carry.clone())).actions {
                if let super::ForwarderAction::ForwardChunk(c) = a {
                    carry = c;
                }
            }
        }
        rx.step(ReceiverEvent::Chunk(carry));
    }
    let delivered = rx.intact() == Some(true);
    let mut payments = Vec::new();
    if delivered {
        for (i, level) in plan.root.levels().into_iter().enumerate() {
            let chain = generate_chain(1, 1, &[level.agreed_price], seed.wrapping_add(i as u64))?;
            let id = ledger.publish_chain(level.principal.clone(), chain.published(), SimTime::ZERO)?;
            if ledger.submit_claim(id, 0, chain.keys[0], level.contractor.clone(), SimTime(1)).is_accepted() {
                payments.push((level.contractor.clone(), level.agreed_price));
            }
        }
    }
    Ok(ContractOutcome { plan, delivered, payments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::LedgerParams;
    use crate::protocol::synthetic_body;
    use crate::time::SimDuration;
    use std::collections::BTreeMap;

    /// A line S - A - B - C - R where each node only reaches its neighbours.
    struct Line {
        order: Vec<NodeId>,
        asks: BTreeMap<NodeId, u64>,
    }

    impl Line {
        fn new(names: &[&str], asks: &[(&str, u64)]) -> Self {
            Line {
                order: names.iter().map(|n| NodeId::from(*n)).collect(),
                asks: asks.iter().map(|(n, a)| (NodeId::from(*n), *a)).collect(),
            }
        }
        fn pos(&self, n: &NodeId) -> usize {
            self.order.iter().position(|x| x == n).unwrap()
        }
    }

    impl ContractTopology for Line {
        fn in_range(&self, holder: &NodeId, receiver: &NodeId) -> bool {
            self.pos(holder).abs_diff(self.pos(receiver)) <= 1
        }
        fn bids(&self, holder: &NodeId, _receiver: &NodeId) -> Vec<CapabilityQuote> {
            let p = self.pos(holder);
            [p.wrapping_sub(1), p + 1]
                .into_iter()
                .filter_map(|i| self.order.get(i))
                .filter_map(|n| {
                    self.asks.get(n).map(|&ask| CapabilityQuote {
                        node_id: n.clone(),
                        technology_tag: "wifi".into(),
                        range_meters: 100,
                        expected_latency: SimDuration::from_millis(1),
                        price: ask,
                    })
                })
                .collect()
        }
    }

    fn id(s: &str) -> NodeId {
        NodeId::from(s)
    }

    #[test]
    fn adjacent_contractor_delivers_directly() {
        let topo = Line::new(&["S", "A", "R"], &[]);
        let plan = negotiate_contract(&id("S"), &id("S"), &id("A"), &id("R"), 100, SimTime::MAX, &ContractPolicy::default(), &topo)
            .unwrap();
        assert_eq!(plan.root.depth(), 1);
        assert_eq!(plan.delivery_path, vec![id("S"), id("A"), id("R")]);
    }

    #[test]
    fn margins_compound_down_the_tree() {
        let topo = Line::new(&["S", "A", "B", "C", "R"], &[("B", 0), ("C", 0)]);
        let plan = negotiate_contract(&id("S"), &id("S"), &id("A"), &id("R"), 1000, SimTime::MAX, &ContractPolicy::default(), &topo)
            .unwrap();
        let prices: Vec<u64> = plan.root.levels().iter().map(|l| l.agreed_price).collect();
        assert_eq!(prices, vec![1000, 900, 810]);
        assert_eq!(plan.root.depth(), 3);
        assert!(plan.root.respects_budget());
        assert_eq!(plan.delivery_path.len(), 5);
    }

    #[test]
    fn declined_when_asks_exceed_offer() {
        let topo = Line::new(&["S", "A", "B", "R"], &[("B", 950)]);
        let err = negotiate_contract(&id("S"), &id("S"), &id("A"), &id("R"), 1000, SimTime::MAX, &ContractPolicy::default(), &topo)
            .unwrap_err();
        assert_eq!(err, ProtocolError::ContractDeclined { holder: "A".into(), offer: 900 });
    }

    #[test]
    fn pull_model_receiver_contracts_the_sender() {
        let topo = Line::new(&["S", "X", "R"], &[("X", 10)]);
        let body = synthetic_body(64, 1);
        let m = MessageManifest::for_body(1, &body, 16).unwrap();
        let mut ledger = Ledger::new(LedgerParams::default());
        let out = run_contract(&id("S"), &id("R"), &id("S"), &id("R"), &body, &m, 200, &ContractPolicy::default(), &topo, &mut ledger, 1)
            .unwrap();
        assert!(out.delivered);
        assert_eq!(out.plan.delivery_path, vec![id("S"), id("X"), id("R")]);
        assert_eq!(out.payments, vec![(id("S"), 200), (id("X"), 180)]);
        assert_eq!(ledger.confirmed_balance(&id("S"), SimTime(10)), 200);
    }
}
