//! Simulated public ledger holding reward chains and claim transactions.
//!
//! A claim is accepted only for the lowest unclaimed block of a chain and only
//! if its key matches the block's commitment. Accepted keys are readable
//! immediately; the claimed value is credited after the confirmation delay.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{SimDuration, SimTime};
use crate::timelock::{verify_key, PublishedBlock, PuzzleKey};
use crate::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChainId(pub u64);

impl fmt::Display for ChainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerParams {
    pub confirmation_delay: SimDuration,
    pub publication_delay: SimDuration,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LedgerError {
    #[error("chain has no blocks")]
    EmptyChain,
    #[error("block at position {position} carries index {index}")]
    BlockIndex { position: usize, index: usize },
    #[error("block {index} has zero iterations")]
    ZeroIterations { index: usize },
    #[error("chain id {0} already exists")]
    DuplicateChain(ChainId),
    #[error("unknown chain {0}")]
    UnknownChain(ChainId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    UnknownChain,
    NotVisible,
    NoSuchBlock,
    BadKey,
    AlreadyClaimed,
    OutOfOrder,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::UnknownChain => "unknown_chain",
            RejectReason::NotVisible => "not_visible",
            RejectReason::NoSuchBlock => "no_such_block",
            RejectReason::BadKey => "bad_key",
            RejectReason::AlreadyClaimed => "already_claimed",
            RejectReason::OutOfOrder => "out_of_order",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClaimOutcome {
    Accepted { confirm_time: SimTime },
    Rejected(RejectReason),
}

impl ClaimOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, ClaimOutcome::Accepted { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub claimant: NodeId,
    pub key: PuzzleKey,
    pub claim_time: SimTime,
    pub confirm_time: SimTime,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LedgerEntry {
    pub chain_id: ChainId,
    pub publisher: NodeId,
    pub published_blocks: Vec<PublishedBlock>,
    pub publish_time: SimTime,
    pub visible_at: SimTime,
    /// Always a prefix of the block indices.
    pub claims: Vec<Claim>,
}

impl LedgerEntry {
    pub fn next_unclaimed(&self) -> Option<usize> {
        (self.claims.len() < self.published_blocks.len()).then_some(self.claims.len())
    }

    pub fn is_fully_claimed(&self) -> bool {
        self.claims.len() == self.published_blocks.len()
    }
}

/// One row of the claim log, kept for accepted and rejected submissions alike.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimRecord {
    pub chain_id: ChainId,
    pub block_index: usize,
    pub claimant: NodeId,
    pub outcome: ClaimOutcome,
    pub claim_time: SimTime,
}

#[derive(Clone, Debug, Default)]
pub struct Ledger {
    params: LedgerParams,
    chains: BTreeMap<ChainId, LedgerEntry>,
    next_id: u64,
    log: Vec<ClaimRecord>,
}

impl Ledger {
    pub fn new(params: LedgerParams) -> Self {
        Ledger { params, ..Default::default() }
    }

    pub fn params(&self) -> LedgerParams {
        self.params
    }

    pub fn publish_chain(
        &mut self,
        publisher: NodeId,
        blocks: Vec<PublishedBlock>,
        now: SimTime,
    ) -> Result<ChainId, LedgerError> {
        if blocks.is_empty() {
            return Err(LedgerError::EmptyChain);
        }
        for (position, block) in blocks.iter().enumerate() {
            if block.index != position {
                return Err(LedgerError::BlockIndex { position, index: block.index });
            }
            if block.iterations == 0 {
                return Err(LedgerError::ZeroIterations { index: position });
            }
        }
        let chain_id = ChainId(self.next_id);
        if self.chains.contains_key(&chain_id) {
            return Err(LedgerError::DuplicateChain(chain_id));
        }
        self.next_id += 1;
        self.chains.insert(
            chain_id,
            LedgerEntry {
                chain_id,
                publisher,
                published_blocks: blocks,
                publish_time: now,
                visible_at: now + self.params.publication_delay,
                claims: Vec::new(),
            },
        );
        Ok(chain_id)
    }

    pub fn submit_claim(
        &mut self,
        chain_id: ChainId,
        block_index: usize,
        key: PuzzleKey,
        claimant: NodeId,
        now: SimTime,
    ) -> ClaimOutcome {
        let outcome = self.evaluate_claim(chain_id, block_index, &key, now);
        if let ClaimOutcome::Accepted { confirm_time } = outcome {
            let entry = self.chains.get_mut(&chain_id).expect("checked above");
            entry.claims.push(Claim { claimant: claimant.clone(), key, claim_time: now, confirm_time });
        }
        self.log.push(ClaimRecord { chain_id, block_index, claimant, outcome, claim_time: now });
        outcome
    }

    fn evaluate_claim(
        &self,
        chain_id: ChainId,
        block_index: usize,
        key: &PuzzleKey,
        now: SimTime,
    ) -> ClaimOutcome {
        use RejectReason::*;
        let Some(entry) = self.chains.get(&chain_id) else {
            return ClaimOutcome::Rejected(UnknownChain);
        };
        if now < entry.visible_at {
            return ClaimOutcome::Rejected(NotVisible);
        }
        let Some(block) = entry.published_blocks.get(block_index) else {
            return ClaimOutcome::Rejected(NoSuchBlock);
        };
        if !verify_key(key, &block.key_commitment) {
            return ClaimOutcome::Rejected(BadKey);
        }
        if block_index < entry.claims.len() {
            return ClaimOutcome::Rejected(AlreadyClaimed);
        }
        if block_index > entry.claims.len() {
            return ClaimOutcome::Rejected(OutOfOrder);
        }
        ClaimOutcome::Accepted { confirm_time: now + self.params.confirmation_delay }
    }

    pub fn revealed_keys(
        &self,
        chain_id: ChainId,
        now: SimTime,
    ) -> Result<BTreeMap<usize, PuzzleKey>, LedgerError> {
        let entry = self.chains.get(&chain_id).ok_or(LedgerError::UnknownChain(chain_id))?;
        Ok(entry
            .claims
            .iter()
            .enumerate()
            .filter(|(_, c)| c.claim_time <= now)
            .map(|(i, c)| (i, c.key))
            .collect())
    }

    pub fn confirmed_balance(&self, node: &NodeId, now: SimTime) -> u64 {
        self.chains
            .values()
            .flat_map(|e| e.claims.iter().zip(&e.published_blocks))
            .filter(|(c, _)| &c.claimant == node && c.confirm_time <= now)
            .map(|(_, b)| b.value)
            .sum()
    }

    /// Sum of block values whose claims have confirmed by `now`, over all chains.
    pub fn confirmed_value(&self, now: SimTime) -> u64 {
        self.chains
            .values()
            .flat_map(|e| e.claims.iter().zip(&e.published_blocks))
            .filter(|(c, _)| c.confirm_time <= now)
            .map(|(_, b)| b.value)
            .sum()
    }

    pub fn entry(&self, chain_id: ChainId) -> Option<&LedgerEntry> {
        self.chains.get(&chain_id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.chains.values()
    }

    pub fn claim_log(&self) -> &[ClaimRecord] {
        &self.log
    }

    /// Every node that holds at least one accepted claim.
    pub fn claimants(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> =
            self.chains.values().flat_map(|e| e.claims.iter().map(|c| c.claimant.clone())).collect();
        out.sort();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timelock::generate_chain;

    fn node(s: &str) -> NodeId {
        NodeId::from(s)
    }

    fn t(n: u64) -> SimTime {
        SimTime(n)
    }

    fn ledger(confirm: u64, publish: u64) -> Ledger {
        Ledger::new(LedgerParams {
            confirmation_delay: SimDuration(confirm),
            publication_delay: SimDuration(publish),
        })
    }

    #[test]
    fn publication_is_delayed_and_ids_are_fresh() {
        let mut l = ledger(0, 5);
        let chain = generate_chain(2, 2, &[1, 1], 0).unwrap();
        let a = l.publish_chain(node("s"), chain.published(), t(0)).unwrap();
        let b = l.publish_chain(node("s"), chain.published(), t(0)).unwrap();
        assert_ne!(a, b);
        assert_eq!(l.entry(a).unwrap().visible_at, t(5));
        assert_eq!(l.publish_chain(node("s"), vec![], t(0)), Err(LedgerError::EmptyChain));
        let ok = l.submit_claim(a, 0, chain.keys[0], node("x"), t(4));
        assert_eq!(ok, ClaimOutcome::Rejected(RejectReason::NotVisible));
    }

    #[test]
    fn malformed_blocks_rejected() {
        let mut l = ledger(0, 0);
        let mut blocks = generate_chain(2, 2, &[1, 1], 0).unwrap().published();
        blocks.swap(0, 1);
        assert_eq!(
            l.publish_chain(node("s"), blocks, t(0)),
            Err(LedgerError::BlockIndex { position: 0, index: 1 })
        );
    }

    #[test]
    fn claims_follow_serial_order() {
        let mut l = ledger(0, 0);
        let chain = generate_chain(3, 4, &[10, 20, 30], 1).unwrap();
        let id = l.publish_chain(node("s"), chain.published(), t(0)).unwrap();
        assert_eq!(
            l.submit_claim(id, 1, chain.keys[1], node("a"), t(1)),
            ClaimOutcome::Rejected(RejectReason::OutOfOrder)
        );
        assert!(l.submit_claim(id, 0, chain.keys[0], node("a"), t(2)).is_accepted());
        assert_eq!(
            l.submit_claim(id, 0, chain.keys[0], node("b"), t(3)),
            ClaimOutcome::Rejected(RejectReason::AlreadyClaimed)
        );
        assert_eq!(
            l.submit_claim(id, 1, chain.keys[2], node("b"), t(3)),
            ClaimOutcome::Rejected(RejectReason::BadKey)
        );
        assert_eq!(
            l.submit_claim(id, 7, chain.keys[2], node("b"), t(3)),
            ClaimOutcome::Rejected(RejectReason::NoSuchBlock)
        );
        assert_eq!(
            l.submit_claim(ChainId(99), 0, chain.keys[0], node("b"), t(3)),
            ClaimOutcome::Rejected(RejectReason::UnknownChain)
        );
        assert_eq!(l.claim_log().len(), 6);
    }

    #[test]
    fn revealed_keys_are_contiguous_and_verified() {
        let mut l = ledger(100, 0);
        let chain = generate_chain(4, 3, &[1; 4], 2).unwrap();
        let id = l.publish_chain(node("s"), chain.published(), t(0)).unwrap();
        assert!(l.revealed_keys(id, t(0)).unwrap().is_empty());
        for i in 0..3 {
            assert!(l.submit_claim(id, i, chain.keys[i], node("a"), t(10 + i as u64)).is_accepted());
        }
        let keys = l.revealed_keys(id, t(12)).unwrap();
        assert_eq!(keys.keys().copied().collect::<Vec<_>>(), vec![0, 1, 2]);
        for (i, k) in &keys {
            assert!(verify_key(k, &chain.blocks[*i].key_commitment));
        }
        // Key visibility is instant even though credit is not.
        assert_eq!(l.revealed_keys(id, t(10)).unwrap().len(), 1);
        assert_eq!(l.confirmed_balance(&node("a"), t(12)), 0);
        assert_eq!(l.revealed_keys(ChainId(5), t(0)), Err(LedgerError::UnknownChain(ChainId(5))));
    }

    #[test]
    fn balance_threshold_and_additivity() {
        let mut l = ledger(20, 0);
        let chain = generate_chain(2, 2, &[100, 60], 3).unwrap();
        let id = l.publish_chain(node("s"), chain.published(), t(0)).unwrap();
        assert_eq!(l.confirmed_balance(&node("a"), t(1000)), 0);
        l.submit_claim(id, 0, chain.keys[0], node("a"), t(10));
        assert_eq!(l.confirmed_balance(&node("a"), t(29)), 0);
        assert_eq!(l.confirmed_balance(&node("a"), t(30)), 100);

        let other = generate_chain(2, 2, &[40, 60], 4).unwrap();
        let id2 = l.publish_chain(node("s"), other.published(), t(0)).unwrap();
        l.submit_claim(id2, 0, other.keys[0], node("b"), t(0));
        l.submit_claim(id2, 1, other.keys[1], node("b"), t(0));
        assert_eq!(l.confirmed_balance(&node("b"), t(20)), 100);
    }

    #[test]
    fn replay_yields_identical_state() {
        let chain = generate_chain(3, 2, &[5, 6, 7], 9).unwrap();
        let script = |l: &mut Ledger| {
            let id = l.publish_chain(node("s"), chain.published(), t(0)).unwrap();
            l.submit_claim(id, 1, chain.keys[1], node("a"), t(1));
            l.submit_claim(id, 0, chain.keys[0], node("a"), t(2));
            l.submit_claim(id, 1, chain.keys[1], node("b"), t(3));
        };
        let (mut a, mut b) = (ledger(4, 1), ledger(4, 1));
        script(&mut a);
        script(&mut b);
        assert_eq!(a.claim_log(), b.claim_log());
        assert_eq!(a.entries().collect::<Vec<_>>(), b.entries().collect::<Vec<_>>());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn random_claim_streams_keep_prefix_and_conservation(
                seed in any::<u64>(),
                attempts in proptest::collection::vec((0usize..5, 0usize..3, any::<bool>()), 0..40),
            ) {
                let values = [3u64, 5, 7, 11];
                let chain = generate_chain(4, 2, &values, seed).unwrap();
                let mut l = ledger(2, 0);
                let id = l.publish_chain(node("s"), chain.published(), t(0)).unwrap();
                let nodes = ["a", "b", "c"];
                for (step, (idx, who, honest)) in attempts.iter().enumerate() {
                    let key = if *honest && *idx < 4 { chain.keys[*idx] } else { PuzzleKey([*idx as u8; 32]) };
                    l.submit_claim(id, *idx, key, node(nodes[*who]), t(step as u64));
                    let entry = l.entry(id).unwrap();
                    for (i, c) in entry.claims.iter().enumerate() {
                        prop_assert!(verify_key(&c.key, &entry.published_blocks[i].key_commitment));
                    }
                }
                let end = t(1_000);
                let total: u64 = nodes.iter().map(|n| l.confirmed_balance(&node(n), end)).sum();
                let claimed: u64 = values[..l.entry(id).unwrap().claims.len()].iter().sum();
                prop_assert_eq!(total, claimed);
                prop_assert!(total <= values.iter().sum::<u64>());
            }
        }
    }
}
