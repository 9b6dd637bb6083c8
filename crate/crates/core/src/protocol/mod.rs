//! Node state machines and sender-side setup for the forwarding models:
//! double incentive, all-or-nothing, contract and competing forwarders.
//!
//! Every state machine is a reducer: it takes an event and returns the
//! actions to perform. Timing and delivery of those actions belong to the
//! caller, either the untimed drivers in this module or [`crate::netsim`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timelock::{sha256, Bytes32};

pub mod aon;
pub mod competing;
pub mod contract;
pub mod double;
pub mod forwarder;
pub mod hash;

pub use aon::{run_all_or_nothing, AonOutcome, AonSender};
pub use competing::{run_competing_forwarders, split_rewards, CompetingOutcome, CompetingReceiver, Recoder};
pub use contract::{negotiate_contract, run_contract, ContractPlan, ContractPolicy, ContractState};
pub use double::{reconstruct_key, setup_double_incentive, DoubleIncentiveSetup, HopSetup};
pub use forwarder::{
    forwarder_step, Assignment, Behavior, ForwarderAction, ForwarderEvent, ForwarderState, ReceiverAction,
    ReceiverEvent, ReceiverMode, ReceiverState, Step,
};
pub use hash::{incremental_hash_update, RollingHash};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("message must be at least one byte")]
    EmptyMessage,
    #[error("chunk size {chunk_size} must be in 1..={total_length}")]
    ChunkSize { chunk_size: u64, total_length: u64 },
    #[error("path needs sender, at least one forwarder and receiver; got {0} nodes")]
    PathTooShort(usize),
    #[error("one reward block per forwarder: {forwarders} forwarders but {blocks} blocks")]
    ChainLength { forwarders: usize, blocks: usize },
    #[error("rolling hash already finalized")]
    HashFinalized,
    #[error("contract declined by {holder}: no subcontractor at or below {offer}")]
    ContractDeclined { holder: String, offer: u64 },
    #[error("competing forwarders need at least two paths, got {0}")]
    TooFewPaths(usize),
    #[error(transparent)]
    Coding(#[from] crate::coding::CodingError),
    #[error(transparent)]
    Timelock(#[from] crate::timelock::TimelockError),
    #[error(transparent)]
    Ledger(#[from] crate::ledger::LedgerError),
}

/// What the sender commits to about a message.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageManifest {
    pub message_id: u64,
    pub total_length: u64,
    pub chunk_size: u64,
    #[serde(with = "hex::serde")]
    pub full_hash: Bytes32,
}

impl MessageManifest {
    pub fn for_body(message_id: u64, body: &[u8], chunk_size: u64) -> Result<Self, ProtocolError> {
        let total_length = body.len() as u64;
        if total_length == 0 {
            return Err(ProtocolError::EmptyMessage);
        }
        if chunk_size == 0 || chunk_size > total_length {
            return Err(ProtocolError::ChunkSize { chunk_size, total_length });
        }
        Ok(MessageManifest { message_id, total_length, chunk_size, full_hash: sha256(body) })
    }

    /// The part forwarders may see. The hash is withheld: knowing it would let
    /// a forwarder rebuild its key without carrying the message.
    pub fn header(&self) -> TransferHeader {
        TransferHeader {
            message_id: self.message_id,
            total_length: self.total_length,
            chunk_size: self.chunk_size,
        }
    }

    pub fn chunk_count(&self) -> u64 {
        self.total_length.div_ceil(self.chunk_size)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferHeader {
    pub message_id: u64,
    pub total_length: u64,
    pub chunk_size: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingSetup,
    Receiving,
    Forwarding,
    AwaitingAck,
    Reconstructing,
    Claiming,
    Done,
    Failed,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::AwaitingSetup => "awaiting_setup",
            Phase::Receiving => "receiving",
            Phase::Forwarding => "forwarding",
            Phase::AwaitingAck => "awaiting_ack",
            Phase::Reconstructing => "reconstructing",
            Phase::Claiming => "claiming",
            Phase::Done => "done",
            Phase::Failed => "failed",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Failed)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Deterministic message body used by drivers and the simulator.
pub fn synthetic_body(length: usize, seed: u64) -> Vec<u8> {
    use rand::{RngCore, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut body = vec![0u8; length];
    rng.fill_bytes(&mut body);
    body
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_bounds() {
        assert_eq!(MessageManifest::for_body(1, &[], 1), Err(ProtocolError::EmptyMessage));
        assert!(MessageManifest::for_body(1, &[1, 2], 3).is_err());
        assert!(MessageManifest::for_body(1, &[1, 2], 0).is_err());
        let m = MessageManifest::for_body(1, &[1, 2, 3, 4, 5], 2).unwrap();
        assert_eq!(m.chunk_count(), 3);
        assert_eq!(m.full_hash, sha256(&[1, 2, 3, 4, 5]));
    }
}
