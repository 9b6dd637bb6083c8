//! Incentivised multihop forwarding with time-locked puzzle rewards.
//!
//! Senders lock payments for forwarders inside chains of iterated-hash
//! puzzles published on a ledger. A forwarder that delivers the message
//! quickly learns its key from the protocol and claims the reward; anyone
//! else has to brute force the chain in order. The crate contains the
//! puzzle construction, a simulated ledger, the per-node protocol state
//! machines for four forwarding models, GF(256) network coding, pricing,
//! and a deterministic discrete-event simulator that ties them together.

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod coding;
pub mod economics;
pub mod ledger;
pub mod netsim;
pub mod protocol;
pub mod time;
pub mod timelock;

pub use ledger::{ChainId, ClaimOutcome, Ledger, LedgerParams, RejectReason};
pub use time::{SimDuration, SimTime};
pub use timelock::{PublishedBlock, PuzzleChain, PuzzleKey};

/// Name of a node as it appears in scenarios and reports.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}
