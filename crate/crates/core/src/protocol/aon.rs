//! All-or-nothing forwarding: forwarders learn nothing about each other, the
//! receiver acknowledges end to end over the control plane, and only then does
//! the sender release every forwarder's key.

use super::forwarder::{
    Assignment, Behavior, ForwarderAction, ForwarderEvent, ForwarderState, ReceiverAction, ReceiverEvent,
    ReceiverMode, ReceiverState, Step,
};
use super::{MessageManifest, Phase, ProtocolError};
use crate::ledger::{ChainId, Ledger};
use crate::time::SimTime;
use crate::timelock::{PuzzleChain, PuzzleKey};
use crate::NodeId;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AonSenderEvent {
    ReceiverAck,
    Timeout,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyRelease {
    pub to: NodeId,
    pub block_index: usize,
    pub key: PuzzleKey,
}

/// Sender side: holds the keys until the receiver confirms delivery.
#[derive(Clone, Debug)]
pub struct AonSender {
    phase: Phase,
    forwarders: Vec<NodeId>,
    keys: Vec<PuzzleKey>,
}

impl AonSender {
    pub fn new(forwarders: Vec<NodeId>, chain: &PuzzleChain) -> Result<Self, ProtocolError> {
        if forwarders.len() != chain.len() {
            return Err(ProtocolError::ChainLength { forwarders: forwarders.len(), blocks: chain.len() });
        }
        Ok(AonSender { phase: Phase::AwaitingAck, forwarders, keys: chain.keys.clone() })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn step(&mut self, event: AonSenderEvent) -> Step<KeyRelease> {
        let mut step = Step::default();
        if self.phase != Phase::AwaitingAck {
            return step;
        }
        match event {
            AonSenderEvent::ReceiverAck => {
                step.actions = self
                    .forwarders
                    .iter()
                    .zip(&self.keys)
                    .enumerate()
                    .map(|(block_index, (to, key))| KeyRelease { to: to.clone(), block_index, key: *key })
                    .collect();
                step.transitions.push((self.phase, Phase::Done));
                self.phase = Phase::Done;
            }
            AonSenderEvent::Timeout => {
                step.transitions.push((self.phase, Phase::Failed));
                self.phase = Phase::Failed;
            }
        }
        step
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AonOutcome {
    pub chain_id: Option<ChainId>,
    pub delivered: bool,
    /// Forwarders whose claims the ledger accepted.
    pub paid: Vec<NodeId>,
    pub sender_phase: Phase,
}

/// Untimed reference run. `drop_chunk` removes that chunk on the first link.
/// With no forwarders the sender talks to the receiver directly and no chain
/// is published.
pub fn run_all_or_nothing(
    path: &[NodeId],
    body: &[u8],
    manifest: &MessageManifest,
    chain: Option<&PuzzleChain>,
    drop_chunk: Option<u64>,
    ledger: &mut Ledger,
) -> Result<AonOutcome, ProtocolError> {
    if path.len() < 2 {
        return Err(ProtocolError::PathTooShort(path.len()));
    }
    let sender = path[0].clone();
    let names: Vec<NodeId> = path[1..path.len() - 1].to_vec();
    let mut rx = ReceiverState::new();
    rx.step(ReceiverEvent::Setup {
        header: manifest.header(),
        expected_hash: manifest.full_hash,
        mode: ReceiverMode::EndToEnd { sender: sender.clone() },
    });

    let (chain, chain_id) = match (names.is_empty(), chain) {
        (true, _) => (None, None),
        (false, Some(c)) => {
            let id = ledger.publish_chain(sender.clone(), c.published(), SimTime::ZERO)?;
            (Some(c), Some(id))
        }
        (false, None) => return Err(ProtocolError::ChainLength { forwarders: names.len(), blocks: 0 }),
    };
    let mut sender_sm = chain.map(|c| AonSender::new(names.clone(), c)).transpose()?;
    let mut fws: Vec<ForwarderState> = names
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let mut f = ForwarderState::new(4, Behavior::Honest);
            f.step(ForwarderEvent::Setup {
                header: manifest.header(),
                assignment: Assignment::EndToEnd { block_index: i },
            });
            f
        })
        .collect();

    let mut acked = false;
    for (n, chunk) in body.chunks(manifest.chunk_size as usize).enumerate() {
        if drop_chunk == Some(n as u64) {
            continue;
        }
        let mut carry = Some(chunk.to_vec());
        for f in &mut fws {
            let c = carry.take().expect("relayed");
            for a in f.step(ForwarderEvent::Chunk(c)).actions {
                if let ForwarderAction::ForwardChunk(c) = a {
                    carry = Some(c);
                }
            }
        }
        if let Some(c) = carry {
            acked |= rx
                .step(ReceiverEvent::Chunk(c))
                .actions
                .iter()
                .any(|a| matches!(a, ReceiverAction::AckSender { .. }));
        }
    }

    let delivered = rx.intact() == Some(true);
    let mut paid = Vec::new();
    if let (Some(sm), Some(id)) = (sender_sm.as_mut(), chain_id) {
        let releases = sm.step(if acked { AonSenderEvent::ReceiverAck } else { AonSenderEvent::Timeout }).actions;
        for r in releases {
            let i = names.iter().position(|n| *n == r.to).expect("release to a forwarder");
            for a in fws[i].step(ForwarderEvent::KeyRelease(r.key)).actions {
                if let ForwarderAction::SubmitClaim { block_index, key } = a {
                    let ok = ledger.submit_claim(id, block_index, key, r.to.clone(), SimTime(1)).is_accepted();
                    fws[i].step(ForwarderEvent::ClaimResult { accepted: ok });
                    if ok {
                        paid.push(r.to.clone());
                    }
                }
            }
        }
    }
    Ok(AonOutcome {
        chain_id,
        delivered,
        paid,
        sender_phase: sender_sm.map_or(if delivered { Phase::Done } else { Phase::Failed }, |s| s.phase()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::LedgerParams;
    use crate::protocol::synthetic_body;
    use crate::timelock::generate_chain;

    fn line(n: usize) -> Vec<NodeId> {
        let mut p = vec![NodeId::from("S")];
        p.extend((1..=n).map(|i| NodeId::from(format!("F{i}"))));
        p.push(NodeId::from("R"));
        p
    }

    #[test]
    fn intact_delivery_pays_everyone() {
        let body = synthetic_body(300, 1);
        let m = MessageManifest::for_body(1, &body, 50).unwrap();
        let chain = generate_chain(3, 4, &[10, 10, 10], 1).unwrap();
        let mut ledger = Ledger::new(LedgerParams::default());
        let out = run_all_or_nothing(&line(3), &body, &m, Some(&chain), None, &mut ledger).unwrap();
        assert!(out.delivered);
        assert_eq!(out.paid, line(3)[1..4].to_vec());
        assert_eq!(out.sender_phase, Phase::Done);
    }

    #[test]
    fn dropped_chunk_pays_nobody() {
        let body = synthetic_body(300, 2);
        let m = MessageManifest::for_body(1, &body, 50).unwrap();
        let chain = generate_chain(3, 4, &[10, 10, 10], 2).unwrap();
        let mut ledger = Ledger::new(LedgerParams::default());
        let out = run_all_or_nothing(&line(3), &body, &m, Some(&chain), Some(2), &mut ledger).unwrap();
        assert!(!out.delivered);
        assert!(out.paid.is_empty());
        assert_eq!(out.sender_phase, Phase::Failed);
        assert!(ledger.claim_log().is_empty());
    }

    #[test]
    fn direct_radio_needs_no_chain() {
        let body = synthetic_body(10, 3);
        let m = MessageManifest::for_body(1, &body, 5).unwrap();
        let mut ledger = Ledger::new(LedgerParams::default());
        let out = run_all_or_nothing(&line(0), &body, &m, None, None, &mut ledger).unwrap();
        assert!(out.delivered);
        assert_eq!(out.chain_id, None);
        assert_eq!(ledger.entries().count(), 0);
    }

    #[test]
    fn sender_releases_nothing_on_timeout() {
        let chain = generate_chain(2, 4, &[1, 1], 4).unwrap();
        let mut s = AonSender::new(vec![NodeId::from("a"), NodeId::from("b")], &chain).unwrap();
        assert!(s.step(AonSenderEvent::Timeout).actions.is_empty());
        assert!(s.step(AonSenderEvent::ReceiverAck).actions.is_empty());
        assert_eq!(s.phase(), Phase::Failed);
    }
}
