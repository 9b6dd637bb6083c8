//! Forwarder and receiver reducers.

use std::collections::VecDeque;

use super::double::{reconstruct_key, HopSetup};
use super::hash::RollingHash;
use super::{Phase, TransferHeader};
use crate::timelock::{Bytes32, PuzzleKey};
use crate::NodeId;

/// How a forwarder gets paid for this message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Assignment {
    /// Double incentive: key rebuilt from the next hop's secret.
    Chained(HopSetup),
    /// All-or-nothing: the sender releases the key after end-to-end delivery.
    EndToEnd { block_index: usize },
    /// Plain relay with no reward of its own.
    Relay,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Behavior {
    #[default]
    Honest,
    /// Forwards the message but never returns its secret to the previous hop.
    WithholdAck,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForwarderEvent {
    Setup { header: TransferHeader, assignment: Assignment },
    Chunk(Vec<u8>),
    Ack(Bytes32),
    KeyRelease(PuzzleKey),
    ClaimResult { accepted: bool },
    Timeout,
}

impl ForwarderEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            ForwarderEvent::Setup { .. } => "setup",
            ForwarderEvent::Chunk(_) => "chunk",
            ForwarderEvent::Ack(_) => "ack",
            ForwarderEvent::KeyRelease(_) => "key_release",
            ForwarderEvent::ClaimResult { .. } => "claim_result",
            ForwarderEvent::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ForwarderAction {
    SendAckToPrevious { to: NodeId, secret: Bytes32 },
    ForwardChunk(Vec<u8>),
    SubmitClaim { block_index: usize, key: PuzzleKey },
    Fail(&'static str),
}

impl ForwarderAction {
    pub fn describe(&self) -> String {
        match self {
            ForwarderAction::SendAckToPrevious { to, secret } => {
                format!("send_ack_to_previous({to};{})", &hex::encode(secret)[..16])
            }
            ForwarderAction::ForwardChunk(c) => format!("forward_chunk({})", c.len()),
            ForwarderAction::SubmitClaim { block_index, key } => {
                format!("submit_claim({block_index};{})", &key.to_hex()[..16])
            }
            ForwarderAction::Fail(why) => format!("fail({why})"),
        }
    }
}

/// Result of feeding one event to a reducer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step<A> {
    pub transitions: Vec<(Phase, Phase)>,
    pub actions: Vec<A>,
}

impl<A> Default for Step<A> {
    fn default() -> Self {
        Step { transitions: Vec::new(), actions: Vec::new() }
    }
}

#[derive(Clone, Debug)]
pub struct ForwarderState {
    phase: Phase,
    behavior: Behavior,
    window_capacity: usize,
    header: Option<TransferHeader>,
    assignment: Assignment,
    hash: RollingHash,
    window: VecDeque<Vec<u8>>,
    max_window: usize,
    received_bytes: u64,
    received_secret: Option<Bytes32>,
    digest: Option<Bytes32>,
}

impl ForwarderState {
    pub fn new(window_capacity: usize, behavior: Behavior) -> Self {
        assert!(window_capacity >= 1, "window must hold at least one chunk");
        ForwarderState {
            phase: Phase::AwaitingSetup,
            behavior,
            window_capacity,
            header: None,
            assignment: Assignment::Relay,
            hash: RollingHash::new(),
            window: VecDeque::new(),
            max_window: 0,
            received_bytes: 0,
            received_secret: None,
            digest: None,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn max_window_occupancy(&self) -> usize {
        self.max_window
    }

    pub fn window_capacity(&self) -> usize {
        self.window_capacity
    }

    pub fn received_bytes(&self) -> u64 {
        self.received_bytes
    }

    pub fn digest(&self) -> Option<Bytes32> {
        self.digest
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    fn go(&mut self, step: &mut Step<ForwarderAction>, to: Phase) {
        if self.phase != to {
            step.transitions.push((self.phase, to));
            self.phase = to;
        }
    }

    fn fail(&mut self, step: &mut Step<ForwarderAction>, why: &'static str) {
        self.window.clear();
        step.actions.push(ForwarderAction::Fail(why));
        self.go(step, Phase::Failed);
    }

    pub fn step(&mut self, event: ForwarderEvent) -> Step<ForwarderAction> {
        let mut step = Step::default();
        if self.phase.is_terminal() {
            return step;
        }
        match event {
            ForwarderEvent::Setup { header, assignment } => {
                if self.phase == Phase::AwaitingSetup {
                    self.header = Some(header);
                    self.assignment = assignment;
                    self.go(&mut step, Phase::Receiving);
                }
            }
            ForwarderEvent::Chunk(chunk) => self.on_chunk(&mut step, chunk),
            ForwarderEvent::Ack(secret) => match self.phase {
                Phase::AwaitingAck => self.reconstruct(&mut step, secret),
                Phase::Receiving | Phase::Forwarding => self.received_secret = Some(secret),
                _ => {}
            },
            ForwarderEvent::KeyRelease(key) => {
                if self.phase == Phase::AwaitingAck {
                    if let Assignment::EndToEnd { block_index } = self.assignment {
                        self.go(&mut step, Phase::Reconstructing);
                        step.actions.push(ForwarderAction::SubmitClaim { block_index, key });
                        self.go(&mut step, Phase::Claiming);
                    }
                }
            }
            ForwarderEvent::ClaimResult { accepted } => {
                if self.phase == Phase::Claiming {
                    if accepted {
                        self.go(&mut step, Phase::Done);
                    } else {
                        self.fail(&mut step, "claim_rejected");
                    }
                }
            }
            ForwarderEvent::Timeout => {
                let why = match self.phase {
                    Phase::AwaitingAck => "ack_timeout",
                    Phase::Claiming => "claim_timeout",
                    _ => "transfer_timeout",
                };
                self.fail(&mut step, why);
            }
        }
        step
    }

    fn on_chunk(&mut self, step: &mut Step<ForwarderAction>, chunk: Vec<u8>) {
        let Some(header) = self.header else {
            return self.fail(step, "chunk_before_setup");
        };
        if !matches!(self.phase, Phase::Receiving | Phase::Forwarding) {
            return;
        }
        let len = chunk.len() as u64;
        if self.received_bytes + len > header.total_length {
            return self.fail(step, "chunk_overflow");
        }
        self.received_bytes += len;
        self.hash.update(&chunk).expect("hash finalized only after the last chunk");
        // Only the most recent chunks are retained; older ones are already on
        // the outgoing link and folded into the hash.
        if self.window.len() == self.window_capacity {
            self.window.pop_front();
        }
        self.window.push_back(chunk.clone());
        self.max_window = self.max_window.max(self.window.len());
        step.actions.push(ForwarderAction::ForwardChunk(chunk));
        self.go(step, Phase::Forwarding);

        if self.received_bytes == header.total_length {
            let digest = self.hash.finalize();
            self.digest = Some(digest);
            self.window.clear();
            match self.assignment.clone() {
                Assignment::Chained(setup) => {
                    if self.behavior == Behavior::Honest {
                        step.actions.push(ForwarderAction::SendAckToPrevious {
                            to: setup.ack_address.clone(),
                            secret: setup.secret,
                        });
                    }
                    self.go(step, Phase::AwaitingAck);
                    if let Some(secret) = self.received_secret.take() {
                        self.reconstruct(step, secret);
                    }
                }
                Assignment::EndToEnd { .. } => self.go(step, Phase::AwaitingAck),
                Assignment::Relay => self.go(step, Phase::Done),
            }
        }
    }

    fn reconstruct(&mut self, step: &mut Step<ForwarderAction>, next_secret: Bytes32) {
        let Assignment::Chained(setup) = &self.assignment else { return };
        let digest = self.digest.expect("awaiting ack implies full message");
        let key = reconstruct_key(&setup.nonce, &next_secret, &digest);
        let block_index = setup.block_index();
        self.go(step, Phase::Reconstructing);
        step.actions.push(ForwarderAction::SubmitClaim { block_index, key });
        self.go(step, Phase::Claiming);
    }
}

pub fn forwarder_step(
    mut state: ForwarderState,
    event: ForwarderEvent,
) -> (ForwarderState, Step<ForwarderAction>) {
    let step = state.step(event);
    (state, step)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReceiverMode {
    /// Double incentive: return the final secret to the last forwarder.
    Chained { secret: Bytes32, ack_address: NodeId },
    /// All-or-nothing: acknowledge an intact message to the sender.
    EndToEnd { sender: NodeId },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReceiverEvent {
    Setup { header: TransferHeader, expected_hash: Bytes32, mode: ReceiverMode },
    Chunk(Vec<u8>),
    Timeout,
}

impl ReceiverEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            ReceiverEvent::Setup { .. } => "setup",
            ReceiverEvent::Chunk(_) => "chunk",
            ReceiverEvent::Timeout => "timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReceiverAction {
    SendAckToPrevious { to: NodeId, secret: Bytes32 },
    AckSender { to: NodeId },
    Delivered { intact: bool },
    Fail(&'static str),
}

impl ReceiverAction {
    pub fn describe(&self) -> String {
        match self {
            ReceiverAction::SendAckToPrevious { to, secret } => {
                format!("send_ack_to_previous({to};{})", &hex::encode(secret)[..16])
            }
            ReceiverAction::AckSender { to } => format!("ack_sender({to})"),
            ReceiverAction::Delivered { intact } => format!("delivered({intact})"),
            ReceiverAction::Fail(why) => format!("fail({why})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ReceiverState {
    phase: Phase,
    setup: Option<(TransferHeader, Bytes32, ReceiverMode)>,
    hash: RollingHash,
    received_bytes: u64,
    intact: Option<bool>,
}

impl Default for ReceiverState {
    fn default() -> Self {
        ReceiverState {
            phase: Phase::AwaitingSetup,
            setup: None,
            hash: RollingHash::new(),
            received_bytes: 0,
            intact: None,
        }
    }
}

impl ReceiverState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn intact(&self) -> Option<bool> {
        self.intact
    }

    pub fn received_bytes(&self) -> u64 {
        self.received_bytes
    }

    fn go(&mut self, step: &mut Step<ReceiverAction>, to: Phase) {
        if self.phase != to {
            step.transitions.push((self.phase, to));
            self.phase = to;
        }
    }

    pub fn step(&mut self, event: ReceiverEvent) -> Step<ReceiverAction> {
        let mut step = Step::default();
        if self.phase.is_terminal() {
            return step;
        }
        match event {
            ReceiverEvent::Setup { header, expected_hash, mode } => {
                if self.phase == Phase::AwaitingSetup {
                    self.setup = Some((header, expected_hash, mode));
                    self.go(&mut step, Phase::Receiving);
                }
            }
            ReceiverEvent::Chunk(chunk) => {
                let Some((header, expected, mode)) = self.setup.clone() else {
                    step.actions.push(ReceiverAction::Fail("chunk_before_setup"));
                    self.go(&mut step, Phase::Failed);
                    return step;
                };
                if self.received_bytes + chunk.len() as u64 > header.total_length {
                    step.actions.push(ReceiverAction::Fail("chunk_overflow"));
                    self.go(&mut step, Phase::Failed);
                    return step;
                }
                self.received_bytes += chunk.len() as u64;
                self.hash.update(&chunk).expect("not finalized before the last chunk");
                if self.received_bytes == header.total_length {
                    let intact = self.hash.finalize() == expected;
                    self.intact = Some(intact);
                    step.actions.push(ReceiverAction::Delivered { intact });
                    match mode {
                        ReceiverMode::Chained { secret, ack_address } => {
                            step.actions.push(ReceiverAction::SendAckToPrevious { to: ack_address, secret });
                        }
                        ReceiverMode::EndToEnd { sender } => {
                            if intact {
                                step.actions.push(ReceiverAction::AckSender { to: sender });
                            }
                        }
                    }
                    self.go(&mut step, if intact { Phase::Done } else { Phase::Failed });
                }
            }
            ReceiverEvent::Timeout => {
                step.actions.push(ReceiverAction::Fail("transfer_timeout"));
                self.go(&mut step, Phase::Failed);
            }
        }
        step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::double::setup_double_incentive;
    use crate::protocol::{synthetic_body, MessageManifest};
    use crate::timelock::{generate_chain, verify_key};

    fn chained(hop: HopSetup, header: TransferHeader) -> ForwarderEvent {
        ForwarderEvent::Setup { header, assignment: Assignment::Chained(hop) }
    }

    fn claims(step: &Step<ForwarderAction>) -> Vec<(usize, PuzzleKey)> {
        step.actions
            .iter()
            .filter_map(|a| match a {
                ForwarderAction::SubmitClaim { block_index, key } => Some((*block_index, *key)),
                _ => None,
            })
            .collect()
    }

    /// Walks a message down a line of reducers, delivering acks instantly.
    #[test]
    fn honest_line_of_three_claims_every_block() {
        let body = synthetic_body(1000, 1);
        let m = MessageManifest::for_body(7, &body, 64).unwrap();
        let chain = generate_chain(3, 10, &[5, 5, 5], 2).unwrap();
        let path: Vec<NodeId> = ["S", "F1", "F2", "F3", "R"].into_iter().map(NodeId::from).collect();
        let setup = setup_double_incentive(&path, &m, &chain, 3).unwrap();
        let mut fw: Vec<ForwarderState> = (0..3).map(|_| ForwarderState::new(4, Behavior::Honest)).collect();
        for (f, (_, hop)) in fw.iter_mut().zip(&setup.hops) {
            f.step(chained(hop.clone(), m.header()));
        }
        let mut rx = ReceiverState::new();
        rx.step(ReceiverEvent::Setup {
            header: m.header(),
            expected_hash: m.full_hash,
            mode: ReceiverMode::Chained { secret: setup.receiver_secret, ack_address: path[3].clone() },
        });
        let mut acks: Vec<(NodeId, Bytes32)> = Vec::new();
        for chunk in body.chunks(64) {
            let mut carry = chunk.to_vec();
            for (i, f) in fw.iter_mut().enumerate() {
                let s = f.step(ForwarderEvent::Chunk(carry.clone()));
                for a in s.actions {
                    match a {
                        ForwarderAction::ForwardChunk(c) => carry = c,
                        ForwarderAction::SendAckToPrevious { to, secret } => {
                            assert_eq!(to, path[i]);
                            acks.push((to, secret));
                        }
                        other => panic!("unexpected {other:?}"),
                    }
                }
            }
            for a in rx.step(ReceiverEvent::Chunk(carry)).actions {
                if let ReceiverAction::SendAckToPrevious { to, secret } = a {
                    acks.push((to, secret));
                }
            }
        }
        assert_eq!(rx.intact(), Some(true));
        let mut got = Vec::new();
        for (to, secret) in acks {
            if let Some(i) = path[1..4].iter().position(|p| *p == to) {
                got.extend(claims(&fw[i].step(ForwarderEvent::Ack(secret))));
            }
        }
        got.sort_by_key(|c| c.0);
        assert_eq!(got.len(), 3);
        for (idx, key) in got {
            assert!(verify_key(&key, &chain.blocks[idx].key_commitment));
        }
        for f in &mut fw {
            assert_eq!(f.phase(), Phase::Claiming);
            f.step(ForwarderEvent::ClaimResult { accepted: true });
            assert_eq!(f.phase(), Phase::Done);
            assert!(f.max_window_occupancy() <= 4);
        }
    }

    #[test]
    fn phases_visit_awaiting_ack_before_reconstructing() {
        let body = b"0123456789".to_vec();
        let m = MessageManifest::for_body(1, &body, 5).unwrap();
        let chain = generate_chain(1, 3, &[1], 4).unwrap();
        let path: Vec<NodeId> = ["S", "F1", "R"].into_iter().map(NodeId::from).collect();
        let setup = setup_double_incentive(&path, &m, &chain, 4).unwrap();
        let mut f = ForwarderState::new(2, Behavior::Honest);
        let mut seen = Vec::new();
        seen.extend(f.step(chained(setup.hops[0].1.clone(), m.header())).transitions);
        // Ack arriving early is parked until the message is complete.
        seen.extend(f.step(ForwarderEvent::Chunk(body[..5].to_vec())).transitions);
        seen.extend(f.step(ForwarderEvent::Ack(setup.receiver_secret)).transitions);
        let last = f.step(ForwarderEvent::Chunk(body[5..].to_vec()));
        seen.extend(last.transitions.clone());
        let phases: Vec<Phase> = seen.iter().map(|t| t.1).collect();
        assert_eq!(
            phases,
            [Phase::Receiving, Phase::Forwarding, Phase::AwaitingAck, Phase::Reconstructing, Phase::Claiming]
        );
        let c = claims(&last);
        assert!(verify_key(&c[0].1, &chain.blocks[0].key_commitment));
    }

    #[test]
    fn withheld_ack_times_out_without_claim() {
        let body = b"abcdef".to_vec();
        let m = MessageManifest::for_body(1, &body, 3).unwrap();
        let chain = generate_chain(2, 3, &[1, 1], 4).unwrap();
        let path: Vec<NodeId> = ["S", "F1", "F2", "R"].into_iter().map(NodeId::from).collect();
        let setup = setup_double_incentive(&path, &m, &chain, 4).unwrap();
        let mut f1 = ForwarderState::new(2, Behavior::Honest);
        let mut f2 = ForwarderState::new(2, Behavior::WithholdAck);
        f1.step(chained(setup.hops[0].1.clone(), m.header()));
        f2.step(chained(setup.hops[1].1.clone(), m.header()));
        for c in body.chunks(3) {
            f1.step(ForwarderEvent::Chunk(c.to_vec()));
            let s = f2.step(ForwarderEvent::Chunk(c.to_vec()));
            assert!(!s.actions.iter().any(|a| matches!(a, ForwarderAction::SendAckToPrevious { .. })));
        }
        assert_eq!(f1.phase(), Phase::AwaitingAck);
        let s = f1.step(ForwarderEvent::Timeout);
        assert_eq!(s.actions, vec![ForwarderAction::Fail("ack_timeout")]);
        assert_eq!(f1.phase(), Phase::Failed);
        // The defector still holds a usable key from the receiver's secret.
        let s = f2.step(ForwarderEvent::Ack(setup.receiver_secret));
        assert!(verify_key(&claims(&s)[0].1, &chain.blocks[1].key_commitment));
    }

    #[test]
    fn corrupted_chunk_breaks_downstream_key() {
        let body = b"abcdefgh".to_vec();
        let m = MessageManifest::for_body(1, &body, 4).unwrap();
        let chain = generate_chain(1, 3, &[1], 4).unwrap();
        let path: Vec<NodeId> = ["S", "F1", "R"].into_iter().map(NodeId::from).collect();
        let setup = setup_double_incentive(&path, &m, &chain, 4).unwrap();
        let mut f = ForwarderState::new(2, Behavior::Honest);
        f.step(chained(setup.hops[0].1.clone(), m.header()));
        f.step(ForwarderEvent::Chunk(b"abcx".to_vec()));
        f.step(ForwarderEvent::Chunk(b"efgh".to_vec()));
        let s = f.step(ForwarderEvent::Ack(setup.receiver_secret));
        assert!(!verify_key(&claims(&s)[0].1, &chain.blocks[0].key_commitment));
    }

    #[test]
    fn overflow_and_early_chunk_fail() {
        let header = TransferHeader { message_id: 1, total_length: 4, chunk_size: 4 };
        let mut f = ForwarderState::new(1, Behavior::Honest);
        assert_eq!(f.step(ForwarderEvent::Chunk(vec![1])).actions, vec![ForwarderAction::Fail("chunk_before_setup")]);
        let mut f = ForwarderState::new(1, Behavior::Honest);
        f.step(ForwarderEvent::Setup { header, assignment: Assignment::Relay });
        f.step(ForwarderEvent::Chunk(vec![1, 2, 3]));
        let s = f.step(ForwarderEvent::Chunk(vec![4, 5]));
        assert_eq!(s.actions, vec![ForwarderAction::Fail("chunk_overflow")]);
        assert_eq!(f.phase(), Phase::Failed);
    }

    #[test]
    fn end_to_end_key_release() {
        let header = TransferHeader { message_id: 1, total_length: 2, chunk_size: 2 };
        let mut f = ForwarderState::new(1, Behavior::Honest);
        f.step(ForwarderEvent::Setup { header, assignment: Assignment::EndToEnd { block_index: 3 } });
        f.step(ForwarderEvent::Chunk(vec![1, 2]));
        assert_eq!(f.phase(), Phase::AwaitingAck);
        let s = f.step(ForwarderEvent::KeyRelease(PuzzleKey([7; 32])));
        assert_eq!(s.actions, vec![ForwarderAction::SubmitClaim { block_index: 3, key: PuzzleKey([7; 32]) }]);
        let s = f.step(ForwarderEvent::ClaimResult { accepted: false });
        assert_eq!(s.actions, vec![ForwarderAction::Fail("claim_rejected")]);
    }

    #[test]
    fn window_stays_bounded_for_a_million_chunks() {
        let n: u64 = 1_000_000;
        let header = TransferHeader { message_id: 1, total_length: n, chunk_size: 1 };
        let mut f = ForwarderState::new(8, Behavior::Honest);
        f.step(ForwarderEvent::Setup { header, assignment: Assignment::Relay });
        for i in 0..n {
            f.step(ForwarderEvent::Chunk(vec![i as u8]));
        }
        assert_eq!(f.phase(), Phase::Done);
        assert!(f.max_window_occupancy() <= 8);
        assert_eq!(f.received_bytes(), n);
    }

    #[test]
    fn receiver_end_to_end_acks_only_intact() {
        let body = b"hello".to_vec();
        let m = MessageManifest::for_body(1, &body, 5).unwrap();
        let setup = |rx: &mut ReceiverState| {
            rx.step(ReceiverEvent::Setup {
                header: m.header(),
                expected_hash: m.full_hash,
                mode: ReceiverMode::EndToEnd { sender: NodeId::from("S") },
            });
        };
        let mut rx = ReceiverState::new();
        setup(&mut rx);
        let s = rx.step(ReceiverEvent::Chunk(body.clone()));
        assert!(s.actions.contains(&ReceiverAction::AckSender { to: NodeId::from("S") }));
        let mut rx = ReceiverState::new();
        setup(&mut rx);
        let s = rx.step(ReceiverEvent::Chunk(b"hellp".to_vec()));
        assert_eq!(s.actions, vec![ReceiverAction::Delivered { intact: false }]);
        assert_eq!(rx.phase(), Phase::Failed);
    }
}
