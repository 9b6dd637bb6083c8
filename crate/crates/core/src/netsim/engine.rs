//! The event loop and the per-model workload drivers.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::cache::{choose_offer, ContentCache};
use super::report::{ClaimRow, LatencyRow, SimulationReport, TraceRow, WorkloadSummary};
use super::scenario::{validate, FaultKind, Model, NodeBehavior, Role, ScenarioConfig};
use super::topology::{transfer_time, Topology};
use super::NetsimError;
use crate::coding::{encode, CodedPacket, Generation};
use crate::economics::{conserves_value, settle, surge_price, BusyLog, CapabilityQuote};
use crate::ledger::{ChainId, ClaimOutcome, Ledger, LedgerParams};
use crate::protocol::aon::{AonSender, AonSenderEvent};
use crate::protocol::competing::share_with_upstream;
use crate::protocol::contract::ContractTopology;
use crate::protocol::{
    negotiate_contract, setup_double_incentive, split_rewards, synthetic_body, Assignment, Behavior,
    CompetingReceiver, ContractPolicy, ForwarderAction, ForwarderEvent, ForwarderState, MessageManifest, Phase,
    ProtocolError, ReceiverAction, ReceiverEvent, ReceiverMode, ReceiverState, Recoder, Step,
};
use crate::time::{SimDuration, SimTime};
use crate::timelock::{generate_chain, solve_block, Bytes32, PuzzleChain, PuzzleKey};
use crate::NodeId;

/// Derives an independent stream seed for one purpose from the scenario seed.
pub fn sub_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}

/// Validates `cfg` and simulates it until quiescence or the horizon.
pub fn run(cfg: &ScenarioConfig) -> Result<SimulationReport, NetsimError> {
    let diagnostics = validate(cfg);
    if !diagnostics.is_empty() {
        return Err(NetsimError::Invalid(diagnostics));
    }
    Sim::new(cfg).run()
}

#[derive(Clone, Debug)]
enum SetupMsg {
    Forwarder(Assignment),
    Receiver(ReceiverMode),
}

#[derive(Debug)]
enum Ev {
    PublishStandalone { chain_cfg: usize },
    ChainVisible { chain: ChainId },
    WorkloadStart { w: usize },
    Request { w: usize, n: usize },
    Setup { d: usize, node: NodeId, msg: SetupMsg },
    Begin { d: usize },
    Chunk { d: usize, hop: usize, chunk_no: u64, data: Vec<u8> },
    Ack { d: usize, to: NodeId, secret: Bytes32 },
    EndToEndAck { d: usize },
    KeyDelivery { d: Option<usize>, chain: ChainId, block: usize, key: PuzzleKey, to: NodeId },
    NodeIdle { d: usize, node: NodeId },
    SenderIdle { d: usize },
    ClaimPatience { p: usize },
    CrackerDone { c: usize, chain: ChainId, epoch: u64 },
    Confirmation,
    CompetingBegin { w: usize },
    Coded { w: usize, path: usize, hop: usize, packet: CodedPacket },
    CompetingDone { w: usize },
}

struct Queued {
    time: SimTime,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time, self.seq).cmp(&(other.time, other.seq))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LineKind {
    Chained,
    EndToEnd,
    Contract,
}

#[derive(Clone, Copy, Debug)]
struct Activity {
    last: SimTime,
    armed: bool,
}

struct Member {
    state: ForwarderState,
    activity: Activity,
    charged: bool,
}

struct Level {
    chain: ChainId,
    key: PuzzleKey,
    principal: NodeId,
    contractor: NodeId,
}

/// One message moving along a line of nodes.
struct Delivery {
    workload: usize,
    label: String,
    kind: LineKind,
    path: Vec<NodeId>,
    manifest: MessageManifest,
    body: Vec<u8>,
    start: SimTime,
    members: BTreeMap<NodeId, Member>,
    rx: ReceiverState,
    rx_activity: Activity,
    payer: NodeId,
    chain: Option<(ChainId, PuzzleChain)>,
    aon: Option<AonSender>,
    sender_phase: Phase,
    sender_activity: Activity,
    levels: Vec<Level>,
    finished: Option<(SimTime, bool)>,
    store_content: bool,
}

struct Relay {
    recoder: Recoder,
    rng: ChaCha8Rng,
    active: bool,
}

struct CompetingRt {
    /// Sender, forwarders, receiver for every path.
    paths: Vec<Vec<NodeId>>,
    generation: Generation,
    body: Vec<u8>,
    relays: BTreeMap<NodeId, Relay>,
    rx: CompetingReceiver,
    rx_active: bool,
    start: SimTime,
    completed: Option<SimTime>,
    decoded: bool,
    payouts: BTreeMap<NodeId, u64>,
}

#[derive(Clone, Copy, Debug)]
enum ChainRole {
    Standalone,
    Delivery,
    ContractLevel { d: usize, level: usize },
    Competing,
}

#[derive(Default)]
struct Job {
    target: Option<usize>,
    epoch: u64,
}

struct Cracker {
    id: NodeId,
    rate: u64,
    jobs: BTreeMap<ChainId, Job>,
}

struct PendingClaim {
    chain: ChainId,
    block: usize,
    key: PuzzleKey,
    claimant: NodeId,
    owner: Option<usize>,
    open: bool,
}

#[derive(Clone, Copy)]
enum Claimer {
    Member(usize),
    Bare,
    Cracker,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    seed: u64,
    topo: Topology,
    ledger: Ledger,
    queue: BinaryHeap<Reverse<Queued>>,
    seq: u64,
    now: SimTime,
    idle_timeout: SimDuration,
    patience: SimDuration,
    surge_window: SimDuration,
    fault_rng: ChaCha8Rng,
    busy_until: BTreeMap<(NodeId, NodeId), SimTime>,
    usage: BTreeMap<(NodeId, NodeId), BusyLog>,
    deliveries: Vec<Delivery>,
    competing: BTreeMap<usize, CompetingRt>,
    caches: BTreeMap<NodeId, ContentCache>,
    crackers: Vec<Cracker>,
    pending: Vec<PendingClaim>,
    dirty: BTreeSet<ChainId>,
    chain_roles: BTreeMap<ChainId, ChainRole>,
    workload_chains: BTreeMap<usize, Vec<u64>>,
    notes: BTreeMap<usize, Vec<String>>,
    costs: BTreeMap<NodeId, u64>,
    trace: Vec<TraceRow>,
    events: u64,
}

fn secs(s: f64) -> SimTime {
    SimTime(SimDuration::from_secs_f64(s).as_nanos())
}

fn describe_all<A>(actions: &[A], f: impl Fn(&A) -> String) -> Vec<String> {
    actions.iter().map(f).collect()
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let topo = Topology::from_config(cfg);
        let ledger = Ledger::new(LedgerParams {
            confirmation_delay: SimDuration::from_secs_f64(cfg.ledger.confirmation_delay),
            publication_delay: SimDuration::from_secs_f64(cfg.ledger.publication_delay),
        });
        let crackers = topo
            .nodes()
            .filter(|n| n.role == Role::Cracker)
            .map(|n| Cracker { id: n.id.clone(), rate: n.hash_rate, jobs: BTreeMap::new() })
            .collect();
        let caches = topo
            .nodes()
            .filter(|n| n.role == Role::Cache)
            .map(|n| (n.id.clone(), ContentCache::new(n.cache_capacity)))
            .collect();
        let mut sim = Sim {
            cfg,
            seed: cfg.seed,
            topo,
            ledger,
            queue: BinaryHeap::new(),
            seq: 0,
            now: SimTime::ZERO,
            idle_timeout: SimDuration::from_secs_f64(cfg.params.ack_timeout),
            patience: SimDuration::from_secs_f64(cfg.params.claim_patience),
            surge_window: SimDuration::from_secs_f64(cfg.params.surge_window),
            fault_rng: ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, "faults", 0)),
            busy_until: BTreeMap::new(),
            usage: BTreeMap::new(),
            deliveries: Vec::new(),
            competing: BTreeMap::new(),
            caches,
            crackers,
            pending: Vec::new(),
            dirty: BTreeSet::new(),
            chain_roles: BTreeMap::new(),
            workload_chains: BTreeMap::new(),
            notes: BTreeMap::new(),
            costs: BTreeMap::new(),
            trace: Vec::new(),
            events: 0,
        };
        for (i, c) in cfg.chains.iter().enumerate() {
            if let Some(t) = c.publish_at {
                sim.schedule(secs(t), Ev::PublishStandalone { chain_cfg: i });
            }
        }
        for (w, wl) in cfg.workloads.iter().enumerate() {
            if wl.model == Model::CacheDemo {
                for (n, &t) in wl.requests.iter().enumerate() {
                    sim.schedule(secs(t), Ev::Request { w, n });
                }
            } else {
                sim.schedule(secs(wl.start), Ev::WorkloadStart { w });
            }
        }
        sim
    }

    fn schedule(&mut self, time: SimTime, ev: Ev) {
        debug_assert!(time >= self.now, "events may not be scheduled in the past");
        self.seq += 1;
        self.queue.push(Reverse(Queued { time, seq: self.seq, ev }));
    }

    fn run(mut self) -> Result<SimulationReport, NetsimError> {
        let horizon = secs(self.cfg.horizon);
        let mut quiescent = true;
        while let Some(Reverse(head)) = self.queue.peek() {
            if head.time > horizon {
                quiescent = false;
                break;
            }
            let Reverse(q) = self.queue.pop().expect("peeked");
            self.now = q.time;
            self.dispatch(q.ev)?;
            self.settle_chains()?;
            self.events += 1;
        }
        let end = if quiescent { self.now } else { horizon };
        self.report(end, horizon, quiescent)
    }

    fn record(&mut self, node: &NodeId, current: Phase, transitions: &[(Phase, Phase)], event: &str, actions: Vec<String>) {
        let from_to: Vec<(String, String)> =
            transitions.iter().map(|(a, b)| (a.as_str().to_string(), b.as_str().to_string())).collect();
        self.record_labels(node, current.as_str(), &from_to, event, actions);
    }

    fn record_labels(&mut self, node: &NodeId, current: &str, transitions: &[(String, String)], event: &str, actions: Vec<String>) {
        let actions: Vec<String> = if transitions.is_empty() {
            actions.into_iter().filter(|a| !a.starts_with("forward_chunk")).collect()
        } else {
            actions
        };
        if transitions.is_empty() && actions.is_empty() {
            return;
        }
        let rows: Vec<(String, String)> = if transitions.is_empty() {
            vec![(current.to_string(), current.to_string())]
        } else {
            transitions.to_vec()
        };
        let last = rows.len() - 1;
        for (i, (from, to)) in rows.into_iter().enumerate() {
            self.trace.push(TraceRow {
                time: self.now.as_nanos(),
                node: node.to_string(),
                phase_from: from,
                phase_to: to,
                event: event.to_string(),
                actions: if i == last { actions.join("; ") } else { String::new() },
            });
        }
    }

    fn note(&mut self, node: &NodeId, from: &str, to: &str, event: &str, action: String) {
        let t = [(from.to_string(), to.to_string())];
        self.record_labels(node, from, &t, event, if action.is_empty() { vec![] } else { vec![action] });
    }

    fn charge(&mut self, node: &NodeId) {
        let cost = self.topo.node(node).map_or(0, |n| n.forwarding_cost);
        if cost > 0 {
            *self.costs.entry(node.clone()).or_default() += cost;
        }
    }

    /// Queues `bytes` on the directed data link and returns the arrival time
    /// of the last bit at the far end.
    fn occupy(&mut self, from: &NodeId, to: &NodeId, bytes: u64) -> SimTime {
        let link = self.topo.data_link(from, to).expect("validated path hop");
        let (ser, delay) = (link.serialization(bytes), link.delay);
        let key = (from.clone(), to.clone());
        let start = self.now.max(self.busy_until.get(&key).copied().unwrap_or(SimTime::ZERO));
        let end = start + ser;
        self.busy_until.insert(key.clone(), end);
        self.usage.entry(key).or_default().record(start, end);
        end + delay
    }

    fn publish(&mut self, publisher: NodeId, chain: &PuzzleChain, role: ChainRole, w: Option<usize>) -> Result<ChainId, NetsimError> {
        let id = self.ledger.publish_chain(publisher, chain.published(), self.now)?;
        let visible = self.ledger.entry(id).expect("just published").visible_at;
        self.schedule(visible, Ev::ChainVisible { chain: id });
        self.chain_roles.insert(id, role);
        if let Some(w) = w {
            self.workload_chains.entry(w).or_default().push(id.0);
        }
        Ok(id)
    }

    fn dispatch(&mut self, ev: Ev) -> Result<(), NetsimError> {
        match ev {
            Ev::PublishStandalone { chain_cfg } => {
                let c = &self.cfg.chains[chain_cfg];
                let chain = generate_chain(c.values.len(), c.iterations, &c.values, sub_seed(self.seed, "standalone", chain_cfg as u64))?;
                let publisher = NodeId::from(c.publisher.clone().expect("validated"));
                self.publish(publisher, &chain, ChainRole::Standalone, None)?;
            }
            Ev::ChainVisible { chain } => {
                self.dirty.insert(chain);
            }
            Ev::WorkloadStart { w } => self.start_workload(w)?,
            Ev::Request { w, n } => self.cache_request(w, n)?,
            Ev::Setup { d, node, msg } => self.on_setup(d, node, msg),
            Ev::Begin { d } => self.on_begin(d),
            Ev::Chunk { d, hop, chunk_no, data } => self.on_chunk(d, hop, chunk_no, data),
            Ev::Ack { d, to, secret } => self.on_ack(d, to, secret),
            Ev::EndToEndAck { d } => self.on_end_to_end_ack(d),
            Ev::KeyDelivery { d, chain, block, key, to } => self.on_key(d, chain, block, key, to),
            Ev::NodeIdle { d, node } => self.on_node_idle(d, node),
            Ev::SenderIdle { d } => self.on_sender_idle(d),
            Ev::ClaimPatience { p } => {
                if self.pending[p].open {
                    self.submit_pending(p);
                }
            }
            Ev::CrackerDone { c, chain, epoch } => self.on_cracker_done(c, chain, epoch)?,
            Ev::Confirmation => {}
            Ev::CompetingBegin { w } => self.on_competing_begin(w),
            Ev::Coded { w, path, hop, packet } => self.on_coded(w, path, hop, packet)?,
            Ev::CompetingDone { w } => self.on_competing_done(w)?,
        }
        Ok(())
    }

    // ----- line deliveries (double incentive, all-or-nothing, contract, cache) -----

    fn start_workload(&mut self, w: usize) -> Result<(), NetsimError> {
        let wl = &self.cfg.workloads[w];
        let path: Vec<NodeId> = wl.path.iter().map(|s| NodeId::from(s.as_str())).collect();
        match wl.model {
            Model::DoubleIncentive | Model::AllOrNothing => {
                let kind = if wl.model == Model::DoubleIncentive { LineKind::Chained } else { LineKind::EndToEnd };
                let payees = path[1..path.len() - 1].to_vec();
                let (values, iterations) = match wl.chain.as_deref().and_then(|c| self.cfg.chain(c)) {
                    Some(c) => (c.values.clone(), c.iterations),
                    None => (Vec::new(), 1),
                };
                let payer = path[0].clone();
                self.start_line(w, "delivery".into(), path, kind, payees, values, iterations, payer, false)?;
            }
            Model::Contract => self.start_contract(w)?,
            Model::Competing => self.start_competing(w)?,
            Model::CacheDemo => unreachable!("cache workloads are driven by requests"),
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn start_line(
        &mut self,
        w: usize,
        label: String,
        path: Vec<NodeId>,
        kind: LineKind,
        payees: Vec<NodeId>,
        values: Vec<u64>,
        iterations: u64,
        payer: NodeId,
        store_content: bool,
    ) -> Result<usize, NetsimError> {
        let d = self.deliveries.len();
        let wl = &self.cfg.workloads[w];
        let body = synthetic_body(wl.message_length as usize, sub_seed(self.seed, "body", w as u64));
        let manifest = MessageManifest::for_body(d as u64, &body, wl.chunk_size)?;
        let chain = if payees.is_empty() {
            None
        } else {
            let c = generate_chain(payees.len(), iterations, &values, sub_seed(self.seed, "chain", d as u64))?;
            let id = self.publish(payer.clone(), &c, ChainRole::Delivery, Some(w))?;
            Some((id, c))
        };
        let n = path.len();
        let sender = path[0].clone();
        let receiver = path[n - 1].clone();
        let mut setups: Vec<(NodeId, SetupMsg)> = Vec::new();
        let mut begin = self.now;
        match kind {
            LineKind::Chained => {
                let (id, c) = chain.as_ref().expect("double incentive has a chain");
                begin = begin.max(self.ledger.entry(*id).expect("published").visible_at);
                let s = setup_double_incentive(&path, &manifest, c, sub_seed(self.seed, "secrets", d as u64))?;
                for (node, hop) in s.hops {
                    setups.push((node, SetupMsg::Forwarder(Assignment::Chained(hop))));
                }
                setups.push((
                    receiver.clone(),
                    SetupMsg::Receiver(ReceiverMode::Chained {
                        secret: s.receiver_secret,
                        ack_address: s.receiver_ack_address,
                    }),
                ));
            }
            LineKind::EndToEnd | LineKind::Contract => {
                for f in &path[1..n - 1] {
                    let a = match payees.iter().position(|p| p == f) {
                        Some(block_index) if kind == LineKind::EndToEnd => Assignment::EndToEnd { block_index },
                        _ => Assignment::Relay,
                    };
                    setups.push((f.clone(), SetupMsg::Forwarder(a)));
                }
                setups.push((receiver.clone(), SetupMsg::Receiver(ReceiverMode::EndToEnd { sender: payer.clone() })));
            }
        }
        for (node, msg) in setups {
            let at = self.now + self.topo.control_delay(&payer, &node);
            begin = begin.max(at);
            self.schedule(at, Ev::Setup { d, node, msg });
        }
        if sender != payer {
            begin = begin.max(self.now + self.topo.control_delay(&payer, &sender));
        }
        self.schedule(begin, Ev::Begin { d });

        let members = path[1..n - 1]
            .iter()
            .map(|f| {
                let behavior = match self.topo.node(f).map(|x| x.behavior) {
                    Some(NodeBehavior::WithholdAck) => Behavior::WithholdAck,
                    _ => Behavior::Honest,
                };
                let m = Member {
                    state: ForwarderState::new(self.cfg.params.window_chunks, behavior),
                    activity: Activity { last: self.now, armed: false },
                    charged: false,
                };
                (f.clone(), m)
            })
            .collect();
        let aon = match (&chain, kind) {
            (Some((_, c)), LineKind::EndToEnd) => Some(AonSender::new(payees.clone(), c)?),
            _ => None,
        };
        self.deliveries.push(Delivery {
            workload: w,
            label,
            kind,
            path,
            manifest,
            body,
            start: self.now,
            members,
            rx: ReceiverState::new(),
            rx_activity: Activity { last: self.now, armed: false },
            payer,
            chain,
            aon,
            sender_phase: Phase::AwaitingSetup,
            sender_activity: Activity { last: self.now, armed: false },
            levels: Vec::new(),
            finished: None,
            store_content,
        });
        Ok(d)
    }

    fn on_setup(&mut self, d: usize, node: NodeId, msg: SetupMsg) {
        self.touch_sender(d);
        let header = self.deliveries[d].manifest.header();
        match msg {
            SetupMsg::Forwarder(assignment) => {
                let m = self.deliveries[d].members.get_mut(&node).expect("member");
                m.activity.last = self.now;
                let step = m.state.step(ForwarderEvent::Setup { header, assignment });
                let phase = m.state.phase();
                self.record(&node, phase, &step.transitions, "setup", vec![]);
                self.arm_member(d, &node);
            }
            SetupMsg::Receiver(mode) => {
                let del = &mut self.deliveries[d];
                del.rx_activity.last = self.now;
                let expected_hash = del.manifest.full_hash;
                let step = del.rx.step(ReceiverEvent::Setup { header, expected_hash, mode });
                let phase = del.rx.phase();
                let rx = del.path.last().expect("receiver").clone();
                self.record(&rx, phase, &step.transitions, "setup", vec![]);
                self.arm_receiver(d);
            }
        }
    }

    fn on_begin(&mut self, d: usize) {
        let del = &mut self.deliveries[d];
        let sender = del.path[0].clone();
        let chunk_size = del.manifest.chunk_size as usize;
        let chunks: Vec<Vec<u8>> = del.body.chunks(chunk_size).map(<[u8]>::to_vec).collect();
        del.sender_phase = Phase::AwaitingAck;
        let count = chunks.len();
        let t = [(Phase::AwaitingSetup, Phase::Forwarding), (Phase::Forwarding, Phase::AwaitingAck)];
        self.record(&sender, Phase::AwaitingAck, &t, "begin", vec![format!("send_chunks({count})")]);
        for (i, c) in chunks.into_iter().enumerate() {
            self.transmit(d, 0, i as u64, c);
        }
        self.touch_sender(d);
        self.arm_sender(d);
    }

    fn transmit(&mut self, d: usize, from_hop: usize, chunk_no: u64, mut data: Vec<u8>) {
        let del = &self.deliveries[d];
        let from = del.path[from_hop].clone();
        let to = del.path[from_hop + 1].clone();
        let faults = &self.cfg.workloads[del.workload].faults;
        for f in faults.iter().filter(|f| f.from == from.as_str() && f.to == to.as_str() && f.chunk == chunk_no) {
            let hit = f.probability >= 1.0 || (f.probability > 0.0 && self.fault_rng.random::<f64>() < f.probability);
            if !hit {
                continue;
            }
            match f.kind {
                FaultKind::Drop => {
                    self.note(&from, "forwarding", "forwarding", "fault", format!("drop_chunk({chunk_no};{to})"));
                    return;
                }
                FaultKind::Corrupt => {
                    if let Some(b) = data.first_mut() {
                        *b ^= 0xff;
                    }
                    self.note(&from, "forwarding", "forwarding", "fault", format!("corrupt_chunk({chunk_no};{to})"));
                }
            }
        }
        let arrival = self.occupy(&from, &to, data.len() as u64);
        self.schedule(arrival, Ev::Chunk { d, hop: from_hop + 1, chunk_no, data });
    }

    fn on_chunk(&mut self, d: usize, hop: usize, chunk_no: u64, data: Vec<u8>) {
        self.touch_sender(d);
        let last = self.deliveries[d].path.len() - 1;
        if hop == last {
            let del = &mut self.deliveries[d];
            del.rx_activity.last = self.now;
            let step = del.rx.step(ReceiverEvent::Chunk(data));
            self.apply_receiver_step(d, step, "chunk");
            self.arm_receiver(d);
            return;
        }
        let node = self.deliveries[d].path[hop].clone();
        let m = self.deliveries[d].members.get_mut(&node).expect("member");
        m.activity.last = self.now;
        let step = m.state.step(ForwarderEvent::Chunk(data));
        let complete = m.state.received_bytes() == self.deliveries[d].manifest.total_length;
        self.apply_forwarder_step(d, &node, step, "chunk", Some(chunk_no));
        let del = &self.deliveries[d];
        if complete && del.store_content {
            let (content, size) = (del.workload as u64, del.manifest.total_length);
            if let Some(cache) = self.caches.get_mut(&node) {
                if cache.insert(content, size) {
                    self.note(&node, "forwarding", "forwarding", "cache_store", format!("store({content};{size})"));
                }
            }
        }
    }

    fn apply_receiver_step(&mut self, d: usize, step: Step<ReceiverAction>, event: &str) {
        let del = &self.deliveries[d];
        let rx = del.path.last().expect("receiver").clone();
        let phase = del.rx.phase();
        self.record(&rx, phase, &step.transitions, event, describe_all(&step.actions, ReceiverAction::describe));
        for a in step.actions {
            match a {
                ReceiverAction::Delivered { intact } => self.deliveries[d].finished = Some((self.now, intact)),
                ReceiverAction::SendAckToPrevious { to, secret } => {
                    let at = self.now + self.topo.control_delay(&rx, &to);
                    self.schedule(at, Ev::Ack { d, to, secret });
                }
                ReceiverAction::AckSender { to } => {
                    let at = self.now + self.topo.control_delay(&rx, &to);
                    self.schedule(at, Ev::EndToEndAck { d });
                }
                ReceiverAction::Fail(_) => {}
            }
        }
    }

    fn apply_forwarder_step(&mut self, d: usize, node: &NodeId, step: Step<ForwarderAction>, event: &str, chunk_no: Option<u64>) {
        let phase = self.deliveries[d].members[node].state.phase();
        self.record(node, phase, &step.transitions, event, describe_all(&step.actions, ForwarderAction::describe));
        let hop = self.deliveries[d].path.iter().position(|p| p == node).expect("on path");
        for a in step.actions {
            match a {
                ForwarderAction::ForwardChunk(c) => {
                    let m = self.deliveries[d].members.get_mut(node).expect("member");
                    if !m.charged {
                        m.charged = true;
                        self.charge(node);
                    }
                    self.transmit(d, hop, chunk_no.expect("forwarding follows a chunk"), c);
                }
                ForwarderAction::SendAckToPrevious { to, secret } => {
                    let at = self.now + self.topo.control_delay(node, &to);
                    self.schedule(at, Ev::Ack { d, to, secret });
                }
                ForwarderAction::SubmitClaim { block_index, key } => {
                    let chain = self.deliveries[d].chain.as_ref().expect("paid forwarder").0;
                    self.queue_claim(chain, block_index, key, node.clone(), Some(d));
                }
                ForwarderAction::Fail(_) => {}
            }
        }
        self.arm_member(d, node);
    }

    fn on_ack(&mut self, d: usize, to: NodeId, secret: Bytes32) {
        self.touch_sender(d);
        if to == self.deliveries[d].path[0] {
            let del = &mut self.deliveries[d];
            if del.sender_phase == Phase::AwaitingAck {
                del.sender_phase = Phase::Done;
                self.record(&to, Phase::Done, &[(Phase::AwaitingAck, Phase::Done)], "ack", vec![]);
            }
            return;
        }
        let Some(m) = self.deliveries[d].members.get_mut(&to) else { return };
        m.activity.last = self.now;
        let step = m.state.step(ForwarderEvent::Ack(secret));
        self.apply_forwarder_step(d, &to, step, "ack", None);
    }

    fn on_end_to_end_ack(&mut self, d: usize) {
        self.touch_sender(d);
        let payer = self.deliveries[d].payer.clone();
        match self.deliveries[d].kind {
            LineKind::EndToEnd => {
                let Some(aon) = self.deliveries[d].aon.as_mut() else {
                    // no forwarders: nothing to release
                    self.deliveries[d].sender_phase = Phase::Done;
                    self.record(&payer, Phase::Done, &[(Phase::AwaitingAck, Phase::Done)], "receiver_ack", vec![]);
                    return;
                };
                let step = aon.step(AonSenderEvent::ReceiverAck);
                let phase = aon.phase();
                let descr = step.actions.iter().map(|r| format!("release_key({};{})", r.to, r.block_index)).collect();
                self.record(&payer, phase, &step.transitions, "receiver_ack", descr);
                let chain = self.deliveries[d].chain.as_ref().map(|c| c.0).expect("chain with forwarders");
                for r in step.actions {
                    let at = self.now + self.topo.control_delay(&payer, &r.to);
                    self.schedule(at, Ev::KeyDelivery { d: Some(d), chain, block: r.block_index, key: r.key, to: r.to });
                }
            }
            LineKind::Contract => {
                let del = &mut self.deliveries[d];
                if del.sender_phase == Phase::Done {
                    return;
                }
                del.sender_phase = Phase::Done;
                let first = &del.levels[0];
                let (chain, key, to) = (first.chain, first.key, first.contractor.clone());
                self.note(&payer, "awaiting_ack", "done", "receiver_ack", format!("release_key({to};0)"));
                let at = self.now + self.topo.control_delay(&payer, &to);
                self.schedule(at, Ev::KeyDelivery { d: None, chain, block: 0, key, to });
            }
            LineKind::Chained => {}
        }
    }

    fn on_key(&mut self, d: Option<usize>, chain: ChainId, block: usize, key: PuzzleKey, to: NodeId) {
        if let Some(d) = d {
            if let Some(m) = self.deliveries[d].members.get_mut(&to) {
                if matches!(m.state.assignment(), Assignment::EndToEnd { .. }) {
                    m.activity.last = self.now;
                    let step = m.state.step(ForwarderEvent::KeyRelease(key));
                    self.apply_forwarder_step(d, &to, step, "key_release", None);
                    return;
                }
            }
        }
        let action = format!("submit_claim({block};{})", &key.to_hex()[..16]);
        self.note(&to, "awaiting_key", "claiming", "key_release", action);
        self.queue_claim(chain, block, key, to, None);
    }

    fn touch_sender(&mut self, d: usize) {
        self.deliveries[d].sender_activity.last = self.now;
    }

    fn arm_sender(&mut self, d: usize) {
        let del = &mut self.deliveries[d];
        let waiting = del.aon.as_ref().is_some_and(|a| a.phase() == Phase::AwaitingAck);
        if waiting && !del.sender_activity.armed {
            del.sender_activity.armed = true;
            let at = del.sender_activity.last + self.idle_timeout;
            self.schedule(at, Ev::SenderIdle { d });
        }
    }

    fn on_sender_idle(&mut self, d: usize) {
        let del = &mut self.deliveries[d];
        del.sender_activity.armed = false;
        let Some(aon) = del.aon.as_mut() else { return };
        if aon.phase() != Phase::AwaitingAck {
            return;
        }
        if self.now >= del.sender_activity.last + self.idle_timeout {
            let step = aon.step(AonSenderEvent::Timeout);
            let phase = aon.phase();
            let payer = del.payer.clone();
            self.record(&payer, phase, &step.transitions, "timeout", vec!["withhold_keys".into()]);
        } else {
            self.arm_sender(d);
        }
    }

    fn arm_member(&mut self, d: usize, node: &NodeId) {
        let m = self.deliveries[d].members.get_mut(node).expect("member");
        let waiting = matches!(m.state.phase(), Phase::Receiving | Phase::Forwarding | Phase::AwaitingAck);
        if waiting && !m.activity.armed {
            m.activity.armed = true;
            let at = m.activity.last + self.idle_timeout;
            self.schedule(at, Ev::NodeIdle { d, node: node.clone() });
        }
    }

    fn arm_receiver(&mut self, d: usize) {
        let del = &mut self.deliveries[d];
        if del.rx.phase() == Phase::Receiving && !del.rx_activity.armed {
            del.rx_activity.armed = true;
            let at = del.rx_activity.last + self.idle_timeout;
            let node = del.path.last().expect("receiver").clone();
            self.schedule(at, Ev::NodeIdle { d, node });
        }
    }

    fn on_node_idle(&mut self, d: usize, node: NodeId) {
        let timeout = self.idle_timeout;
        let is_receiver = self.deliveries[d].path.last() == Some(&node);
        if is_receiver {
            let del = &mut self.deliveries[d];
            del.rx_activity.armed = false;
            if del.rx.phase() != Phase::Receiving {
                return;
            }
            if self.now >= del.rx_activity.last + timeout {
                let step = del.rx.step(ReceiverEvent::Timeout);
                self.apply_receiver_step(d, step, "timeout");
            } else {
                self.arm_receiver(d);
            }
            return;
        }
        let m = self.deliveries[d].members.get_mut(&node).expect("member");
        m.activity.armed = false;
        if !matches!(m.state.phase(), Phase::Receiving | Phase::Forwarding | Phase::AwaitingAck) {
            return;
        }
        if self.now >= m.activity.last + timeout {
            let step = m.state.step(ForwarderEvent::Timeout);
            self.apply_forwarder_step(d, &node, step, "timeout", None);
        } else {
            self.arm_member(d, &node);
        }
    }

    // ----- claims and crackers -----

    fn queue_claim(&mut self, chain: ChainId, block: usize, key: PuzzleKey, claimant: NodeId, owner: Option<usize>) {
        let visible = self.ledger.entry(chain).map_or(self.now, |e| e.visible_at);
        let deadline = self.now.max(visible) + self.patience;
        let p = self.pending.len();
        self.pending.push(PendingClaim { chain, block, key, claimant, owner, open: true });
        self.schedule(deadline, Ev::ClaimPatience { p });
        self.dirty.insert(chain);
    }

    /// A held key is submitted once the chain is visible and every earlier
    /// block has been claimed, or when patience runs out.
    fn claim_ready(&self, p: &PendingClaim) -> bool {
        self.ledger
            .entry(p.chain)
            .is_some_and(|e| self.now >= e.visible_at && p.block <= e.claims.len())
    }

    fn submit_pending(&mut self, p: usize) {
        let pc = &mut self.pending[p];
        pc.open = false;
        let (chain, block, key, claimant, owner) = (pc.chain, pc.block, pc.key, pc.claimant.clone(), pc.owner);
        let outcome = self.ledger.submit_claim(chain, block, key, claimant.clone(), self.now);
        let who = owner.map_or(Claimer::Bare, Claimer::Member);
        self.after_claim(chain, &claimant, who, outcome);
    }

    fn after_claim(&mut self, chain: ChainId, claimant: &NodeId, who: Claimer, outcome: ClaimOutcome) {
        let accepted = outcome.is_accepted();
        match who {
            Claimer::Member(d) => {
                if let Some(m) = self.deliveries[d].members.get_mut(claimant) {
                    let step = m.state.step(ForwarderEvent::ClaimResult { accepted });
                    self.apply_forwarder_step(d, claimant, step, "claim_result", None);
                }
            }
            Claimer::Bare => {
                let reason = match outcome {
                    ClaimOutcome::Accepted { .. } => String::new(),
                    ClaimOutcome::Rejected(r) => format!("fail({})", r.as_str()),
                };
                self.note(claimant, "claiming", if accepted { "done" } else { "failed" }, "claim_result", reason);
            }
            Claimer::Cracker => {}
        }
        if let ClaimOutcome::Accepted { confirm_time } = outcome {
            self.schedule(confirm_time, Ev::Confirmation);
            self.dirty.insert(chain);
            if let Some(ChainRole::ContractLevel { d, level }) = self.chain_roles.get(&chain).copied() {
                let levels = &self.deliveries[d].levels;
                if levels[level].contractor == *claimant {
                    if let Some(next) = levels.get(level + 1) {
                        let (c, key, to, from) = (next.chain, next.key, next.contractor.clone(), next.principal.clone());
                        self.note(&from, "claiming", "done", "paid", format!("release_key({to};0)"));
                        let at = self.now + self.topo.control_delay(&from, &to);
                        self.schedule(at, Ev::KeyDelivery { d: None, chain: c, block: 0, key, to });
                    }
                }
            }
        }
    }

    fn settle_chains(&mut self) -> Result<(), NetsimError> {
        while let Some(chain) = self.dirty.pop_first() {
            loop {
                let ready: Vec<usize> = (0..self.pending.len())
                    .filter(|&p| self.pending[p].open && self.pending[p].chain == chain && self.claim_ready(&self.pending[p]))
                    .collect();
                if ready.is_empty() {
                    break;
                }
                for p in ready {
                    if self.pending[p].open && self.claim_ready(&self.pending[p]) {
                        self.submit_pending(p);
                    }
                }
            }
            self.update_crackers(chain);
        }
        Ok(())
    }

    /// Points every cracker at the lowest unclaimed block of `chain`. A job
    /// whose target was taken by someone else restarts now on the next block.
    fn update_crackers(&mut self, chain: ChainId) {
        let Some(entry) = self.ledger.entry(chain) else { return };
        if self.now < entry.visible_at {
            return;
        }
        let target = entry.next_unclaimed();
        let work = target.map(|b| entry.published_blocks[b].iterations);
        for c in 0..self.crackers.len() {
            let job = self.crackers[c].jobs.entry(chain).or_default();
            if job.target == target {
                continue;
            }
            let previous = job.target;
            job.target = target;
            job.epoch += 1;
            let epoch = job.epoch;
            let (id, rate) = (self.crackers[c].id.clone(), self.crackers[c].rate);
            match (target, work) {
                (Some(b), Some(w)) => {
                    let at = self.now + SimDuration::for_work(w, rate);
                    self.schedule(at, Ev::CrackerDone { c, chain, epoch });
                    let (from, event) = if previous.is_some() { ("solving", "reveal") } else { ("idle", "chain_visible") };
                    self.note(&id, from, "solving", event, format!("solve({};{b})", chain.0));
                }
                _ => self.note(&id, "solving", "idle", "chain_claimed", String::new()),
            }
        }
    }

    fn on_cracker_done(&mut self, c: usize, chain: ChainId, epoch: u64) -> Result<(), NetsimError> {
        let Some(job) = self.crackers[c].jobs.get(&chain) else { return Ok(()) };
        let (Some(b), true) = (job.target, job.epoch == epoch) else { return Ok(()) };
        let entry = self.ledger.entry(chain).expect("known chain");
        if entry.next_unclaimed() != Some(b) {
            return Ok(());
        }
        let block = &entry.published_blocks[b];
        let prev = (b > 0).then(|| entry.claims[b - 1].key);
        let key = solve_block(&block.iv_published, prev.as_ref(), block.iterations)?;
        let id = self.crackers[c].id.clone();
        self.note(&id, "solving", "claiming", "solved", format!("submit_claim({b};{})", &key.to_hex()[..16]));
        let outcome = self.ledger.submit_claim(chain, b, key, id.clone(), self.now);
        self.after_claim(chain, &id, Claimer::Cracker, outcome);
        Ok(())
    }

    // ----- contract -----

    fn start_contract(&mut self, w: usize) -> Result<(), NetsimError> {
        let wl = &self.cfg.workloads[w];
        let id = |s: &Option<String>| NodeId::from(s.clone().expect("validated"));
        let (sender, receiver, principal, contractor) = (id(&wl.sender), id(&wl.receiver), id(&wl.principal), id(&wl.contractor));
        let price = wl.price.expect("validated");
        let iterations = wl.chain.as_deref().and_then(|c| self.cfg.chain(c)).map_or(1, |c| c.iterations);
        let policy = ContractPolicy { margin_bps: (self.cfg.params.margin * 10_000.0).round() as u32, ..Default::default() };
        let market = Market {
            topo: &self.topo,
            usage: &self.usage,
            now: self.now,
            window: self.surge_window,
            cap: self.cfg.params.surge_cap,
            bytes: wl.message_length,
        };
        let deadline = secs(self.cfg.horizon);
        let plan = match negotiate_contract(&sender, &principal, &contractor, &receiver, price, deadline, &policy, &market) {
            Ok(plan) => plan,
            Err(ProtocolError::ContractDeclined { holder, offer }) => {
                let holder = NodeId::from(holder);
                self.note(&holder, "negotiating", "failed", "contract_declined", format!("offer({offer})"));
                self.notes.entry(w).or_default().push(format!("declined_by={holder}"));
                return Ok(());
            }
            Err(e) => return Err(e.into()),
        };
        let d = self.deliveries.len();
        let mut levels = Vec::new();
        for (i, lvl) in plan.root.levels().into_iter().enumerate() {
            let seed = sub_seed(self.seed, "contract", (w as u64) << 16 | i as u64);
            let chain = generate_chain(1, iterations, &[lvl.agreed_price], seed)?;
            let cid = self.publish(lvl.principal.clone(), &chain, ChainRole::ContractLevel { d, level: i }, Some(w))?;
            let action = format!("award({};{})", lvl.contractor, lvl.agreed_price);
            self.note(&lvl.principal, "negotiating", "contracted", "contract", action);
            levels.push(Level { chain: cid, key: chain.keys[0], principal: lvl.principal.clone(), contractor: lvl.contractor.clone() });
        }
        let route = plan.delivery_path.iter().map(NodeId::to_string).collect::<Vec<_>>().join(">");
        self.notes.entry(w).or_default().push(format!("path={route}; depth={}", plan.root.depth()));
        let started = self.start_line(w, "delivery".into(), plan.delivery_path, LineKind::Contract, vec![], vec![], 1, principal, false)?;
        debug_assert_eq!(started, d);
        self.deliveries[d].levels = levels;
        Ok(())
    }

    // ----- cache demo -----

    fn cache_request(&mut self, w: usize, n: usize) -> Result<(), NetsimError> {
        let wl = &self.cfg.workloads[w];
        let path: Vec<NodeId> = wl.path.iter().map(|s| NodeId::from(s.as_str())).collect();
        let origin = path[0].clone();
        let receiver = path[path.len() - 1].clone();
        let chain_cfg = wl.chain.as_deref().and_then(|c| self.cfg.chain(c)).expect("validated");
        let (values, iterations) = (chain_cfg.values.clone(), chain_cfg.iterations);
        let len = wl.message_length;
        let content = w as u64;

        let origin_latency = path
            .windows(2)
            .map(|p| transfer_time(len, self.topo.data_link(&p[0], &p[1]).expect("validated")))
            .fold(SimDuration::ZERO, |a, b| a + b);
        let mut offers = vec![CapabilityQuote {
            node_id: origin.clone(),
            technology_tag: "multihop".into(),
            range_meters: 0,
            expected_latency: origin_latency,
            price: values.iter().sum(),
        }];
        for (cache, store) in &self.caches {
            if store.contains(content) {
                let price = self.topo.node(cache).map_or(0, |c| c.price);
                offers.extend(self.topo.quote(cache, &receiver, len, price));
            }
        }
        let pick = choose_offer(&offers).expect("origin always offers").clone();
        let label = format!("request{n}");
        self.note(&receiver, "negotiating", "receiving", "request", format!("accept({};{})", pick.node_id, pick.price));
        self.notes.entry(w).or_default().push(format!("{label}={}", pick.node_id));
        if pick.node_id == origin {
            let payees = path[1..path.len() - 1].to_vec();
            self.start_line(w, label, path, LineKind::EndToEnd, payees, values, iterations, origin, true)?;
        } else {
            let cache = pick.node_id.clone();
            self.caches.get_mut(&cache).expect("cache node").touch(content);
            let p = vec![cache.clone(), receiver];
            self.start_line(w, label, p, LineKind::EndToEnd, vec![cache], vec![pick.price], iterations, origin, false)?;
        }
        Ok(())
    }

    // ----- competing forwarders -----

    fn start_competing(&mut self, w: usize) -> Result<(), NetsimError> {
        let wl = &self.cfg.workloads[w];
        let sender = NodeId::from(wl.sender.clone().expect("validated"));
        let receiver = NodeId::from(wl.receiver.clone().expect("validated"));
        let paths: Vec<Vec<NodeId>> = wl
            .paths
            .iter()
            .map(|p| {
                let mut full = vec![sender.clone()];
                full.extend(p.iter().map(|s| NodeId::from(s.as_str())));
                full.push(receiver.clone());
                full
            })
            .collect();
        let body = synthetic_body(wl.message_length as usize, sub_seed(self.seed, "body", w as u64));
        let symbol = wl.chunk_size as usize;
        let generation = Generation::from_message(w as u64, &body, symbol)?;
        let k = generation.k();
        let mut relays = BTreeMap::new();
        let mut begin = self.now + self.topo.control_delay(&sender, &receiver);
        for p in &paths {
            for node in &p[1..p.len() - 1] {
                let seed = sub_seed(self.seed, &format!("recode:{node}"), w as u64);
                relays.insert(
                    node.clone(),
                    Relay { recoder: Recoder::new(w as u64, k, symbol)?, rng: ChaCha8Rng::seed_from_u64(seed), active: false },
                );
                begin = begin.max(self.now + self.topo.control_delay(&sender, node));
            }
        }
        let rx = CompetingReceiver::new(w as u64, k, symbol, body.len())?;
        self.competing.insert(
            w,
            CompetingRt {
                paths,
                generation,
                body,
                relays,
                rx,
                rx_active: false,
                start: self.now,
                completed: None,
                decoded: false,
                payouts: BTreeMap::new(),
            },
        );
        self.schedule(begin, Ev::CompetingBegin { w });
        Ok(())
    }

    fn on_competing_begin(&mut self, w: usize) {
        let per_path = self.cfg.workloads[w].packets_per_path;
        let rt = &self.competing[&w];
        let sender = rt.paths[0][0].clone();
        let k = rt.generation.k();
        let per_path = per_path.unwrap_or(2 * k);
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(self.seed, "encode", w as u64));
        let mut sends = Vec::new();
        for _ in 0..per_path {
            for p in 0..rt.paths.len() {
                let mut packet = encode(&rt.generation, &mut rng);
                packet.last_hop = Some(sender.clone());
                sends.push((p, packet));
            }
        }
        let total = sends.len();
        let t = [(Phase::AwaitingSetup, Phase::Forwarding), (Phase::Forwarding, Phase::AwaitingAck)];
        self.record(&sender, Phase::AwaitingAck, &t, "begin", vec![format!("emit_coded({total})")]);
        for (p, packet) in sends {
            self.send_coded(w, p, 0, packet);
        }
    }

    fn send_coded(&mut self, w: usize, p: usize, from_hop: usize, packet: CodedPacket) {
        let rt = &self.competing[&w];
        let (from, to) = (rt.paths[p][from_hop].clone(), rt.paths[p][from_hop + 1].clone());
        let bytes = (packet.coefficients.len() + packet.payload.len()) as u64;
        let arrival = self.occupy(&from, &to, bytes);
        self.schedule(arrival, Ev::Coded { w, path: p, hop: from_hop + 1, packet });
    }

    fn on_coded(&mut self, w: usize, p: usize, hop: usize, packet: CodedPacket) -> Result<(), NetsimError> {
        let rt = self.competing.get_mut(&w).expect("competing workload");
        let node = rt.paths[p][hop].clone();
        if hop == rt.paths[p].len() - 1 {
            let first = !rt.rx_active;
            rt.rx_active = true;
            let verdict = rt.rx.on_packet(&packet)?;
            if first {
                self.note(&node, "awaiting_setup", "receiving", "packet", String::new());
            }
            let rt = self.competing.get_mut(&w).expect("competing workload");
            if verdict.complete && rt.completed.is_none() {
                rt.completed = Some(self.now);
                rt.decoded = rt.rx.decoded_message().as_deref() == Some(&rt.body[..]);
                let credits = rt.rx.credits().iter().map(|(n, c)| format!("{n}={c}")).collect::<Vec<_>>().join(",");
                let sender = rt.paths[0][0].clone();
                self.note(&node, "receiving", "done", "packet", format!("signal_completion({credits})"));
                let at = self.now + self.topo.control_delay(&node, &sender);
                self.schedule(at, Ev::CompetingDone { w });
            }
            return Ok(());
        }
        let relay = rt.relays.get_mut(&node).expect("relay");
        let mut out = relay.recoder.on_packet(packet, &mut relay.rng)?;
        out.last_hop = Some(node.clone());
        if !relay.active {
            relay.active = true;
            let coeffs = hex::encode(&out.coefficients[..out.coefficients.len().min(4)]);
            self.note(&node, "awaiting_setup", "forwarding", "packet", format!("recode({coeffs})"));
            self.charge(&node);
        }
        self.send_coded(w, p, hop, out);
        Ok(())
    }

    fn on_competing_done(&mut self, w: usize) -> Result<(), NetsimError> {
        let wl = &self.cfg.workloads[w];
        let chain_cfg = wl.chain.as_deref().and_then(|c| self.cfg.chain(c));
        let iterations = chain_cfg.map_or(1, |c| c.iterations);
        let pool = wl.reward_pool.unwrap_or_else(|| chain_cfg.map_or(0, |c| c.values.iter().sum()));
        let bps = (wl.upstream_share * 10_000.0).round() as u32;
        let rt = self.competing.get_mut(&w).expect("competing workload");
        let sender = rt.paths[0][0].clone();
        if !rt.decoded {
            self.note(&sender, "awaiting_ack", "failed", "completion", "decode_mismatch".into());
            return Ok(());
        }
        let forwarders: Vec<Vec<NodeId>> = rt.paths.iter().map(|p| p[1..p.len() - 1].to_vec()).collect();
        let payouts = share_with_upstream(&split_rewards(rt.rx.credits(), pool), &forwarders, bps);
        rt.payouts = payouts.clone();
        if payouts.is_empty() {
            self.note(&sender, "awaiting_ack", "done", "completion", String::new());
            return Ok(());
        }
        let payees: Vec<NodeId> = payouts.keys().cloned().collect();
        let values: Vec<u64> = payouts.values().copied().collect();
        let chain = generate_chain(values.len(), iterations, &values, sub_seed(self.seed, "competing", w as u64))?;
        let id = self.publish(sender.clone(), &chain, ChainRole::Competing, Some(w))?;
        self.note(&sender, "awaiting_ack", "done", "completion", format!("release_keys({})", payees.len()));
        for (i, node) in payees.into_iter().enumerate() {
            let at = self.now + self.topo.control_delay(&sender, &node);
            self.schedule(at, Ev::KeyDelivery { d: None, chain: id, block: i, key: chain.keys[i], to: node });
        }
        Ok(())
    }

    // ----- report -----

    fn report(self, end: SimTime, horizon: SimTime, quiescent: bool) -> Result<SimulationReport, NetsimError> {
        let mut latency = Vec::new();
        for (i, c) in self.cfg.comparisons.iter().enumerate() {
            let (src, dst) = (NodeId::from(c.src.as_str()), NodeId::from(c.dst.as_str()));
            let cmp = self.topo.compare_paths(&src, &dst, c.message_length)?;
            for (label, route) in [("edge_route", &cmp.edge), ("isp_route", &cmp.isp)] {
                latency.push(LatencyRow {
                    workload: format!("comparison{i}"),
                    label: label.into(),
                    src: c.src.clone(),
                    dst: c.dst.clone(),
                    message_length: c.message_length,
                    start: 0,
                    end: Some(route.latency.as_nanos()),
                    latency_ns: Some(route.latency.as_nanos()),
                    intact: true,
                });
            }
        }
        for del in &self.deliveries {
            let wl = &self.cfg.workloads[del.workload];
            let (end_t, intact) = match del.finished {
                Some((t, ok)) => (Some(t.as_nanos()), ok),
                None => (None, false),
            };
            latency.push(LatencyRow {
                workload: wl.id.clone(),
                label: del.label.clone(),
                src: del.path[0].to_string(),
                dst: del.path[del.path.len() - 1].to_string(),
                message_length: del.manifest.total_length,
                start: del.start.as_nanos(),
                end: end_t,
                latency_ns: end_t.map(|e| e - del.start.as_nanos()),
                intact,
            });
        }
        for (&w, rt) in &self.competing {
            let end_t = rt.completed.map(SimTime::as_nanos);
            latency.push(LatencyRow {
                workload: self.cfg.workloads[w].id.clone(),
                label: "decode".into(),
                src: rt.paths[0][0].to_string(),
                dst: rt.paths[0][rt.paths[0].len() - 1].to_string(),
                message_length: rt.body.len() as u64,
                start: rt.start.as_nanos(),
                end: end_t,
                latency_ns: end_t.map(|e| e - rt.start.as_nanos()),
                intact: rt.decoded,
            });
        }

        let claims = self
            .ledger
            .claim_log()
            .iter()
            .map(|r| {
                let (result, reason, confirm_time) = match r.outcome {
                    ClaimOutcome::Accepted { confirm_time } => ("accepted", String::new(), Some(confirm_time.as_nanos())),
                    ClaimOutcome::Rejected(why) => ("rejected", why.as_str().to_string(), None),
                };
                ClaimRow {
                    chain_id: r.chain_id.0,
                    block_index: r.block_index,
                    claimant: r.claimant.to_string(),
                    result: result.into(),
                    reason,
                    claim_time: r.claim_time.as_nanos(),
                    confirm_time,
                }
            })
            .collect();

        let workloads = self
            .cfg
            .workloads
            .iter()
            .enumerate()
            .map(|(w, wl)| {
                let mine: Vec<&Delivery> = self.deliveries.iter().filter(|d| d.workload == w).collect();
                let delivered = match wl.model {
                    Model::Competing => self.competing.get(&w).is_some_and(|rt| rt.decoded),
                    _ => !mine.is_empty() && mine.iter().all(|d| d.finished.is_some_and(|f| f.1)),
                };
                let mut note = self.notes.get(&w).cloned().unwrap_or_default();
                if let Some(rt) = self.competing.get(&w) {
                    let p = rt.payouts.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(",");
                    note.push(format!("payouts={p}"));
                }
                WorkloadSummary {
                    id: wl.id.clone(),
                    model: wl.model.as_str().into(),
                    delivered,
                    chain_ids: self.workload_chains.get(&w).cloned().unwrap_or_default(),
                    note: note.join("; "),
                }
            })
            .collect();

        let balances = settle(&self.topo.node_ids(), &self.ledger, &self.costs, end);
        Ok(SimulationReport {
            seed: self.seed,
            horizon_ns: horizon.as_nanos(),
            end_time_ns: end.as_nanos(),
            quiescent,
            events_processed: self.events,
            conservation_ok: conserves_value(&balances, &self.ledger, end),
            total_confirmed_value: self.ledger.confirmed_value(end),
            claims,
            trace: self.trace,
            balances,
            latency,
            workloads,
        })
    }
}

/// The view a contractor has when looking for subcontractors: data-link
/// neighbours that are closer to the receiver, priced with surge pricing on
/// the link the job would cross.
struct Market<'a> {
    topo: &'a Topology,
    usage: &'a BTreeMap<(NodeId, NodeId), BusyLog>,
    now: SimTime,
    window: SimDuration,
    cap: f64,
    bytes: u64,
}

impl ContractTopology for Market<'_> {
    fn in_range(&self, holder: &NodeId, receiver: &NodeId) -> bool {
        self.topo.data_link(holder, receiver).is_some()
    }

    fn bids(&self, holder: &NodeId, receiver: &NodeId) -> Vec<CapabilityQuote> {
        let Some(here) = self.topo.hop_distance(holder, receiver) else { return Vec::new() };
        self.topo
            .data_neighbours(holder)
            .into_iter()
            .filter_map(|n| {
                let node = self.topo.node(&n)?;
                if !matches!(node.role, Role::Forwarder | Role::Cache) || self.topo.hop_distance(&n, receiver)? >= here {
                    return None;
                }
                let busy = self
                    .usage
                    .get(&(holder.clone(), n.clone()))
                    .map_or(0.0, |log| log.utilization(self.now, self.window))
                    .min(0.99);
                let price = surge_price(node.price, busy, self.cap).ok()?;
                self.topo.quote(&n, holder, self.bytes, price)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_seeds_differ_by_tag_and_index() {
        assert_ne!(sub_seed(1, "a", 0), sub_seed(1, "b", 0));
        assert_ne!(sub_seed(1, "a", 0), sub_seed(1, "a", 1));
        assert_ne!(sub_seed(1, "a", 0), sub_seed(2, "a", 0));
        assert_eq!(sub_seed(7, "x", 3), sub_seed(7, "x", 3));
    }

    #[test]
    fn empty_scenario_gives_empty_report() {
        let cfg = ScenarioConfig::from_toml("").unwrap();
        let r = run(&cfg).unwrap();
        assert!(r.quiescent);
        assert!(r.claims.is_empty() && r.trace.is_empty() && r.latency.is_empty());
        assert!(r.conservation_ok);
    }

    #[test]
    fn queue_orders_by_time_then_sequence() {
        let mut h = BinaryHeap::new();
        for (t, s) in [(5, 2), (1, 9), (5, 1), (0, 3)] {
            h.push(Reverse(Queued { time: SimTime(t), seq: s, ev: Ev::Confirmation }));
        }
        let order: Vec<(u64, u64)> = std::iter::from_fn(|| h.pop().map(|Reverse(q)| (q.time.0, q.seq))).collect();
        assert_eq!(order, vec![(0, 3), (1, 9), (5, 1), (5, 2)]);
    }
}
