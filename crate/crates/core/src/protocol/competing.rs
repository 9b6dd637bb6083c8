//! Competing forwarders: coded packets race over several disjoint paths and
//! the receiver credits the last hop of every packet that raised its rank.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ProtocolError;
use crate::coding::{encode, recode, CodedPacket, DecoderState, Generation};
use crate::ledger::{ChainId, Ledger};
use crate::time::SimTime;
use crate::timelock::generate_chain;
use crate::NodeId;

/// Intermediate node: keeps the innovative packets it has seen and emits a
/// fresh combination of them for every packet that arrives.
#[derive(Clone, Debug)]
pub struct Recoder {
    seen: DecoderState,
    held: Vec<CodedPacket>,
}

impl Recoder {
    pub fn new(generation_id: u64, k: usize, symbol_size: usize) -> Result<Self, ProtocolError> {
        Ok(Recoder { seen: DecoderState::new(generation_id, k, symbol_size)?, held: Vec::new() })
    }

    pub fn held(&self) -> usize {
        self.held.len()
    }

    pub fn on_packet<R: Rng + ?Sized>(
        &mut self,
        packet: CodedPacket,
        rng: &mut R,
    ) -> Result<CodedPacket, ProtocolError> {
        if self.seen.accept(&packet)? {
            self.held.push(packet.clone());
        }
        if self.held.is_empty() {
            return Ok(packet);
        }
        Ok(recode(&self.held, rng)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketVerdict {
    pub innovative: bool,
    pub complete: bool,
}

#[derive(Clone, Debug)]
pub struct CompetingReceiver {
    decoder: DecoderState,
    credits: BTreeMap<NodeId, u64>,
    message_length: usize,
}

impl CompetingReceiver {
    pub fn new(generation_id: u64, k: usize, symbol_size: usize, message_length: usize) -> Result<Self, ProtocolError> {
        Ok(CompetingReceiver {
            decoder: DecoderState::new(generation_id, k, symbol_size)?,
            credits: BTreeMap::new(),
            message_length,
        })
    }

    pub fn on_packet(&mut self, packet: &CodedPacket) -> Result<PacketVerdict, ProtocolError> {
        if self.decoder.is_complete() {
            return Ok(PacketVerdict { innovative: false, complete: true });
        }
        let innovative = self.decoder.accept(packet)?;
        if innovative {
            if let Some(hop) = &packet.last_hop {
                *self.credits.entry(hop.clone()).or_default() += 1;
            }
        }
        Ok(PacketVerdict { innovative, complete: self.decoder.is_complete() })
    }

    pub fn rank(&self) -> usize {
        self.decoder.rank()
    }

    pub fn credits(&self) -> &BTreeMap<NodeId, u64> {
        &self.credits
    }

    pub fn decoded_message(&self) -> Option<Vec<u8>> {
        self.decoder.decoded().map(|symbols| {
            let mut out: Vec<u8> = symbols.concat();
            out.truncate(self.message_length);
            out
        })
    }
}

/// Splits `pool` in proportion to `credits` using largest remainders; ties in
/// the remainder go to the lower node id.
pub fn split_rewards(credits: &BTreeMap<NodeId, u64>, pool: u64) -> BTreeMap<NodeId, u64> {
    let total: u64 = credits.values().sum();
    if total == 0 {
        return BTreeMap::new();
    }
    let mut out: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut rem: Vec<(u128, NodeId)> = Vec::new();
    let mut given = 0u64;
    for (node, &c) in credits {
        let exact = pool as u128 * c as u128;
        let share = (exact / total as u128) as u64;
        given += share;
        out.insert(node.clone(), share);
        rem.push((exact % total as u128, node.clone()));
    }
    rem.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    for (_, node) in rem.into_iter().take((pool - given) as usize) {
        *out.get_mut(&node).expect("present") += 1;
    }
    out.retain(|_, v| *v > 0);
    out
}

/// Moves `upstream_bps` of each last hop's amount to the other forwarders on
/// its path, split evenly; the last hop keeps the rest.
pub fn share_with_upstream(
    last_hop_amounts: &BTreeMap<NodeId, u64>,
    paths: &[Vec<NodeId>],
    upstream_bps: u32,
) -> BTreeMap<NodeId, u64> {
    let mut out = last_hop_amounts.clone();
    if upstream_bps == 0 {
        return out;
    }
    for path in paths {
        let Some((last, upstream)) = path.split_last() else { continue };
        let Some(&amount) = last_hop_amounts.get(last) else { continue };
        if upstream.is_empty() {
            continue;
        }
        let pot = amount as u128 * upstream_bps.min(10_000) as u128 / 10_000;
        let each = (pot / upstream.len() as u128) as u64;
        if each == 0 {
            continue;
        }
        for u in upstream {
            *out.entry(u.clone()).or_default() += each;
        }
        *out.get_mut(last).expect("present") -= each * upstream.len() as u64;
    }
    out.retain(|_, v| *v > 0);
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompetingOutcome {
    pub credits: BTreeMap<NodeId, u64>,
    pub payouts: BTreeMap<NodeId, u64>,
    pub decoded: bool,
    pub rank: usize,
    pub chain_id: Option<ChainId>,
}

/// Untimed reference run. Packet `j` on path `p` reaches the receiver at
/// `path_latency[p] + j`; equal arrival times go to the lower path index.
#[allow(clippy::too_many_arguments)]
pub fn run_competing_forwarders(
    sender: &NodeId,
    paths: &[Vec<NodeId>],
    generation: &Generation,
    message_length: usize,
    path_latency: &[u64],
    packets_per_path: usize,
    reward_pool: u64,
    ledger: &mut Ledger,
    seed: u64,
) -> Result<CompetingOutcome, ProtocolError> {
    if paths.len() < 2 {
        return Err(ProtocolError::TooFewPaths(paths.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (gid, k, size) = (generation.generation_id, generation.k(), generation.symbol_size);
    let mut recoders: Vec<Vec<Recoder>> = paths
        .iter()
        .map(|p| p.iter().map(|_| Recoder::new(gid, k, size)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let mut arrivals: Vec<(u64, usize)> = (0..paths.len())
        .flat_map(|p| (0..packets_per_path).map(move |j| (path_latency[p] + j as u64, p)))
        .collect();
    arrivals.sort();

    let mut rx = CompetingReceiver::new(gid, k, size, message_length)?;
    for (_, p) in arrivals {
        let mut packet = encode(generation, &mut rng);
        for (node, rc) in paths[p].iter().zip(recoders[p].iter_mut()) {
            packet = rc.on_packet(packet, &mut rng)?;
            packet.last_hop = Some(node.clone());
        }
        if rx.on_packet(&packet)?.complete {
            break;
        }
    }

    let decoded = rx.decoded_message().is_some_and(|m| {
        let symbols: Vec<u8> = generation.source_symbols.concat();
        m[..] == symbols[..message_length]
    });
    let mut payouts = BTreeMap::new();
    let mut chain_id = None;
    if decoded {
        payouts = split_rewards(rx.credits(), reward_pool);
        if !payouts.is_empty() {
            let winners: Vec<(&NodeId, &u64)> = payouts.iter().collect();
            let values: Vec<u64> = winners.iter().map(|(_, v)| **v).collect();
            let chain = generate_chain(values.len(), 1, &values, seed)?;
            let id = ledger.publish_chain(sender.clone(), chain.published(), SimTime::ZERO)?;
            for (i, (node, _)) in winners.iter().enumerate() {
                ledger.submit_claim(id, i, chain.keys[i], (*node).clone(), SimTime(1));
            }
            chain_id = Some(id);
        }
    }
    Ok(CompetingOutcome { credits: rx.credits().clone(), payouts, decoded, rank: rx.rank(), chain_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::encode_with_coefficients;
    use crate::ledger::LedgerParams;
    use crate::protocol::synthetic_body;

    fn ids(names: &[&str]) -> Vec<NodeId> {
        names.iter().map(|n| NodeId::from(*n)).collect()
    }

    #[test]
    fn monopoly_path_takes_all_credit() {
        let body = synthetic_body(8 * 16, 1);
        let g = Generation::from_message(1, &body, 16).unwrap();
        let paths = vec![ids(&["A1", "A2"]), ids(&["B1", "B2"])];
        let mut ledger = Ledger::new(LedgerParams::default());
        let out = run_competing_forwarders(&"S".into(), &paths, &g, body.len(), &[0, 1_000], 40, 900, &mut ledger, 3)
            .unwrap();
        assert!(out.decoded);
        assert_eq!(out.credits.keys().collect::<Vec<_>>(), vec![&NodeId::from("A2")]);
        assert_eq!(out.credits.values().sum::<u64>(), 8);
        assert_eq!(out.payouts[&NodeId::from("A2")], 900);
        assert_eq!(ledger.confirmed_balance(&"A2".into(), SimTime(5)), 900);
    }

    #[test]
    fn credits_sum_to_generation_size() {
        for k in [2usize, 4, 8, 16] {
            let body = synthetic_body(k * 10 - 3, k as u64);
            let g = Generation::from_message(2, &body, 10).unwrap();
            let paths = vec![ids(&["A"]), ids(&["B1", "B2"]), ids(&["C"])];
            let mut ledger = Ledger::new(LedgerParams::default());
            let out =
                run_competing_forwarders(&"S".into(), &paths, &g, body.len(), &[0, 0, 1], 4 * k, 1000, &mut ledger, k as u64)
                    .unwrap();
            assert!(out.decoded, "k = {k}");
            assert_eq!(out.credits.values().sum::<u64>(), k as u64);
            assert_eq!(out.payouts.values().sum::<u64>(), 1000);
        }
    }

    #[test]
    fn repeated_packet_earns_nothing() {
        let g = Generation::from_message(1, &synthetic_body(40, 2), 10).unwrap();
        let mut rx = CompetingReceiver::new(1, 4, 10, 40).unwrap();
        let mut p = encode_with_coefficients(&g, vec![1, 2, 3, 4]);
        p.last_hop = Some("X".into());
        assert!(rx.on_packet(&p).unwrap().innovative);
        let before = rx.credits().clone();
        assert!(!rx.on_packet(&p).unwrap().innovative);
        assert_eq!(rx.credits(), &before);
    }

    #[test]
    fn split_is_exact_and_proportional() {
        let credits = BTreeMap::from([(NodeId::from("a"), 1), (NodeId::from("b"), 1), (NodeId::from("c"), 1)]);
        let s = split_rewards(&credits, 100);
        assert_eq!(s.values().sum::<u64>(), 100);
        assert_eq!(s[&NodeId::from("a")], 34);
        let credits = BTreeMap::from([(NodeId::from("a"), 3), (NodeId::from("b"), 1)]);
        assert_eq!(split_rewards(&credits, 100)[&NodeId::from("a")], 75);
        assert!(split_rewards(&BTreeMap::new(), 100).is_empty());
    }

    #[test]
    fn upstream_share_preserves_totals() {
        let amounts = BTreeMap::from([(NodeId::from("A2"), 100)]);
        let paths = vec![ids(&["A1", "A2"]), ids(&["B1"])];
        let out = share_with_upstream(&amounts, &paths, 2_000);
        assert_eq!(out[&NodeId::from("A1")], 20);
        assert_eq!(out[&NodeId::from("A2")], 80);
    }

    #[test]
    fn one_path_is_not_a_competition() {
        let g = Generation::from_message(1, &synthetic_body(20, 2), 10).unwrap();
        let mut ledger = Ledger::new(LedgerParams::default());
        assert_eq!(
            run_competing_forwarders(&"S".into(), &[ids(&["A"])], &g, 20, &[0], 4, 10, &mut ledger, 0),
            Err(ProtocolError::TooFewPaths(1))
        );
    }
}
