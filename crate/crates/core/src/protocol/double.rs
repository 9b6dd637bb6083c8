//! Sender-side setup for double incentive forwarding.
//!
//! Forwarder `i` (1-based) owns block `i-1`. It receives a secret `s_i`, which
//! it hands back to the previous hop once it has the whole message, and a
//! nonce `keys[i-1] ^ s_{i+1} ^ H(message)`. The last secret `s_{n+1}` goes to
//! the receiver. A forwarder therefore needs both the next hop's secret and
//! the intact message to rebuild its key.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{MessageManifest, ProtocolError};
use crate::timelock::{xor32, Bytes32, PuzzleChain, PuzzleKey};
use crate::NodeId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopSetup {
    /// 1-based position among the forwarders.
    pub hop_index: usize,
    #[serde(with = "hex::serde")]
    pub secret: Bytes32,
    #[serde(with = "hex::serde")]
    pub nonce: Bytes32,
    /// Control-plane address of the previous hop.
    pub ack_address: NodeId,
}

impl HopSetup {
    pub fn block_index(&self) -> usize {
        self.hop_index - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DoubleIncentiveSetup {
    /// One entry per forwarder, in path order.
    pub hops: Vec<(NodeId, HopSetup)>,
    pub receiver: NodeId,
    pub receiver_secret: Bytes32,
    /// The receiver acknowledges to the last forwarder.
    pub receiver_ack_address: NodeId,
}

/// `path` is sender, forwarders..., receiver.
pub fn setup_double_incentive(
    path: &[NodeId],
    manifest: &MessageManifest,
    chain: &PuzzleChain,
    rng_seed: u64,
) -> Result<DoubleIncentiveSetup, ProtocolError> {
    if path.len() < 3 {
        return Err(ProtocolError::PathTooShort(path.len()));
    }
    let n = path.len() - 2;
    if chain.len() != n {
        return Err(ProtocolError::ChainLength { forwarders: n, blocks: chain.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let secrets: Vec<Bytes32> = (0..=n)
        .map(|_| {
            let mut s = [0u8; 32];
            rng.fill_bytes(&mut s);
            s
        })
        .collect();
    let hops = (1..=n)
        .map(|i| {
            let nonce = xor32(&xor32(&chain.keys[i - 1].0, &secrets[i]), &manifest.full_hash);
            let setup = HopSetup {
                hop_index: i,
                secret: secrets[i - 1],
                nonce,
                ack_address: path[i - 1].clone(),
            };
            (path[i].clone(), setup)
        })
        .collect();
    Ok(DoubleIncentiveSetup {
        hops,
        receiver: path[n + 1].clone(),
        receiver_secret: secrets[n],
        receiver_ack_address: path[n].clone(),
    })
}

pub fn reconstruct_key(nonce: &Bytes32, next_secret: &Bytes32, full_hash: &Bytes32) -> PuzzleKey {
    PuzzleKey(xor32(&xor32(nonce, next_secret), full_hash))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timelock::{generate_chain, verify_key};

    fn path(n: usize) -> Vec<NodeId> {
        let mut p = vec![NodeId::from("S")];
        p.extend((1..=n).map(|i| NodeId::from(format!("F{i}"))));
        p.push(NodeId::from("R"));
        p
    }

    fn manifest(body: &[u8]) -> MessageManifest {
        MessageManifest::for_body(1, body, 4).unwrap()
    }

    #[test]
    fn single_forwarder_nonce() {
        let chain = generate_chain(1, 5, &[10], 1).unwrap();
        let m = manifest(b"payload!");
        let s = setup_double_incentive(&path(1), &m, &chain, 9).unwrap();
        let expect = xor32(&xor32(&chain.keys[0].0, &s.receiver_secret), &m.full_hash);
        assert_eq!(s.hops[0].1.nonce, expect);
        assert_eq!(s.hops[0].1.ack_address, NodeId::from("S"));
        assert_eq!(s.receiver_ack_address, NodeId::from("F1"));
    }

    #[test]
    fn every_hop_reconstructs_its_key() {
        let chain = generate_chain(4, 5, &[1; 4], 2).unwrap();
        let m = manifest(b"some message body");
        let s = setup_double_incentive(&path(4), &m, &chain, 3).unwrap();
        for i in 0..4 {
            let next_secret = if i + 1 < 4 { s.hops[i + 1].1.secret } else { s.receiver_secret };
            let key = reconstruct_key(&s.hops[i].1.nonce, &next_secret, &m.full_hash);
            assert_eq!(key, chain.keys[i]);
            assert!(verify_key(&key, &chain.blocks[i].key_commitment));
        }
    }

    #[test]
    fn different_messages_give_different_nonces() {
        let chain = generate_chain(3, 5, &[1; 3], 2).unwrap();
        let a = setup_double_incentive(&path(3), &manifest(b"message A"), &chain, 3).unwrap();
        let b = setup_double_incentive(&path(3), &manifest(b"message B"), &chain, 3).unwrap();
        for (x, y) in a.hops.iter().zip(&b.hops) {
            assert_ne!(x.1.nonce, y.1.nonce);
        }
    }

    #[test]
    fn corrupted_hash_or_missing_secret_fails() {
        let chain = generate_chain(2, 5, &[1; 2], 4).unwrap();
        let body = b"abcdefgh".to_vec();
        let m = manifest(&body);
        let s = setup_double_incentive(&path(2), &m, &chain, 5).unwrap();
        let mut bad = body.clone();
        bad[3] ^= 0x01;
        let bad_hash = manifest(&bad).full_hash;
        let k = reconstruct_key(&s.hops[0].1.nonce, &s.hops[1].1.secret, &bad_hash);
        assert!(!verify_key(&k, &chain.blocks[0].key_commitment));
        let k = reconstruct_key(&s.hops[0].1.nonce, &[0u8; 32], &m.full_hash);
        assert!(!verify_key(&k, &chain.blocks[0].key_commitment));
        assert_eq!(reconstruct_key(&[0; 32], &[0; 32], &[0; 32]), PuzzleKey::ZERO);
    }

    #[test]
    fn length_checks() {
        let chain = generate_chain(2, 5, &[1; 2], 4).unwrap();
        let m = manifest(b"abcd");
        assert_eq!(
            setup_double_incentive(&path(3), &m, &chain, 0),
            Err(ProtocolError::ChainLength { forwarders: 3, blocks: 2 })
        );
        assert_eq!(
            setup_double_incentive(&path(0), &m, &chain, 0),
            Err(ProtocolError::PathTooShort(2))
        );
    }
}
