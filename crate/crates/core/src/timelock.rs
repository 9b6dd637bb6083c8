//! Time-locked reward chains built from iterated SHA-256.
//!
//! Every block hides its key behind `iterations` sequential hash rounds over a
//! random initialization vector. Blocks after the first publish their IV
//! XOR-masked with the previous block's key, so an outsider must recover the
//! keys strictly in order while the creator can derive all of them at once.

use std::cell::Cell;
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Width of every IV, key, mask, secret and nonce.
pub const BLOCK_BYTES: usize = 32;

pub type Bytes32 = [u8; BLOCK_BYTES];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimelockError {
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("chain must contain at least one block")]
    EmptyChain,
    #[error("expected {expected} block values, got {got}")]
    ValueCountMismatch { expected: usize, got: usize },
}

thread_local! {
    static HASH_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of SHA-256 compressions of a 32-byte block performed by puzzle code
/// on the current thread.
pub fn hash_call_count() -> u64 {
    HASH_CALLS.with(Cell::get)
}

pub fn sha256(data: &[u8]) -> Bytes32 {
    Sha256::digest(data).into()
}

fn counted_sha256(block: &Bytes32) -> Bytes32 {
    HASH_CALLS.with(|c| c.set(c.get() + 1));
    sha256(block)
}

pub fn xor32(a: &Bytes32, b: &Bytes32) -> Bytes32 {
    let mut out = [0u8; BLOCK_BYTES];
    for (o, (x, y)) in out.iter_mut().zip(a.iter().zip(b)) {
        *o = x ^ y;
    }
    out
}

/// The fully iterated hash that unlocks one reward block.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PuzzleKey(#[serde(with = "hex::serde")] pub Bytes32);

impl PuzzleKey {
    pub const ZERO: PuzzleKey = PuzzleKey([0u8; BLOCK_BYTES]);

    pub fn as_bytes(&self) -> &Bytes32 {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// The public commitment stored next to the block.
    pub fn commitment(&self) -> Bytes32 {
        sha256(&self.0)
    }
}

impl fmt::Debug for PuzzleKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PuzzleKey({})", &self.to_hex()[..16])
    }
}

impl From<Bytes32> for PuzzleKey {
    fn from(bytes: Bytes32) -> Self {
        PuzzleKey(bytes)
    }
}

/// Creator-side description of one reward block, including the clear IV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewardBlockSpec {
    pub index: usize,
    pub iv_clear: Bytes32,
    pub iv_published: Bytes32,
    pub iterations: u64,
    pub key_commitment: Bytes32,
    pub value: u64,
}

impl RewardBlockSpec {
    pub fn public(&self) -> PublishedBlock {
        PublishedBlock {
            index: self.index,
            iv_published: self.iv_published,
            iterations: self.iterations,
            key_commitment: self.key_commitment,
            value: self.value,
        }
    }
}

/// The fields of a reward block that are safe to publish.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublishedBlock {
    pub index: usize,
    #[serde(with = "hex::serde")]
    pub iv_published: Bytes32,
    pub iterations: u64,
    #[serde(with = "hex::serde")]
    pub key_commitment: Bytes32,
    pub value: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PuzzleChain {
    pub blocks: Vec<RewardBlockSpec>,
    /// Never leaves the creator.
    pub keys: Vec<PuzzleKey>,
}

impl PuzzleChain {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn published(&self) -> Vec<PublishedBlock> {
        self.blocks.iter().map(RewardBlockSpec::public).collect()
    }

    pub fn total_value(&self) -> u64 {
        self.blocks.iter().map(|b| b.value).sum()
    }
}

/// Applies SHA-256 to `iv` exactly `iterations` times.
pub fn derive_key(iv: &Bytes32, iterations: u64) -> Result<PuzzleKey, TimelockError> {
    if iterations == 0 {
        return Err(TimelockError::ZeroIterations);
    }
    let mut state = *iv;
    for _ in 0..iterations {
        state = counted_sha256(&state);
    }
    Ok(PuzzleKey(state))
}

/// Draws `n_blocks` IVs from a ChaCha stream seeded with `rng_seed` and builds
/// the chain. Key derivations run in parallel; IV draws stay sequential so the
/// result only depends on the seed.
pub fn generate_chain(
    n_blocks: usize,
    iterations: u64,
    values: &[u64],
    rng_seed: u64,
) -> Result<PuzzleChain, TimelockError> {
    if n_blocks == 0 {
        return Err(TimelockError::EmptyChain);
    }
    if values.len() != n_blocks {
        return Err(TimelockError::ValueCountMismatch { expected: n_blocks, got: values.len() });
    }
    if iterations == 0 {
        return Err(TimelockError::ZeroIterations);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let ivs: Vec<Bytes32> = (0..n_blocks)
        .map(|_| {
            let mut iv = [0u8; BLOCK_BYTES];
            rng.fill_bytes(&mut iv);
            iv
        })
        .collect();
    let keys = ivs
        .par_iter()
        .map(|iv| derive_key(iv, iterations))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble_chain(&ivs, keys, iterations, values))
}

/// Builds the public blocks from clear IVs and their already derived keys.
pub fn assemble_chain(
    ivs: &[Bytes32],
    keys: Vec<PuzzleKey>,
    iterations: u64,
    values: &[u64],
) -> PuzzleChain {
    debug_assert_eq!(ivs.len(), keys.len());
    let blocks = ivs
        .iter()
        .enumerate()
        .map(|(index, iv)| {
            let iv_published = match index {
                0 => *iv,
                _ => xor32(iv, &keys[index - 1].0),
            };
            RewardBlockSpec {
                index,
                iv_clear: *iv,
                iv_published,
                iterations,
                key_commitment: keys[index].commitment(),
                value: values[index],
            }
        })
        .collect();
    PuzzleChain { blocks, keys }
}

pub fn deobfuscate_iv(iv_published: &Bytes32, prev_key: &PuzzleKey) -> Bytes32 {
    xor32(iv_published, &prev_key.0)
}

/// The brute-forcer's path: unmask the IV with the previous key (absent for
/// block 0) and grind through the iterations.
pub fn solve_block(
    iv_published: &Bytes32,
    prev_key: Option<&PuzzleKey>,
    iterations: u64,
) -> Result<PuzzleKey, TimelockError> {
    let iv = match prev_key {
        Some(k) => deobfuscate_iv(iv_published, k),
        None => *iv_published,
    };
    derive_key(&iv, iterations)
}

pub fn verify_key(candidate: &PuzzleKey, commitment: &Bytes32) -> bool {
    candidate.commitment() == *commitment
}
