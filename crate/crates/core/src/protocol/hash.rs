use sha2::{Digest, Sha256};

use super::ProtocolError;
use crate::timelock::Bytes32;

/// Streaming SHA-256 over a message that arrives chunk by chunk. Memory use
/// is constant in the message length.
#[derive(Clone, Debug, Default)]
pub struct RollingHash {
    inner: Sha256,
    absorbed: u64,
    digest: Option<Bytes32>,
}

impl RollingHash {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, chunk: &[u8]) -> Result<(), ProtocolError> {
        if self.digest.is_some() {
            return Err(ProtocolError::HashFinalized);
        }
        self.inner.update(chunk);
        self.absorbed += chunk.len() as u64;
        Ok(())
    }

    /// Idempotent: later calls return the same digest.
    pub fn finalize(&mut self) -> Bytes32 {
        if let Some(d) = self.digest {
            return d;
        }
        let d: Bytes32 = std::mem::take(&mut self.inner).finalize().into();
        self.digest = Some(d);
        d
    }

    pub fn absorbed(&self) -> u64 {
        self.absorbed
    }

    pub fn is_finalized(&self) -> bool {
        self.digest.is_some()
    }
}

pub fn incremental_hash_update(mut state: RollingHash, chunk: &[u8]) -> Result<RollingHash, ProtocolError> {
    state.update(chunk)?;
    Ok(state)
}
