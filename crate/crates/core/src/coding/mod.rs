//! Random linear network coding over GF(256).
//!
//! A message is cut into `k` zero-padded source symbols. Coded packets carry a
//! coefficient vector and the matching linear combination of the symbols.
//! Intermediate nodes recode by combining whatever packets they hold; the
//! receiver keeps a reduced row echelon matrix and counts a packet as
//! innovative when it raises the rank.

pub mod gf256;

use rand::Rng;
use thiserror::Error;

use crate::NodeId;

pub const MAX_GENERATION_SIZE: usize = 255;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodingError {
    #[error("multiplicative inverse of zero")]
    InverseOfZero,
    #[error("generation size {0} outside 1..=255")]
    GenerationSize(usize),
    #[error("symbol size must be positive")]
    ZeroSymbolSize,
    #[error("packet of generation {got} offered to decoder of generation {expected}")]
    GenerationMismatch { expected: u64, got: u64 },
    #[error("packet has {got} coefficients, generation size is {expected}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("packet payload has {got} bytes, symbol size is {expected}")]
    PayloadSize { expected: usize, got: usize },
    #[error("recode needs at least one held packet")]
    EmptyRecode,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generation {
    pub generation_id: u64,
    pub symbol_size: usize,
    pub source_symbols: Vec<Vec<u8>>,
}

impl Generation {
    pub fn from_symbols(
        generation_id: u64,
        source_symbols: Vec<Vec<u8>>,
    ) -> Result<Self, CodingError> {
        let k = source_symbols.len();
        if k == 0 || k > MAX_GENERATION_SIZE {
            return Err(CodingError::GenerationSize(k));
        }
        let symbol_size = source_symbols[0].len();
        if symbol_size == 0 {
            return Err(CodingError::ZeroSymbolSize);
        }
        if let Some(bad) = source_symbols.iter().find(|s| s.len() != symbol_size) {
            return Err(CodingError::PayloadSize { expected: symbol_size, got: bad.len() });
        }
        Ok(Generation { generation_id, symbol_size, source_symbols })
    }

    /// Splits `message` into `symbol_size` pieces, zero-padding the last one.
    /// The original length must travel separately to undo the padding.
    pub fn from_message(
        generation_id: u64,
        message: &[u8],
        symbol_size: usize,
    ) -> Result<Self, CodingError> {
        if symbol_size == 0 {
            return Err(CodingError::ZeroSymbolSize);
        }
        let k = message.len().div_ceil(symbol_size);
        if k == 0 || k > MAX_GENERATION_SIZE {
            return Err(CodingError::GenerationSize(k));
        }
        let symbols = message
            .chunks(symbol_size)
            .map(|c| {
                let mut s = c.to_vec();
                s.resize(symbol_size, 0);
                s
            })
            .collect();
        Generation::from_symbols(generation_id, symbols)
    }

    pub fn k(&self) -> usize {
        self.source_symbols.len()
    }

    /// Payload for an explicit coefficient vector.
    pub fn combine(&self, coefficients: &[u8]) -> Vec<u8> {
        let mut payload = vec![0u8; self.symbol_size];
        for (c, sym) in coefficients.iter().zip(&self.source_symbols) {
            gf256::axpy(&mut payload, *c, sym);
        }
        payload
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedPacket {
    pub generation_id: u64,
    pub coefficients: Vec<u8>,
    pub payload: Vec<u8>,
    pub last_hop: Option<NodeId>,
}

impl CodedPacket {
    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0)
    }
}

pub fn encode<R: Rng + ?Sized>(generation: &Generation, rng: &mut R) -> CodedPacket {
    let mut coefficients = vec![0u8; generation.k()];
    rng.fill(&mut coefficients[..]);
    encode_with_coefficients(generation, coefficients)
}

pub fn encode_with_coefficients(generation: &Generation, coefficients: Vec<u8>) -> CodedPacket {
    assert_eq!(coefficients.len(), generation.k(), "coefficient vector length");
    CodedPacket {
        generation_id: generation.generation_id,
        payload: generation.combine(&coefficients),
        coefficients,
        last_hop: None,
    }
}

/// Fresh random combination of `held`; the result lies in their span.
pub fn recode<R: Rng + ?Sized>(held: &[CodedPacket], rng: &mut R) -> Result<CodedPacket, CodingError> {
    let mut scalars = vec![0u8; held.len()];
    rng.fill(&mut scalars[..]);
    recode_with_scalars(held, &scalars)
}

pub fn recode_with_scalars(held: &[CodedPacket], scalars: &[u8]) -> Result<CodedPacket, CodingError> {
    let first = held.first().ok_or(CodingError::EmptyRecode)?;
    let mut coefficients = vec![0u8; first.coefficients.len()];
    let mut payload = vec![0u8; first.payload.len()];
    for (p, &s) in held.iter().zip(scalars) {
        if p.generation_id != first.generation_id {
            return Err(CodingError::GenerationMismatch {
                expected: first.generation_id,
                got: p.generation_id,
            });
        }
        gf256::axpy(&mut coefficients, s, &p.coefficients);
        gf256::axpy(&mut payload, s, &p.payload);
    }
    Ok(CodedPacket { generation_id: first.generation_id, coefficients, payload, last_hop: None })
}

#[derive(Clone, Debug)]
struct Row {
    pivot: usize,
    coefficients: Vec<u8>,
    payload: Vec<u8>,
}

/// Receiver side: incremental Gaussian elimination in reduced row echelon form.
#[derive(Clone, Debug)]
pub struct DecoderState {
    generation_id: u64,
    k: usize,
    symbol_size: usize,
    rows: Vec<Row>,
}

impl DecoderState {
    pub fn new(generation_id: u64, k: usize, symbol_size: usize) -> Result<Self, CodingError> {
        if k == 0 || k > MAX_GENERATION_SIZE {
            return Err(CodingError::GenerationSize(k));
        }
        if symbol_size == 0 {
            return Err(CodingError::ZeroSymbolSize);
        }
        Ok(DecoderState { generation_id, k, symbol_size, rows: Vec::with_capacity(k) })
    }

    pub fn for_generation(generation: &Generation) -> Self {
        DecoderState::new(generation.generation_id, generation.k(), generation.symbol_size)
            .expect("generation already validated")
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_complete(&self) -> bool {
        self.rows.len() == self.k
    }

    /// Absorbs a packet and reports whether it raised the rank.
    pub fn accept(&mut self, packet: &CodedPacket) -> Result<bool, CodingError> {
        if packet.generation_id != self.generation_id {
            return Err(CodingError::GenerationMismatch {
                expected: self.generation_id,
                got: packet.generation_id,
            });
        }
        if packet.coefficients.len() != self.k {
            return Err(CodingError::CoefficientCount {
                expected: self.k,
                got: packet.coefficients.len(),
            });
        }
        if packet.payload.len() != self.symbol_size {
            return Err(CodingError::PayloadSize {
                expected: self.symbol_size,
                got: packet.payload.len(),
            });
        }
        let mut coefficients = packet.coefficients.clone();
        let mut payload = packet.payload.clone();
        for row in &self.rows {
            let factor = coefficients[row.pivot];
            if factor != 0 {
                gf256::axpy(&mut coefficients, factor, &row.coefficients);
                gf256::axpy(&mut payload, factor, &row.payload);
            }
        }
        let Some(pivot) = coefficients.iter().position(|&c| c != 0) else {
            return Ok(false);
        };
        let norm = gf256::inv(coefficients[pivot])?;
        gf256::scale(&mut coefficients, norm);
        gf256::scale(&mut payload, norm);
        for row in &mut self.rows {
            let factor = row.coefficients[pivot];
            if factor != 0 {
                gf256::axpy(&mut row.coefficients, factor, &coefficients);
                gf256::axpy(&mut row.payload, factor, &payload);
            }
        }
        let at = self.rows.partition_point(|r| r.pivot < pivot);
        self.rows.insert(at, Row { pivot, coefficients, payload });
        Ok(true)
    }

    /// Source symbols once the rank reaches `k`.
    pub fn decoded(&self) -> Option<Vec<Vec<u8>>> {
        self.is_complete().then(|| self.rows.iter().map(|r| r.payload.clone()).collect())
    }
}

pub fn decoder_accept(
    mut state: DecoderState,
    packet: &CodedPacket,
) -> Result<(DecoderState, bool), CodingError> {
    let innovative = state.accept(packet)?;
    Ok((state, innovative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Naive elimination with shift-and-add field multiplication; shares no code
    // with the decoder.
    fn slow_mul(mut a: u8, mut b: u8) -> u8 {
        let mut p = 0u8;
        while b != 0 {
            if b & 1 != 0 {
                p ^= a;
            }
            let carry = a & 0x80 != 0;
            a <<= 1;
            if carry {
                a ^= 0x1b;
            }
            b >>= 1;
        }
        p
    }

    fn slow_inv(a: u8) -> u8 {
        (1..=255u8).find(|&b| slow_mul(a, b) == 1).unwrap()
    }

    pub(crate) fn oracle_rank(rows: &[Vec<u8>]) -> usize {
        let mut m: Vec<Vec<u8>> = rows.to_vec();
        let cols = m.first().map_or(0, Vec::len);
        let mut rank = 0;
        for col in 0..cols {
            let Some(p) = (rank..m.len()).find(|&r| m[r][col] != 0) else { continue };
            m.swap(rank, p);
            let iv = slow_inv(m[rank][col]);
            for x in m[rank].iter_mut() {
                *x = slow_mul(*x, iv);
            }
            for r in 0..m.len() {
                if r != rank && m[r][col] != 0 {
                    let f = m[r][col];
                    for c in 0..cols {
                        let v = slow_mul(f, m[rank][c]);
                        m[r][c] ^= v;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    fn generation(k: usize, size: usize, seed: u64) -> Generation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let symbols = (0..k)
            .map(|_| {
                let mut s = vec![0u8; size];
                rng.fill(&mut s[..]);
                s
            })
            .collect();
        Generation::from_symbols(1, symbols).unwrap()
    }

    #[test]
    fn unit_coefficients_reproduce_symbols() {
        let g = generation(5, 16, 1);
        for j in 0..5 {
            let mut e = vec![0u8; 5];
            e[j] = 1;
            assert_eq!(encode_with_coefficients(&g, e).payload, g.source_symbols[j]);
        }
    }

    #[test]
    fn zero_and_sum_combinations() {
        let g = generation(2, 8, 2);
        let zero = encode_with_coefficients(&g, vec![0, 0]);
        assert!(zero.payload.iter().all(|&b| b == 0));
        let mut d = DecoderState::for_generation(&g);
        assert!(!d.accept(&zero).unwrap());
        let sum = encode_with_coefficients(&g, vec![1, 1]);
        let xor: Vec<u8> =
            g.source_symbols[0].iter().zip(&g.source_symbols[1]).map(|(a, b)| a ^ b).collect();
        assert_eq!(sum.payload, xor);
    }

    #[test]
    fn identity_stream_decodes() {
        let g = generation(4, 10, 3);
        let mut d = DecoderState::for_generation(&g);
        for j in 0..4 {
            let mut e = vec![0u8; 4];
            e[j] = 1;
            assert!(d.accept(&encode_with_coefficients(&g, e)).unwrap());
        }
        assert_eq!(d.decoded().unwrap(), g.source_symbols);
    }

    #[test]
    fn duplicates_are_not_innovative() {
        let g = generation(3, 4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = encode(&g, &mut rng);
        let mut d = DecoderState::for_generation(&g);
        assert!(d.accept(&p).unwrap());
        assert!(!d.accept(&p).unwrap());
        assert_eq!(d.rank(), 1);
    }

    #[test]
    fn innovative_flags_match_oracle_on_random_prefixes() {
        let g = generation(4, 6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut d = DecoderState::for_generation(&g);
        let mut seen: Vec<Vec<u8>> = Vec::new();
        for _ in 0..6 {
            let p = encode(&g, &mut rng);
            let before = oracle_rank(&seen);
            seen.push(p.coefficients.clone());
            let after = oracle_rank(&seen);
            assert_eq!(d.accept(&p).unwrap(), after > before);
            assert_eq!(d.rank(), after);
        }
    }

    #[test]
    fn recode_single_packet_with_unit_scalar_is_identity() {
        let g = generation(3, 5, 6);
        let p = encode(&g, &mut ChaCha8Rng::seed_from_u64(6));
        assert_eq!(recode_with_scalars(std::slice::from_ref(&p), &[1]).unwrap(), p);
        assert_eq!(recode(&[], &mut ChaCha8Rng::seed_from_u64(0)), Err(CodingError::EmptyRecode));
    }

    #[test]
    fn recoded_output_stays_in_input_span() {
        let g = generation(6, 8, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let held: Vec<_> = (0..3).map(|_| encode(&g, &mut rng)).collect();
        let held_rows: Vec<_> = held.iter().map(|p| p.coefficients.clone()).collect();
        let base = oracle_rank(&held_rows);
        let mut receiver = DecoderState::for_generation(&g);
        for _ in 0..20 {
            let r = recode(&held, &mut rng).unwrap();
            let mut with = held_rows.clone();
            with.push(r.coefficients.clone());
            assert_eq!(oracle_rank(&with), base);
            assert_eq!(r.payload, g.combine(&r.coefficients));
            receiver.accept(&r).unwrap();
        }
        assert!(receiver.rank() <= base);
    }

    #[test]
    fn mismatches_are_errors() {
        let g = generation(2, 4, 8);
        let mut d = DecoderState::new(9, 2, 4).unwrap();
        let p = encode(&g, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(d.accept(&p), Err(CodingError::GenerationMismatch { expected: 9, got: 1 }));
        assert_eq!(DecoderState::new(1, 0, 4).unwrap_err(), CodingError::GenerationSize(0));
        assert_eq!(DecoderState::new(1, 256, 4).unwrap_err(), CodingError::GenerationSize(256));
    }

    #[test]
    fn message_padding() {
        let g = Generation::from_message(3, b"hello world", 4).unwrap();
        assert_eq!(g.k(), 3);
        assert_eq!(g.source_symbols[2], b"rld\0");
        assert!(Generation::from_message(3, &[0u8; 256 * 2], 2).is_err());
        assert!(Generation::from_message(3, &[], 2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn decode_is_byte_exact_and_rank_tracks_oracle(k in 1usize..=32, seed in any::<u64>()) {
                let g = generation(k, 12, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
                let mut d = DecoderState::for_generation(&g);
                let mut seen = Vec::new();
                let mut sent = 0;
                while !d.is_complete() && sent < 4 * k + 8 {
                    let p = encode(&g, &mut rng);
                    seen.push(p.coefficients.clone());
                    d.accept(&p).unwrap();
                    prop_assert_eq!(d.rank(), oracle_rank(&seen));
                    sent += 1;
                }
                prop_assert!(d.is_complete());
                prop_assert_eq!(d.decoded().unwrap(), g.source_symbols.clone());
            }

            #[test]
            fn payload_linearity_survives_recoding_depth(seed in any::<u64>(), depth in 1usize..5) {
                let g = generation(5, 9, seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut layer: Vec<_> = (0..4).map(|_| encode(&g, &mut rng)).collect();
                for _ in 0..depth {
                    layer = (0..4).map(|_| recode(&layer, &mut rng).unwrap()).collect();
                    for p in &layer {
                        prop_assert_eq!(&p.payload, &g.combine(&p.coefficients));
                    }
                }
            }
        }
    }
}
