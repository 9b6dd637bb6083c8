//! Arithmetic in GF(2^8) modulo the AES polynomial x^8 + x^4 + x^3 + x + 1.
//!
//! Multiplication goes through log/antilog tables built at compile time with
//! generator 0x03.

use super::CodingError;

const POLY: u16 = 0x11b;

const fn build_tables() -> ([u8; 256], [u8; 510]) {
    let mut log = [0u8; 256];
    let mut exp = [0u8; 510];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        exp[i + 255] = x as u8;
        log[x as usize] = i as u8;
        // x *= 3, i.e. x ^ (x << 1) reduced
        let mut doubled = x << 1;
        if doubled & 0x100 != 0 {
            doubled ^= POLY;
        }
        x ^= doubled;
        i += 1;
    }
    (log, exp)
}

const TABLES: ([u8; 256], [u8; 510]) = build_tables();
const LOG: [u8; 256] = TABLES.0;
const EXP: [u8; 510] = TABLES.1;

#[inline]
pub fn add(a: u8, b: u8) -> u8 {
    a ^ b
}

#[inline]
pub fn mul(a: u8, b: u8) -> u8 {
    if a == 0 || b == 0 {
        return 0;
    }
    EXP[LOG[a as usize] as usize + LOG[b as usize] as usize]
}

pub fn inv(a: u8) -> Result<u8, CodingError> {
    if a == 0 {
        return Err(CodingError::InverseOfZero);
    }
    Ok(EXP[255 - LOG[a as usize] as usize])
}

/// `dst[i] ^= scalar * src[i]`
pub fn axpy(dst: &mut [u8], scalar: u8, src: &[u8]) {
    if scalar == 0 {
        return;
    }
    let ls = LOG[scalar as usize] as usize;
    for (d, &s) in dst.iter_mut().zip(src) {
        if s != 0 {
            *d ^= EXP[ls + LOG[s as usize] as usize];
        }
    }
}

pub fn scale(buf: &mut [u8], scalar: u8) {
    for b in buf {
        *b = mul(*b, scalar);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Shift-and-add multiplication, independent of the tables.
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

    #[test]
    fn tables_agree_with_shift_and_add() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(mul(a, b), slow_mul(a, b), "{a} * {b}");
            }
        }
    }

    #[test]
    fn identity_and_inverses() {
        for a in 0..=255u8 {
            assert_eq!(mul(a, 1), a);
        }
        for a in 1..=255u8 {
            assert_eq!(mul(a, inv(a).unwrap()), 1);
        }
        assert_eq!(inv(0), Err(CodingError::InverseOfZero));
    }

    #[test]
    fn aes_inverse_pair() {
        assert_eq!(slow_mul(0x53, 0xca), 0x01);
        assert_eq!(mul(0x53, 0xca), 0x01);
        assert_eq!(inv(0x53).unwrap(), 0xca);
    }

    #[test]
    fn axpy_matches_elementwise() {
        let src = [0u8, 1, 2, 0x53, 0xff];
        let mut dst = [9u8, 9, 9, 9, 9];
        axpy(&mut dst, 0xca, &src);
        for i in 0..5 {
            assert_eq!(dst[i], 9 ^ slow_mul(0xca, src[i]));
        }
    }
}
