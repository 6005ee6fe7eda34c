//! Rate-1/2, K=9 convolutional code with generator polynomials 0x1AF and
//! 0x11D (the pair used by libfec's `v29`), and a hard-decision Viterbi
//! decoder over the 256-state trellis. Streams are zero-terminated with 8
//! tail bits. Bits are `u8` values 0 or 1.

use std::sync::OnceLock;

pub const CONSTRAINT_LEN: usize = 9;
pub const TAIL_BITS: usize = CONSTRAINT_LEN - 1;
pub const POLY_A: u16 = 0x1AF;
pub const POLY_B: u16 = 0x11D;

const STATES: usize = 1 << TAIL_BITS;

#[inline]
fn parity(x: u16) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Output symbol pair (a<<1 | b) for each 9-bit register value.
fn outputs() -> &'static [u8; 512] {
    static TABLE: OnceLock<[u8; 512]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0u8; 512];
        for (r, v) in t.iter_mut().enumerate() {
            *v = (parity(r as u16 & POLY_A) << 1) | parity(r as u16 & POLY_B);
        }
        t
    })
}

pub fn conv_encode(bits: &[u8]) -> Vec<u8> {
    let table = outputs();
    let mut out = Vec::with_capacity(2 * (bits.len() + TAIL_BITS));
    let mut sr: u16 = 0;
    for &b in bits.iter().chain(std::iter::repeat(&0).take(TAIL_BITS)) {
        sr = ((sr << 1) | (b & 1) as u16) & 0x1FF;
        let sym = table[sr as usize];
        out.push(sym >> 1);
        out.push(sym & 1);
    }
    out
}

/// Maximum-likelihood decode of a zero-terminated stream. Returns
/// `bits.len()/2 − 8` bits; trailing odd bits are ignored.
pub fn viterbi_decode(bits: &[u8]) -> Vec<u8> {
    let steps = bits.len() / 2;
    if steps == 0 {
        return Vec::new();
    }
    let table = outputs();
    let mut metric = [u32::MAX / 2; STATES];
    metric[0] = 0;
    let mut next = [0u32; STATES];
    // One decision bit per state per step: which predecessor won.
    let mut decisions: Vec<[u64; 4]> = Vec::with_capacity(steps);

    for t in 0..steps {
        let rx = (bits[2 * t] & 1) << 1 | (bits[2 * t + 1] & 1);
        let mut d = [0u64; 4];
        for ns in 0..STATES {
            let p0 = ns >> 1;
            let p1 = p0 | 0x80;
            let r0 = ns;
            let r1 = 0x100 | ns;
            let m0 = metric[p0] + (table[r0] ^ rx).count_ones();
            let m1 = metric[p1] + (table[r1] ^ rx).count_ones();
            if m1 < m0 {
                next[ns] = m1;
                d[ns >> 6] |= 1 << (ns & 63);
            } else {
                next[ns] = m0;
            }
        }
        decisions.push(d);
        // Keep metrics bounded on long streams.
        let min = *next.iter().min().unwrap();
        for (m, n) in metric.iter_mut().zip(next.iter()) {
            *m = n - min;
        }
    }

    let mut out = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        out[t] = (state & 1) as u8;
        let msb = (decisions[t][state >> 6] >> (state & 63)) & 1;
        state = (state >> 1) | ((msb as usize) << 7);
    }
    out.truncate(steps.saturating_sub(TAIL_BITS));
    out
}

pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(bytes.len() * 8);
    for &b in bytes {
        for i in (0..8).rev() {
            bits.push((b >> i) & 1);
        }
    }
    bits
}

/// Packs MSB-first; a final partial byte is zero-padded.
pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_vector() {
        // Computed with a separate Python shift-register encoder.
        let out = conv_encode(&bytes_to_bits(&[0xA5, 0x0F, 0x3C]));
        assert_eq!(out.len(), 64);
        assert_eq!(bits_to_bytes(&out), vec![0xe1, 0xac, 0x89, 0xe2, 0xfc, 0x48, 0x1d, 0x70]);
    }

    #[test]
    fn empty_and_zero_inputs() {
        assert_eq!(conv_encode(&[]), vec![0u8; 16]);
        assert_eq!(conv_encode(&[0u8; 40]), vec![0u8; 96]);
        assert!(viterbi_decode(&[]).is_empty());
    }

    #[test]
    fn sparse_errors_corrected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ok = 0;
        for _ in 0..1000 {
            let bits: Vec<u8> = (0..256).map(|_| rng.gen_range(0..2)).collect();
            let mut coded = conv_encode(&bits);
            for block in coded.chunks_mut(32) {
                let i = rng.gen_range(0..block.len());
                block[i] ^= 1;
            }
            if viterbi_decode(&coded) == bits {
                ok += 1;
            }
        }
        assert!(ok >= 990, "{ok}/1000");
    }

    #[test]
    fn long_burst_is_not_corrected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut wrong = 0;
        for _ in 0..200 {
            let bits: Vec<u8> = (0..256).map(|_| rng.gen_range(0..2)).collect();
            let mut coded = conv_encode(&bits);
            let start = rng.gen_range(0..coded.len() - 40);
            coded[start..start + 40].iter_mut().for_each(|b| *b ^= 1);
            if viterbi_decode(&coded) != bits {
                wrong += 1;
            }
        }
        assert!(wrong > 150, "{wrong}/200");
    }

    proptest! {
        #[test]
        fn roundtrip(bits in proptest::collection::vec(0u8..2, 0..300)) {
            prop_assert_eq!(viterbi_decode(&conv_encode(&bits)), bits);
        }

        #[test]
        fn linear(pair in proptest::collection::vec((0u8..2, 0u8..2), 0..200)) {
            let a: Vec<u8> = pair.iter().map(|p| p.0).collect();
            let b: Vec<u8> = pair.iter().map(|p| p.1).collect();
            let x: Vec<u8> = pair.iter().map(|p| p.0 ^ p.1).collect();
            let lhs = conv_encode(&x);
            let rhs: Vec<u8> = conv_encode(&a).iter().zip(conv_encode(&b)).map(|(p, q)| p ^ q).collect();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn packing(bytes in proptest::collection::vec(any::<u8>(), 0..64)) {
            prop_assert_eq!(bits_to_bytes(&bytes_to_bits(&bytes)), bytes);
        }
    }
}
