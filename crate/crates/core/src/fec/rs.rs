//! Reed–Solomon RS(255,223) over GF(2^8), field polynomial 0x11D,
//! generator roots α^0..α^31 (first consecutive root 0, α = 2).
//! Short trailing blocks use the shortened code: leading zeros are implied,
//! never transmitted.

use std::sync::OnceLock;

use thiserror::Error;

pub const RS_N: usize = 255;
pub const RS_K: usize = 223;
pub const RS_PARITY: usize = RS_N - RS_K;
/// Correctable symbol errors per block.
pub const RS_T: usize = RS_PARITY / 2;

const FIELD_POLY: u16 = 0x11D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RsError {
    #[error("Reed-Solomon block uncorrectable")]
    DecodeFailure,
    #[error("codeword length {0} does not match the block structure")]
    BadLength(usize),
}

struct Gf {
    exp: [u8; 512],
    log: [u8; 256],
    generator: [u8; RS_PARITY + 1],
}

fn gf() -> &'static Gf {
    static GF: OnceLock<Gf> = OnceLock::new();
    GF.get_or_init(|| {
        let mut exp = [0u8; 512];
        let mut log = [0u8; 256];
        let mut x: u16 = 1;
        for i in 0..255 {
            exp[i] = x as u8;
            log[x as usize] = i as u8;
            x <<= 1;
            if x & 0x100 != 0 {
                x ^= FIELD_POLY;
            }
        }
        for i in 255..512 {
            exp[i] = exp[i - 255];
        }
        let mut gf = Gf { exp, log, generator: [0; RS_PARITY + 1] };
        // g(x) = Π (x − α^i), highest degree first.
        let mut g = vec![1u8];
        for i in 0..RS_PARITY {
            let root = gf.exp[i];
            let mut next = vec![0u8; g.len() + 1];
            for (j, &c) in g.iter().enumerate() {
                next[j] ^= c;
                next[j + 1] ^= gf.mul(c, root);
            }
            g = next;
        }
        gf.generator.copy_from_slice(&g);
        gf
    })
}

impl Gf {
    #[inline]
    fn mul(&self, a: u8, b: u8) -> u8 {
        if a == 0 || b == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
        }
    }

    #[inline]
    fn div(&self, a: u8, b: u8) -> u8 {
        debug_assert!(b != 0);
        if a == 0 {
            0
        } else {
            self.exp[self.log[a as usize] as usize + 255 - self.log[b as usize] as usize]
        }
    }

    #[inline]
    fn pow_alpha(&self, e: usize) -> u8 {
        self.exp[e % 255]
    }

    /// Evaluates a polynomial stored lowest degree first.
    fn eval_low(&self, p: &[u8], x: u8) -> u8 {
        p.iter().rev().fold(0u8, |acc, &c| self.mul(acc, x) ^ c)
    }
}

fn parity(data: &[u8]) -> [u8; RS_PARITY] {
    let gf = gf();
    let g = &gf.generator;
    let mut rem = [0u8; RS_PARITY];
    for &d in data {
        let feedback = d ^ rem[0];
        rem.copy_within(1.., 0);
        rem[RS_PARITY - 1] = 0;
        if feedback != 0 {
            for j in 0..RS_PARITY {
                rem[j] ^= gf.mul(feedback, g[j + 1]);
            }
        }
    }
    rem
}

/// Splits `data` into ≤223-byte blocks and appends 32 parity bytes to each.
pub fn rs_encode(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(data.len()));
    for block in data.chunks(RS_K) {
        out.extend_from_slice(block);
        out.extend_from_slice(&parity(block));
    }
    out
}

pub fn encoded_len(n: usize) -> usize {
    n + RS_PARITY * n.div_ceil(RS_K)
}

/// Inverse of [`encoded_len`], if `n` is a possible codeword length.
pub fn decoded_len(n: usize) -> Option<usize> {
    let full = n / RS_N;
    let rest = n % RS_N;
    if rest == 0 {
        Some(full * RS_K)
    } else if rest > RS_PARITY {
        Some(full * RS_K + rest - RS_PARITY)
    } else {
        None
    }
}

/// Decodes a sequence of blocks, returning the data and the number of
/// symbols corrected across all blocks.
pub fn rs_decode(codeword: &[u8]) -> Result<(Vec<u8>, usize), RsError> {
    let len = decoded_len(codeword.len()).ok_or(RsError::BadLength(codeword.len()))?;
    let mut out = Vec::with_capacity(len);
    let mut corrected = 0;
    for block in codeword.chunks(RS_N) {
        let mut block = block.to_vec();
        corrected += decode_block(&mut block)?;
        out.extend_from_slice(&block[..block.len() - RS_PARITY]);
    }
    Ok((out, corrected))
}

fn syndromes(block: &[u8]) -> [u8; RS_PARITY] {
    let gf = gf();
    let mut s = [0u8; RS_PARITY];
    for (j, sj) in s.iter_mut().enumerate() {
        let x = gf.pow_alpha(j);
        *sj = block.iter().fold(0u8, |acc, &c| gf.mul(acc, x) ^ c);
    }
    s
}

/// Corrects one (possibly shortened) codeword in place.
fn decode_block(block: &mut [u8]) -> Result<usize, RsError> {
    let gf = gf();
    let n = block.len();
    let s = syndromes(block);
    if s.iter().all(|&v| v == 0) {
        return Ok(0);
    }

    // Berlekamp–Massey; polynomials lowest degree first.
    let mut lambda = vec![0u8; RS_PARITY + 1];
    lambda[0] = 1;
    let mut prev = lambda.clone();
    let mut l = 0usize;
    let mut m = 1usize;
    let mut b = 1u8;
    for k in 0..RS_PARITY {
        let mut delta = s[k];
        for i in 1..=l {
            delta ^= gf.mul(lambda[i], s[k - i]);
        }
        if delta == 0 {
            m += 1;
            continue;
        }
        let coef = gf.div(delta, b);
        let snapshot = lambda.clone();
        for i in 0..=RS_PARITY - m {
            lambda[i + m] ^= gf.mul(coef, prev[i]);
        }
        if 2 * l <= k {
            l = k + 1 - l;
            prev = snapshot;
            b = delta;
            m = 1;
        } else {
            m += 1;
        }
    }
    if l > RS_T {
        return Err(RsError::DecodeFailure);
    }
    lambda.truncate(l + 1);

    // Chien search over the transmitted positions only. Position i holds the
    // coefficient of x^(n-1-i).
    let mut locations = Vec::with_capacity(l);
    for i in 0..n {
        let degree = n - 1 - i;
        let x_inv = gf.pow_alpha(255 - degree % 255);
        if gf.eval_low(&lambda, x_inv) == 0 {
            locations.push((i, degree));
        }
    }
    if locations.len() != l {
        return Err(RsError::DecodeFailure);
    }

    // Forney: Ω = S·Λ mod x^32, e = X·Ω(X⁻¹)/Λ'(X⁻¹).
    let mut omega = [0u8; RS_PARITY];
    for (i, o) in omega.iter_mut().enumerate() {
        for j in 0..=i.min(l) {
            *o ^= gf.mul(lambda[j], s[i - j]);
        }
    }
    for &(i, degree) in &locations {
        let x = gf.pow_alpha(degree);
        let x_inv = gf.pow_alpha(255 - degree % 255);
        let num = gf.eval_low(&omega, x_inv);
        // Formal derivative keeps the odd-degree terms.
        let mut den = 0u8;
        let mut xp = 1u8;
        let x_inv2 = gf.mul(x_inv, x_inv);
        for j in (1..lambda.len()).step_by(2) {
            den ^= gf.mul(lambda[j], xp);
            xp = gf.mul(xp, x_inv2);
        }
        if den == 0 {
            return Err(RsError::DecodeFailure);
        }
        block[i] ^= gf.mul(x, gf.div(num, den));
    }

    if syndromes(block).iter().any(|&v| v != 0) {
        return Err(RsError::DecodeFailure);
    }
    Ok(l)
}
