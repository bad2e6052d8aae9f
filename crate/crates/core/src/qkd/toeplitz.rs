//! Privacy amplification by seeded Toeplitz hashing over GF(2).
//!
//! The m×n Toeplitz matrix is defined by n+m−1 seeded random bits t via
//! T(i,j) = t[i + n − 1 − j]; output_i = ⊕_j T(i,j)·key_j. Keys are
//! packed into 64-bit words so hashing is a sliding AND-parity window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_range, Result};
use crate::qkd::info::secret_fraction;

/// Security judgment attached to the final key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecurityVerdict {
    Secure,
    Insecure,
    Inconclusive,
}

impl std::fmt::Display for SecurityVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Secure => "SECURE",
            Self::Insecure => "INSECURE",
            Self::Inconclusive => "INCONCLUSIVE",
        };
        f.write_str(s)
    }
}

/// Output of privacy amplification.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplifiedKey {
    pub bits: Vec<bool>,
    pub verdict: SecurityVerdict,
}

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            words[i / 64] |= 1u64 << (i % 64);
        }
    }
    words
}

/// 64 bits of `t` starting at `start_bit`, zero-padded past the end.
fn window_word(t: &[u64], start_bit: usize) -> u64 {
    let w = start_bit / 64;
    let r = start_bit % 64;
    let lo = t.get(w).copied().unwrap_or(0);
    if r == 0 {
        lo
    } else {
        let hi = t.get(w + 1).copied().unwrap_or(0);
        (lo >> r) | (hi << (64 - r))
    }
}

/// Hashes `key` down to `out_len` bits with the Toeplitz matrix drawn
/// from the seeded stream. Linear over GF(2):
/// hash(k1 ⊕ k2) = hash(k1) ⊕ hash(k2) for a fixed seed.
pub fn toeplitz_hash(key: &[bool], out_len: usize, seed: u64) -> Vec<bool> {
    let n = key.len();
    if out_len == 0 || n == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag_bits: Vec<bool> = (0..n + out_len - 1).map(|_| rng.random_bool(0.5)).collect();
    let t = pack(&diag_bits);

    // T(i,j) = t[i + n−1 − j]; with rk the bit-reversed key the row-i dot
    // product becomes parity(t[i .. i+n] & rk).
    let reversed: Vec<bool> = key.iter().rev().copied().collect();
    let rk = pack(&reversed);

    let mut out = Vec::with_capacity(out_len);
    for i in 0..out_len {
        let mut acc = 0u32;
        for (w, &kw) in rk.iter().enumerate() {
            acc ^= (window_word(&t, i + 64 * w) & kw).count_ones();
        }
        out.push(acc & 1 == 1);
    }
    out
}

/// Compresses a reconciled key, discounting the eavesdropper's
/// information at the estimated error rate, the disclosed parity bits,
/// and a safety margin: m = ⌊n·(I_AB − I_E)⌋ − leaked − margin.
pub fn privacy_amplify(
    key: &[bool],
    leaked_bits: usize,
    qber: f64,
    epsilon_margin: usize,
    seed: u64,
) -> Result<AmplifiedKey> {
    check_range("qber", qber, 0.0, 0.5)?;
    let n = key.len();
    let capacity = (n as f64 * secret_fraction(qber)).floor() as i64;
    let m = capacity - leaked_bits as i64 - epsilon_margin as i64;
    if m <= 0 {
        return Ok(AmplifiedKey {
            bits: Vec::new(),
            verdict: SecurityVerdict::Insecure,
        });
    }
    Ok(AmplifiedKey {
        bits: toeplitz_hash(key, m as usize, seed),
        verdict: SecurityVerdict::Secure,
    })
}
