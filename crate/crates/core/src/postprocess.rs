//! Classical key distillation: parity-based error correction and Toeplitz
//! privacy amplification.
//!
//! Error correction is a light Cascade variant. The first pass compares
//! block parities in natural order and bisects every mismatched block down
//! to a single flip. Later passes shuffle the positions with the run's
//! seeded stream and use half the block size; passes repeat until three
//! consecutive passes find no mismatch. A single clean pass is not enough:
//! an error pair sitting inside one block is parity-invisible to that
//! partition, and only independent reshuffles drive the chance of a pair
//! hiding three times in a row to the 1e-6 region. Error patterns that
//! refuse to converge are cut off and flagged. Every parity announcement
//! counts as one leaked bit, and the leak total is charged against the key
//! during privacy amplification.
//!
//! Privacy amplification multiplies the key by a random Toeplitz matrix
//! over GF(2). The output length is
//! `m = max(0, floor(n * (1 - h(qber))) - leaked - s)` with `h` the binary
//! entropy and `s` the security margin; the seed is published so every
//! party hashes identically.

use thiserror::Error;

use crate::rng::Prng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PostprocessError {
    #[error("argument {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("keys of length {a} and {b} cannot be corrected with block {block}")]
    LengthMismatch { a: usize, b: usize, block: usize },
}

/// Binary entropy in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(q: f64) -> Result<f64, PostprocessError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(PostprocessError::OutOfRange(q));
    }
    if q == 0.0 || q == 1.0 {
        return Ok(0.0);
    }
    Ok(-q * q.log2() - (1.0 - q) * (1.0 - q).log2())
}

/// Outcome of one error-correction conversation.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CorrectionResult {
    /// Reference key, unchanged.
    pub key_a: Vec<bool>,
    /// Follower key after correction toward the reference.
    pub key_b: Vec<bool>,
    /// Parity bits announced over the public channel.
    pub leaked: usize,
    /// Ground-truth disagreements remaining (simulator-side knowledge).
    pub residual_disagreement: usize,
    /// Whether the final pass saw no mismatched block.
    pub converged: bool,
    /// Parity passes executed.
    pub passes: usize,
}

const MAX_PASSES: usize = 24;
const CLEAN_STREAK_TARGET: usize = 3;

fn parity(key: &[bool], positions: &[usize]) -> bool {
    positions.iter().fold(false, |acc, &p| acc ^ key[p])
}

/// Bisect a parity-mismatched block down to one differing position and flip
/// it in `key_b`. Each halving announces one more parity bit.
fn bisect_and_flip(key_a: &[bool], key_b: &mut [bool], block: &[usize], leaked: &mut usize) {
    let mut lo = 0usize;
    let mut hi = block.len();
    while hi - lo > 1 {
        let mid = lo + (hi - lo).div_ceil(2);
        *leaked += 1;
        if parity(key_a, &block[lo..mid]) != parity(key_b, &block[lo..mid]) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    key_b[block[lo]] ^= true;
}

fn run_pass(
    key_a: &[bool],
    key_b: &mut [bool],
    perm: &[usize],
    block: usize,
    leaked: &mut usize,
) -> usize {
    let mut mismatches = 0usize;
    for chunk in perm.chunks(block) {
        *leaked += 1;
        if parity(key_a, chunk) != parity(key_b, chunk) {
            mismatches += 1;
            bisect_and_flip(key_a, key_b, chunk, leaked);
        }
    }
    mismatches
}

/// Correct `key_b` toward `key_a` by iterated block-parity comparison.
///
/// `rng` drives the position shuffles of the later passes, so the whole
/// conversation is determined by the session seed.
pub fn error_correct(
    key_a: &[bool],
    key_b: &[bool],
    block: usize,
    rng: &mut Prng,
) -> Result<CorrectionResult, PostprocessError> {
    let n = key_a.len();
    if key_b.len() != n || block == 0 || block > n {
        return Err(PostprocessError::LengthMismatch {
            a: n,
            b: key_b.len(),
            block,
        });
    }
    let mut corrected = key_b.to_vec();
    let mut leaked = 0usize;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut passes = 0usize;
    let mut clean_streak = 0usize;
    while passes < MAX_PASSES {
        let pass_block = if passes == 0 {
            block
        } else {
            rng.shuffle(&mut perm);
            (block / 2).max(2).min(n).max(1)
        };
        let mismatches = run_pass(key_a, &mut corrected, &perm, pass_block, &mut leaked);
        passes += 1;
        if mismatches == 0 {
            clean_streak += 1;
        } else {
            clean_streak = 0;
        }
        if clean_streak >= CLEAN_STREAK_TARGET {
            break;
        }
    }
    let residual = key_a
        .iter()
        .zip(&corrected)
        .filter(|(a, b)| a != b)
        .count();
    Ok(CorrectionResult {
        key_a: key_a.to_vec(),
        key_b: corrected,
        leaked,
        residual_disagreement: residual,
        converged: clean_streak >= CLEAN_STREAK_TARGET,
        passes,
    })
}

/// Published seed of a Toeplitz hash: `n + m - 1` bits for an `m x n`
/// matrix, entry `(i, j)` reading `bits[i - j + n - 1]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ToeplitzSeed {
    pub bits: Vec<bool>,
}

/// Final-key length rule: `max(0, floor(n(1 - h(qber))) - leaked - s)`.
pub fn pa_output_len(
    n: usize,
    qber: f64,
    leaked: usize,
    security_param: usize,
) -> Result<usize, PostprocessError> {
    let h = binary_entropy(qber)?;
    let budget = (n as f64 * (1.0 - h)).floor() as i64 - leaked as i64 - security_param as i64;
    Ok(budget.max(0) as usize)
}

fn pack_bits(bits: &[bool]) -> Vec<u64> {
    // Two words of zero padding let the sliding-window reads below run off
    // the end without bounds checks in the caller.
    let mut words = vec![0u64; bits.len().div_ceil(64) + 2];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

/// Apply the Toeplitz matrix defined by `seed` to `input` over GF(2).
///
/// Row `i` of the matrix reads `seed[i + n - 1 - j]` at column `j`, which
/// is a length-`n` window of the reversed seed starting at `m - 1 - i`.
/// Working on packed words with popcount parity keeps the hash usable on
/// session-sized keys.
pub fn toeplitz_hash(seed: &ToeplitzSeed, input: &[bool], out_len: usize) -> Vec<bool> {
    if out_len == 0 {
        return Vec::new();
    }
    let n = input.len();
    assert_eq!(
        seed.bits.len(),
        n + out_len - 1,
        "seed must carry n + m - 1 bits"
    );
    if n == 0 {
        return vec![false; out_len];
    }
    let input_words = pack_bits(input);
    let reversed: Vec<bool> = seed.bits.iter().rev().copied().collect();
    let seed_words = pack_bits(&reversed);
    let word_count = n.div_ceil(64);
    (0..out_len)
        .map(|i| {
            let offset = out_len - 1 - i;
            let word_off = offset / 64;
            let bit_off = (offset % 64) as u32;
            let mut acc = 0u64;
            for w in 0..word_count {
                let lo = seed_words[word_off + w] >> bit_off;
                let hi = if bit_off == 0 {
                    0
                } else {
                    seed_words[word_off + w + 1] << (64 - bit_off)
                };
                acc ^= (lo | hi) & input_words[w];
            }
            acc.count_ones() & 1 == 1
        })
        .collect()
}

/// Compress a corrected key to its secure length with a fresh published
/// Toeplitz seed drawn from `rng`.
///
/// A zero output length yields an empty key and an empty seed.
pub fn privacy_amplify(
    key: &[bool],
    leaked: usize,
    qber: f64,
    security_param: usize,
    rng: &mut Prng,
) -> Result<(Vec<bool>, ToeplitzSeed), PostprocessError> {
    let n = key.len();
    let m = pa_output_len(n, qber, leaked, security_param)?;
    if m == 0 {
        return Ok((Vec::new(), ToeplitzSeed { bits: Vec::new() }));
    }
    let bits: Vec<bool> = (0..n + m - 1).map(|_| rng.next_bool()).collect();
    let seed = ToeplitzSeed { bits };
    let output = toeplitz_hash(&seed, key, m);
    Ok((output, seed))
}
