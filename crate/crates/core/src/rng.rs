//! Deterministic pseudo-random streams for simulation runs.
//!
//! Every random choice in a run is drawn from a [`Prng`] so that a session
//! seed fully determines the transcript. The generator is SplitMix64: a
//! single 64-bit state advanced by a fixed odd constant and finalized with
//! two xor-multiply rounds. The algorithm is small enough to re-implement
//! bit-exactly in any language, which keeps seeded transcripts comparable
//! across implementations.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seeded SplitMix64 stream.
///
/// The stream position counts how many 64-bit words have been drawn, so a
/// generator's state is always reproducible as `(seed, position)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prng {
    seed: u64,
    state: u64,
    position: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng {
            seed,
            state: seed,
            position: 0,
        }
    }

    /// Seed this stream was created with.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 64-bit words drawn so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        self.position += 1;
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` built from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn next_bool(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }

    /// Uniform integer in `[0, n)` via the widening-multiply reduction.
    ///
    /// The reduction bias is below 2^-64 per draw, far under anything the
    /// statistical tests can resolve, and it is deterministic, which is what
    /// the transcripts require.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is meaningless");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Child stream derived from the next word of this one.
    pub fn split(&mut self) -> Prng {
        Prng::new(self.next_u64())
    }

    /// `k` distinct indices from `0..n`, returned in ascending order.
    ///
    /// Partial Fisher-Yates over the index array; the ascending sort makes
    /// the selection independent of draw order downstream.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} of {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below((n - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut chosen = pool[..k].to_vec();
        chosen.sort_unstable();
        chosen
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        let n = items.len();
        for i in (1..n).rev() {
            let j = self.below((i + 1) as u64) as usize;
            items.swap(i, j);
        }
    }
}
