//! Seeded pseudo-random numbers with labeled substreams.
//!
//! Every random choice in the pipeline flows from one 64-bit seed. Substreams
//! are derived from `(seed, label)` pairs rather than from stream position, so
//! two modules drawing from differently labeled streams never perturb each
//! other and the derivation order does not matter. The generator is
//! xoshiro256** seeded through splitmix64; it is implemented here rather than
//! pulled in as a dependency so that the byte-level output can never change
//! under us between releases.

/// splitmix64 finalizer: a stateless 64-bit mixing function.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a over raw bytes, used to fold substream labels into seeds and to
/// fingerprint model metadata.
#[inline]
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    fnv1a64(bytes)
}

#[inline]
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// A xoshiro256** stream that remembers its seed for substream derivation.
#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    state: [u64; 4],
}

impl StreamRng {
    /// Create a stream from a 64-bit seed (state expanded via splitmix64).
    pub fn new(seed: u64) -> Self {
        let mut s = seed;
        let mut state = [0u64; 4];
        for slot in &mut state {
            s = mix64(s);
            *slot = s;
        }
        // xoshiro must not start from the all-zero state.
        if state == [0, 0, 0, 0] {
            state[0] = 0x9e37_79b9_7f4a_7c15;
        }
        StreamRng { seed, state }
    }

    /// Seed that created this stream.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent substream for `label`.
    ///
    /// Derivation depends only on `(seed, label)`, never on how many values
    /// have been drawn from `self`.
    pub fn derive(&self, label: &str) -> StreamRng {
        StreamRng::new(mix64(self.seed ^ fnv1a64(label.as_bytes())))
    }

    /// Derive an indexed substream, e.g. one per tree or per sample chunk.
    pub fn derive_indexed(&self, label: &str, index: u64) -> StreamRng {
        let folded = fnv1a64(label.as_bytes()) ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        StreamRng::new(mix64(self.seed ^ folded))
    }

    /// Next raw 64-bit value (xoshiro256**).
    pub fn next_u64(&mut self) -> u64 {
        let result = self.state[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = self.state[1] << 17;
        self.state[2] ^= self.state[0];
        self.state[3] ^= self.state[1];
        self.state[1] ^= self.state[2];
        self.state[0] ^= self.state[3];
        self.state[2] ^= t;
        self.state[3] = self.state[3].rotate_left(45);
        result
    }

    /// Uniform integer in `0..n` without modulo bias (Lemire's method).
    ///
    /// # Panics
    /// Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is meaningless");
        let mut x = self.next_u64();
        let mut m = u128::from(x) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                x = self.next_u64();
                m = u128::from(x) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform index into a slice of length `n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.below(n as u64) as usize
    }

    /// Uniform f64 in `[0, 1)` with 53 random bits.
    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// Sample `k` distinct indices from `0..n` (partial Fisher-Yates),
    /// returned in ascending order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot sample {k} from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}
