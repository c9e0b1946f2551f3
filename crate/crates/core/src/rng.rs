//! Seeded pseudo-randomness for sampling and the toy generators.
//!
//! Everything here is built on SplitMix64 so that a seed reproduces the
//! same stream on every platform. Subset selection stays on the integer
//! path (64x64->128 multiply-shift for bounded draws); floating-point
//! draws are only used by the synthetic generators.
//!
//! Stream derivation: `derive_seed(seed, index)` gives each slice, sweep
//! cell, or repetition its own independent stream, so adding cells to a
//! plan never perturbs the draws of existing ones.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer (Stafford mix 13).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed for sub-task `index` of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed).wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// A SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform integer in `[0, bound)` via the multiply-shift reduction.
    ///
    /// The modulo bias is O(bound / 2^64), negligible for any population
    /// this toolkit slices.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in (0, 1]; safe to feed to a logarithm.
    pub fn next_f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform without replacement: `count` indices out of `0..n`.
    ///
    /// Partial Fisher-Yates over a scratch index table; the first `count`
    /// entries of the permutation are returned in draw order. Given the
    /// same generator state, a larger `count` extends the smaller draw,
    /// so nested subset sizes produce nested subsets.
    pub fn sample_indices(&mut self, n: usize, count: usize) -> Vec<usize> {
        debug_assert!(count <= n);
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..count {
            let j = i + self.next_below((n - i) as u64) as usize;
            idx.swap(i, j);
        }
        idx.truncate(count);
        idx
    }
}
