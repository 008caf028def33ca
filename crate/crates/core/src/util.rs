//! Deterministic random numbers, small statistics helpers, and content hashing.
//!
//! Everything downstream (splits, k-means restarts, calibration starts, the
//! synthetic corpus) must be byte-reproducible for a given seed, so the crate
//! owns its PRNG instead of pulling one in: xoshiro256++ seeded through
//! splitmix64, with Box-Muller for normal draws.

/// splitmix64 step; used for seeding and for deriving independent sub-seeds.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from a base seed and a purpose tag.
///
/// Distinct tags give statistically independent streams, so consumers never
/// share state and adding a consumer cannot shift another one's draws.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut s = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    splitmix64(&mut s)
}

/// Sub-seed tags, one per consumer of randomness.
pub mod seed_tags {
    pub const SPLIT: u64 = 0x0053_504c_4954;
    pub const KMEANS: u64 = 0x4b4d_4541_4e53;
    pub const CALIBRATION: u64 = 0x0043_414c_4942;
    pub const SYNTH: u64 = 0x0053_594e_5448;
}

/// xoshiro256++ PRNG. Deterministic, portable, and fast enough for everything
/// this crate does with randomness.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    pub fn seeded(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        // All-zero state is the one invalid state for xoshiro.
        if s == [0, 0, 0, 0] {
            s[0] = 1;
        }
        Rng { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). Lemire's multiply-shift; bias is below
    /// 2^-64 and irrelevant for the sizes used here.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal via Box-Muller (no cached spare, so clones of the
    /// generator stay in lockstep).
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        mean + std * z
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}

/// Sum of a slice in a permutation-invariant order (sorted by total order
/// before adding), so corpus-level reductions do not depend on pair order
/// or on how work was sharded across threads.
pub fn stable_sum(values: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().sum()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    stable_sum(values) / values.len() as f64
}

/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    (stable_sum(&sq) / (values.len() - 1) as f64).sqrt()
}

pub fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// FNV-1a over a stream of u64 words; used to fingerprint datasets so a
/// style library records what it was fitted on.
#[derive(Debug, Clone)]
pub struct ContentHash {
    state: u64,
}

impl ContentHash {
    pub fn new() -> Self {
        ContentHash {
            state: 0xcbf2_9ce4_8422_2325,
        }
    }

    pub fn write_u64(&mut self, word: u64) {
        for byte in word.to_le_bytes() {
            self.state ^= byte as u64;
            self.state = self.state.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub fn write_f64(&mut self, value: f64) {
        self.write_u64(value.to_bits());
    }

    pub fn finish(&self) -> u64 {
        self.state
    }

    pub fn finish_hex(&self) -> String {
        format!("{:016x}", self.state)
    }
}

impl Default for ContentHash {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_are_reproducible() {
        let mut a = Rng::seeded(42);
        let mut b = Rng::seeded(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn derived_seeds_differ_by_tag() {
        let a = derive_seed(7, seed_tags::SPLIT);
        let b = derive_seed(7, seed_tags::KMEANS);
        assert_ne!(a, b);
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = Rng::seeded(1);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = Rng::seeded(3);
        let draws: Vec<f64> = (0..50_000).map(|_| rng.normal(2.0, 0.5)).collect();
        assert!((mean(&draws) - 2.0).abs() < 0.01);
        assert!((sample_std(&draws) - 0.5).abs() < 0.01);
    }

    #[test]
    fn below_covers_range() {
        let mut rng = Rng::seeded(9);
        let mut seen = [false; 5];
        for _ in 0..200 {
            seen[rng.below(5)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn stable_sum_is_permutation_invariant() {
        let mut rng = Rng::seeded(11);
        let values: Vec<f64> = (0..500).map(|_| rng.range_f64(-1e6, 1e6)).collect();
        let mut shuffled = values.clone();
        rng.shuffle(&mut shuffled);
        assert_eq!(stable_sum(&values), stable_sum(&shuffled));
    }

    #[test]
    fn two_point_std_matches_closed_form() {
        // std of {a, b} with the n-1 convention is |a-b|/sqrt(2)
        let a = 3.0;
        let b = 8.0;
        let expected = (b - a) / 2.0_f64.sqrt();
        assert!((sample_std(&[a, b]) - expected).abs() < 1e-12);
    }
}
