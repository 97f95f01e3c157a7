//! Seeded randomness with a fully specified draw discipline.
//!
//! ChaCha12 keyed through `seed_from_u64`, integers by rejection sampling,
//! floats from the top 53 bits, normals by Box-Muller. Every consumer draws
//! through these helpers, so a seed pins the exact byte stream on every
//! platform.

use rand_chacha::ChaCha12Rng;
use rand_core::{Rng, SeedableRng};

#[derive(Debug, Clone)]
pub struct PortableRng(ChaCha12Rng);

impl PortableRng {
    pub fn seed_from_u64(seed: u64) -> Self {
        PortableRng(ChaCha12Rng::seed_from_u64(seed))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform integer in [0, bound); `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below() needs a positive bound");
        let limit = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.0.next_u64();
            if v < limit {
                return v % bound;
            }
        }
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn unit_f64(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit_f64()
    }

    /// Standard normal draw (Box-Muller; two uniforms per call).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.unit_f64();
        let u2 = self.unit_f64();
        // 1 - u1 lies in (0, 1], so the log never sees zero
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        r * (std::f64::consts::TAU * u2).cos()
    }

    /// Moves a uniformly random m-subset into `items[..m]`, in random order
    /// (partial Fisher-Yates).
    pub fn partial_shuffle<T>(&mut self, items: &mut [T], m: usize) {
        let n = items.len();
        assert!(m <= n, "cannot select {m} of {n} items");
        for i in 0..m {
            let j = i + self.below((n - i) as u64) as usize;
            items.swap(i, j);
        }
    }
}
