//! Seeded random source shared by the generator and the learners.
//!
//! The stream is xoshiro256** whose 256-bit state is filled with four
//! consecutive splitmix64 outputs of the 64-bit seed. Every derived quantity
//! (floats, bounded integers, shuffles) is defined here in terms of raw
//! `next_u64` draws so that another implementation can replay a run exactly:
//!
//! * `unit_f64`: `(next_u64() >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * `below(n)`: `(next_u64() as u128 * n as u128) >> 64` (multiply-shift,
//!   no rejection step).
//! * `shuffle`: Fisher-Yates from the last index down, `j = below(i + 1)`.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

/// Golden-ratio increment used to derive independent sub-seeds.
const SUBSEED_STEP: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: Xoshiro256StarStar,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// A generator for a named sub-stream. `salt` distinguishes consumers of
    /// the same top-level seed (generator phases, per-model training, ...).
    pub fn derived(seed: u64, salt: u64) -> Self {
        Self::new(seed ^ salt.wrapping_add(1).wrapping_mul(SUBSEED_STEP))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. Returns 0 for `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn between(&mut self, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + self.below(span) as i64
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit_f64() < p
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> Option<&'a T> {
        if items.is_empty() {
            None
        } else {
            Some(&items[self.below(items.len() as u64) as usize])
        }
    }
}
