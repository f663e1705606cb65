//! Seeded pseudo-random numbers.
//!
//! Every random decision in the crate (weight init, shuffles, batch sampling,
//! noise) is drawn from [`SplitMix64`], so a run is fully determined by its
//! seed. The generator and all derived draws are specified here precisely
//! enough to be re-implemented elsewhere:
//!
//! * state update: `state += 0x9E3779B97F4A7C15`, output is the splitmix64
//!   finalizer of the new state;
//! * `next_f64`: top 53 bits of the output times 2^-53, in `[0, 1)`;
//! * `below(n)`: Lemire's widening multiply with rejection, unbiased;
//! * `shuffle`: Fisher–Yates from the last element down, swapping `i` with
//!   `below(i + 1)`.

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed and a path of tags.
///
/// Used to give every (dataset, shuffle, fold, oversampler) cell of a
/// benchmark its own stream without any shared state.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(parent ^ GOLDEN_GAMMA), |acc, &tag| {
        mix64(acc.wrapping_add(GOLDEN_GAMMA).wrapping_add(mix64(tag)))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let wide = (self.next_u64() as u128) * (n as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as usize;
            }
        }
    }

    /// Standard normal via Box–Muller (one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// A fresh generator seeded from this one's next output.
    pub fn fork(&mut self) -> Self {
        Self::new(self.next_u64())
    }
}
