//! Seeded, platform-independent random draws.
//!
//! Every random choice in this crate (expression generation, dataset
//! splitting, test-point sampling) flows through [`SeedDraws`], which wraps
//! the ChaCha8 stream cipher from `rand_chacha`. The ChaCha8 keystream for a
//! given seed is fixed by the algorithm itself, so a `(seed, arguments)` pair
//! produces the same results on every platform and toolchain.
//!
//! Bounded draws use rejection sampling on the raw 32-bit stream: the tail of
//! the `u32` range that does not divide evenly by the bound is discarded, so
//! every value in `0..bound` is exactly equally likely.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source of uniformly distributed bounded integers.
///
/// [`SeedDraws`] is the production implementation; [`ScriptedDraws`] replays
/// a fixed sequence when a test needs to pin down the exact draws.
pub trait DrawSource {
    /// A uniform draw from `0..bound`.
    ///
    /// Panics if `bound` is zero.
    fn uniform_below(&mut self, bound: u32) -> u32;

    /// In-place Fisher-Yates shuffle driven by this source: for `i` from
    /// `len-1` down to `1`, swap position `i` with a uniform draw from
    /// `0..=i`.
    fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.uniform_below(i as u32 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// ChaCha8-backed draw stream seeded from a single `u64`.
#[derive(Debug, Clone)]
pub struct SeedDraws {
    rng: ChaCha8Rng,
}

impl SeedDraws {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl DrawSource for SeedDraws {
    fn uniform_below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "uniform_below requires a nonzero bound");
        // Largest multiple of `bound` that fits in 2^32; draws at or above it
        // are rejected rather than folded back in.
        let limit = ((1u64 << 32) / u64::from(bound)) * u64::from(bound);
        loop {
            let v = u64::from(self.rng.next_u32());
            if v < limit {
                return (v % u64::from(bound)) as u32;
            }
        }
    }
}

/// Replays a fixed list of draw results, panicking if a draw is out of range
/// for the requested bound or the script runs dry.
#[derive(Debug, Clone)]
pub struct ScriptedDraws {
    values: Vec<u32>,
    next: usize,
}

impl ScriptedDraws {
    pub fn new(values: Vec<u32>) -> Self {
        Self { values, next: 0 }
    }
}

impl DrawSource for ScriptedDraws {
    fn uniform_below(&mut self, bound: u32) -> u32 {
        let v = *self
            .values
            .get(self.next)
            .expect("scripted draw sequence exhausted");
        self.next += 1;
        assert!(v < bound, "scripted draw {v} out of range for bound {bound}");
        v
    }
}
