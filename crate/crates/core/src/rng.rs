//! Counter-based deterministic random streams.
//!
//! Every random quantity in the simulator is a pure function of a small
//! integer key: a 64-bit seed, a domain tag, and the indices that identify
//! the draw (trial number, matrix row/column, entity id, ...).  The key is
//! pushed through a SplitMix64-style finalizer chain, so any draw can be
//! produced in isolation, in any order, on any thread, and still come out
//! bit-identical to a sequential run.  There is no hidden generator state
//! and no wall-clock anywhere.

use libm::{cos, log, sin, sqrt};

/// Domain tags keep unrelated consumers of the same seed statistically
/// independent (node placement must not correlate with channel fading).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    PnPlacement = 0x01,
    AntennaOffset = 0x02,
    UtPlacement = 0x03,
    Channel = 0x04,
    RangeNoise = 0x05,
    Test = 0xFF,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: a cheap, well-mixed bijection on `u64`.
#[inline]
pub const fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^= x >> 31;
    x
}

/// A keyed position in the deterministic stream.  Cheap to copy; `fold` in
/// as many indices as needed, then ask for values at explicit counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64, domain: StreamDomain) -> Self {
        StreamKey(mix64(seed.wrapping_add(GOLDEN_GAMMA)))
            .fold(domain as u64)
    }

    /// Absorb one index (trial, row, column, id, ...) into the key.
    #[inline]
    pub const fn fold(self, index: u64) -> Self {
        StreamKey(mix64(self.0.wrapping_add(GOLDEN_GAMMA).wrapping_add(index)))
    }

    /// Raw 64-bit output for the given counter.
    #[inline]
    pub const fn value(self, counter: u64) -> u64 {
        mix64(self.0 ^ counter.wrapping_mul(GOLDEN_GAMMA).wrapping_add(GOLDEN_GAMMA))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(self, counter: u64) -> f64 {
        ((self.value(counter) >> 11) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]`; safe as a logarithm argument.
    #[inline]
    pub fn uniform_open(self, counter: u64) -> f64 {
        (((self.value(counter) >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard real Gaussian (mean 0, variance 1) via Box-Muller.
    pub fn gaussian(self, counter: u64) -> f64 {
        let u1 = self.uniform_open(2 * counter);
        let u2 = self.uniform(2 * counter + 1);
        sqrt(-2.0 * log(u1)) * cos(core::f64::consts::TAU * u2)
    }

    /// Circularly-symmetric complex Gaussian with unit total variance
    /// (`E[re^2 + im^2] = 1`), returned as `(re, im)`.
    pub fn complex_gaussian(self) -> (f64, f64) {
        let u1 = self.uniform_open(0);
        let u2 = self.uniform(1);
        let r = sqrt(-log(u1));
        let theta = core::f64::consts::TAU * u2;
        (r * cos(theta), r * sin(theta))
    }
}
