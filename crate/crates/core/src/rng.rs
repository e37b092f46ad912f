//! Seedable random streams.
//!
//! Every stream wraps a `Xoshiro256PlusPlus` generator. A stream is identified
//! by its lineage: the master seed plus the path of substream indices used to
//! reach it. The generator key for a lineage is computed with SplitMix64:
//!
//! ```text
//! key(root)        = splitmix64(seed)
//! key(parent / i)  = splitmix64(key(parent).rotate_left(23) ^ splitmix64(i ^ 0xD1B5_4A32_D192_ED03))
//! ```
//!
//! and the generator is `Xoshiro256PlusPlus::seed_from_u64(key)`, which expands
//! the key with SplitMix64 as well. Children therefore depend only on the
//! lineage, never on how many numbers the parent has produced, so work can be
//! split across threads without changing any output. All arithmetic is integer
//! or exactly specified floating point, so sequences are identical on every
//! platform.

use rand::{RngCore, SeedableRng};
use rand_distr::{Distribution, Gamma, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

const SUBSTREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

/// One step of the SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    inner: Xoshiro256PlusPlus,
    key: u64,
    seed: u64,
    path: Vec<u64>,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        let key = splitmix64(seed);
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(key),
            key,
            seed,
            path: Vec::new(),
        }
    }

    /// Deterministic child stream. Independent of the parent's position.
    pub fn substream(&self, index: u64) -> Self {
        let key = splitmix64(self.key.rotate_left(23) ^ splitmix64(index ^ SUBSTREAM_SALT));
        let mut path = self.path.clone();
        path.push(index);
        Self {
            inner: Xoshiro256PlusPlus::seed_from_u64(key),
            key,
            seed: self.seed,
            path,
        }
    }

    /// Master seed and substream path.
    pub fn lineage(&self) -> (u64, &[u64]) {
        (self.seed, &self.path)
    }

    /// Uniform deviate in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform deviate in the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's widening multiply with rejection).
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.inner.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }

    /// Gamma deviate with the given shape and scale (Marsaglia–Tsang).
    pub fn gamma(&mut self, shape: f64, scale: f64) -> f64 {
        Gamma::new(shape, scale)
            .expect("gamma parameters must be positive and finite")
            .sample(self)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
