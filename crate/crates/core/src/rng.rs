//! Seeded, reproducible random streams.
//!
//! An [`Rng`] is identified by `(root_seed, stream_id)`. The underlying
//! generator is ChaCha8 keyed by the root seed with the stream id selecting
//! the ChaCha stream, so the output is identical on every platform. Stream ids
//! for parallel work are derived with [`stream_id`] from a purpose label, a
//! trial index and a block index, which makes Monte-Carlo runs independent of
//! thread scheduling.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Stable 64-bit stream id for `(label, index, block)`.
pub fn stream_id(label: &str, index: u64, block: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    hasher.update(index.to_le_bytes());
    hasher.update(block.to_le_bytes());
    let digest = hasher.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

/// Stable 64-bit digest of a vector's bit patterns. Mixing it into a stream
/// label keeps sketches of different inputs from sharing noise when they
/// are made with the same seed.
pub fn content_id(values: &[f64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update((values.len() as u64).to_le_bytes());
    for v in values {
        hasher.update(v.to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(first)
}

#[derive(Clone, Debug)]
pub struct Rng {
    root_seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
    // second output of the last polar-method draw
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(root_seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(root_seed);
        inner.set_stream(stream_id);
        Self {
            root_seed,
            stream_id,
            inner,
            spare_normal: None,
        }
    }

    /// Stream for `(label, index, block)` under `root_seed`.
    pub fn derive(root_seed: u64, label: &str, index: u64, block: u64) -> Self {
        Self::new(root_seed, stream_id(label, index, block))
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_NEG_53
    }

    /// Uniform in the open interval `(0, 1)`; never returns 0 or 1.
    pub fn open_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_NEG_53
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        // Lemire's multiply-shift with rejection.
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// `+1.0` or `-1.0` with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Bernoulli draw with success probability `p` (clamped to `[0, 1]`).
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            self.uniform() < p
        }
    }

    pub(crate) fn take_spare_normal(&mut self) -> Option<f64> {
        self.spare_normal.take()
    }

    pub(crate) fn set_spare_normal(&mut self, z: f64) {
        self.spare_normal = Some(z);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_is_bit_identical() {
        let mut a = Rng::new(42, 7);
        let mut b = Rng::new(42, 7);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = Rng::new(42, 7);
        let mut b = Rng::new(42, 8);
        let same = (0..64).filter(|_| a.next_u64() == b.next_u64()).count();
        assert_eq!(same, 0);
    }

    #[test]
    fn stream_ids_are_stable_and_label_sensitive() {
        assert_eq!(stream_id("trial", 3, 0), stream_id("trial", 3, 0));
        assert_ne!(stream_id("trial", 3, 0), stream_id("trial", 4, 0));
        assert_ne!(stream_id("trial", 3, 0), stream_id("trial", 3, 1));
        assert_ne!(stream_id("a", 0, 0), stream_id("b", 0, 0));
    }

    #[test]
    fn known_first_outputs() {
        // Frozen so that a dependency upgrade that changes the stream is noticed.
        let mut rng = Rng::new(1, 0);
        assert_eq!(rng.next_u64(), 7424550030962593201);
        assert_eq!(rng.next_u64(), 1482817706323250795);
        assert_eq!(stream_id("trial", 3, 0), 18089987505802836560);
    }

    #[test]
    fn uniform_ranges() {
        let mut rng = Rng::new(3, 1);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
            let v = rng.open_uniform();
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn below_is_roughly_uniform() {
        let mut rng = Rng::new(5, 5);
        let mut counts = [0usize; 3];
        for _ in 0..30_000 {
            counts[rng.below(3) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }
}
