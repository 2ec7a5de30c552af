//! Seeded random streams.
//!
//! Every randomized operation takes a [`Seed`] and builds its own ChaCha8
//! stream from it. Pipelines derive one stream per `(seed, sample id, step)`
//! by hashing the triple, so a sample's output never depends on which other
//! samples were processed, or in what order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// Stream for step `step` of sample `sample_id` under the run seed `seed`.
///
/// The id is length-prefixed so `("ab", 1)` and `("a", ...)` style
/// collisions cannot occur.
pub fn derive_stream(seed: Seed, sample_id: &str, step: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"trapforge/stream/v1");
    hasher.update(seed.0.to_le_bytes());
    hasher.update((sample_id.len() as u64).to_le_bytes());
    hasher.update(sample_id.as_bytes());
    hasher.update(step.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[lo, hi]`; returns `lo` when the range is empty.
pub fn uniform_in<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    lo + (hi - lo) * unit_f64(rng)
}

/// Uniform integer in `[0, n)`. `n` must be non-zero.
pub fn index_below<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    debug_assert!(n > 0);
    // Lemire's multiply-shift with rejection; unbiased for every n.
    let n = n as u64;
    let threshold = n.wrapping_neg() % n;
    loop {
        let x = rng.next_u64();
        let m = (x as u128) * (n as u128);
        if (m as u64) >= threshold {
            return (m >> 64) as usize;
        }
    }
}

/// Standard normal deviates via the Box-Muller transform.
///
/// Each pair of uniforms yields two deviates; the second is cached and
/// returned by the next call.
#[derive(Debug)]
pub struct BoxMuller<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> BoxMuller<R> {
    pub fn new(rng: R) -> Self {
        BoxMuller { rng, spare: None }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps ln finite.
        let u1 = 1.0 - unit_f64(&mut self.rng);
        let u2 = unit_f64(&mut self.rng);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}
