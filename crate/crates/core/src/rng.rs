//! Keyed random substreams.
//!
//! Every random quantity in a simulation is drawn from a substream addressed
//! by a [`StreamKey`] `(seed, method, replication, block, path)`. Two runs that
//! address the same key see the same numbers, independent of evaluation order
//! or thread count. That is what makes early stopping and parallel
//! replication bit-reproducible.
//!
//! Variate consumption:
//! - uniforms: one 64-bit output each;
//! - exponentials: one uniform each (inverse CDF);
//! - normals: Box-Muller pairs, so `k` normals consume `2 * ceil(k / 2)`
//!   uniforms. An odd trailing normal leaves its partner cached in the stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KEY_SALT: u64 = 0x5851_f42d_4c95_7f2d;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a 64-bit value into a seed; used to derive per-cell seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    splitmix64(splitmix64(seed ^ KEY_SALT) ^ salt)
}

/// Address of one independent random substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub method: u8,
    pub replication: u64,
    pub block: i64,
    pub path: u64,
}

impl StreamKey {
    /// Path slot reserved for the Poisson point stream of a block.
    pub const POINTS: u64 = u64::MAX;
    /// Path slot reserved for mark draws kept apart from the points.
    pub const MARKS: u64 = u64::MAX - 1;
    /// Replication slot reserved for pilot runs.
    pub const PILOT: u64 = u64::MAX;

    pub fn new(seed: u64, method: u8, replication: u64) -> Self {
        Self {
            seed,
            method,
            replication,
            block: 0,
            path: 0,
        }
    }

    pub fn with_block(self, block: i64) -> Self {
        Self { block, ..self }
    }

    pub fn with_path(self, path: u64) -> Self {
        Self { path, ..self }
    }

    pub fn points(self) -> Self {
        self.with_path(Self::POINTS)
    }

    pub fn stream(&self) -> RandomStream {
        RandomStream::from_key(self)
    }
}

/// A deterministic stream of uniform, exponential and normal variates.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RandomStream {
    pub fn from_key(key: &StreamKey) -> Self {
        let mut h = splitmix64(key.seed ^ KEY_SALT);
        let mut seed = [0u8; 32];
        let parts = [
            key.method as u64,
            key.replication,
            key.block as u64,
            key.path,
        ];
        for (chunk, part) in seed.chunks_exact_mut(8).zip(parts) {
            h = splitmix64(h ^ part);
            chunk.copy_from_slice(&h.to_le_bytes());
        }
        Self {
            rng: ChaCha8Rng::from_seed(seed),
            spare_normal: None,
        }
    }

    /// Stream for a bare seed, for ad-hoc use outside the keyed layout.
    pub fn from_seed(seed: u64) -> Self {
        Self::from_key(&StreamKey::new(seed, u8::MAX, 0))
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        let bits = self.rng.random::<u64>() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Exponential with the given rate, by inversion.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform_open().ln() / rate
    }

    /// Uniform index in `0..n`; consumes exactly one uniform.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform_open() * n as f64) as usize).min(n - 1)
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform_open();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    pub fn fill_normals(&mut self, out: &mut [f64]) {
        for z in out {
            *z = self.standard_normal();
        }
    }
}
