//! Seeded random streams.
//!
//! Every stream is a ChaCha20 generator (`rand_chacha::ChaCha20Rng`) seeded
//! through `SeedableRng::seed_from_u64`. ChaCha20 output is specified
//! bit-for-bit and independent of platform endianness or word size, so a
//! given seed produces the same sequence everywhere.
//!
//! Independent sub-streams are derived with [`Rng::fork`], which mixes the
//! parent seed with a textual tag (FNV-1a) and passes the result through a
//! SplitMix64 finalizer. Forks never consume state from the parent.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha20Rng,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream identified by `tag`, derived from this stream's seed.
    pub fn fork(&self, tag: &str) -> Rng {
        Rng::new(splitmix64(self.seed ^ fnv1a(tag.as_bytes())))
    }

    /// Independent stream identified by `(tag, index)`; used for per-trial streams.
    pub fn fork_indexed(&self, tag: &str, index: u64) -> Rng {
        let base = splitmix64(self.seed ^ fnv1a(tag.as_bytes()));
        Rng::new(splitmix64(base ^ splitmix64(index.wrapping_add(1))))
    }

    pub fn gaussian(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64], std_dev: f64) {
        for v in out.iter_mut() {
            *v = std_dev * self.gaussian();
        }
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Rademacher variable, ±1 with equal probability.
    pub fn sign(&mut self) -> f64 {
        if self.inner.random::<bool>() {
            1.0
        } else {
            -1.0
        }
    }

    /// Uniformly random permutation of `0..n`.
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut self.inner);
        p
    }
}
