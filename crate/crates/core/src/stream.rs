//! Deterministic random streams.
//!
//! Every simulation in the crate draws from a [`RandomStream`] identified by a
//! `(master seed, stream index)` pair. Streams are ChaCha8 keyed by the master
//! seed with the index selecting the ChaCha stream, so replicas driven by
//! distinct indices never share a prefix and the same pair always yields the
//! same draws on every platform.
//!
//! The float and integer conversions are written out here rather than taken
//! from `rand`'s distributions so that golden values stay valid across `rand`
//! upgrades.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

const TWO_POW_MINUS_53: f64 = 1.0 / (1u64 << 53) as f64;

/// Number of low bits of a stream index reserved for the replica number.
/// The bits above select a component of a composite estimator.
pub const REPLICA_BITS: u32 = 40;

#[derive(Clone, Debug)]
pub struct RandomStream {
    master_seed: u64,
    index: u64,
    rng: ChaCha8Rng,
}

/// Builds the stream `(master_seed, index)`.
pub fn derive_stream(master_seed: u64, index: u64) -> RandomStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    RandomStream { master_seed, index, rng }
}

/// Stream index for replica `replica` of estimator component `component`.
pub fn component_index(component: u64, replica: u64) -> u64 {
    debug_assert!(replica < 1 << REPLICA_BITS);
    (component << REPLICA_BITS) | replica
}

impl RandomStream {
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * TWO_POW_MINUS_53
    }

    /// Exponential holding time with the given rate (inverse transform, one draw).
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -(1.0 - self.uniform()).ln() / rate
    }

    /// Index uniform on `0..n` by widening multiplication. The bias is below
    /// `n / 2^64`, far under anything a Monte Carlo test can resolve.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.rng.next_u64() as u128 * n as u128) >> 64) as usize
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Poisson count with the given mean.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        debug_assert!(mean > 0.0 && mean.is_finite());
        let dist = Poisson::new(mean).expect("positive finite Poisson mean");
        dist.sample(&mut self.rng) as u64
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
