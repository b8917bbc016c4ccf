//! Seeded randomness for a single run.
//!
//! Every draw in the simulator goes through [`RandomStream`]. The generator
//! is ChaCha8 (`rand_chacha` 0.9.0) and Gaussian draws use the ziggurat
//! sampler from `rand_distr` 0.5.1; both crates are pinned exactly so a seed
//! maps to the same trajectory on every build. [`GENERATOR_ID`] is written
//! into output metadata.
//!
//! Replicate substreams use ChaCha's 64-bit stream counter: the key comes
//! from `seed_from_u64(master_seed)` and the stream id is the replicate
//! index. Substreams need no coordination, so replicates can run in any
//! order on any thread.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const GENERATOR_ID: &str =
    "chacha8(rand_chacha=0.9.0,stream=replicate)+ziggurat(rand_distr=0.5.1)";

#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
    seed: u64,
    stream: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        Self::substream(seed, 0)
    }

    /// Stream `index` of the family keyed by `master_seed`.
    pub fn substream(master_seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(index);
        Self {
            rng,
            seed: master_seed,
            stream: index,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Raw `[0, 1)` draw with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform on `[lo, hi)`. A degenerate range returns `lo` without
    /// advancing the stream.
    pub fn uniform<F: Scalar>(&mut self, lo: F, hi: F) -> Result<F> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "uniform range [{lo}, {hi}) is empty or not finite"
            )));
        }
        if lo == hi {
            return Ok(lo);
        }
        let (a, b) = (lo.to_f64_lossy(), hi.to_f64_lossy());
        loop {
            let v = F::from_f64_lossy(a + (b - a) * self.unit());
            // rounding (or narrowing to f32) can land exactly on `hi`
            if v < hi {
                return Ok(v.max(lo));
            }
        }
    }

    /// Normal(mean, sd). `sd == 0` returns `mean` exactly and consumes nothing,
    /// which is what makes noise-free agents replay identically to the
    /// deterministic condition.
    pub fn gaussian<F: Scalar>(&mut self, mean: F, sd: F) -> Result<F> {
        if sd.is_nan() || sd < F::zero() || sd.is_infinite() {
            return Err(Error::InvalidArgument(format!(
                "standard deviation must be finite and >= 0, got {sd}"
            )));
        }
        if sd == F::zero() {
            return Ok(mean);
        }
        let z: f64 = self.rng.sample(StandardNormal);
        Ok(F::from_f64_lossy(
            mean.to_f64_lossy() + sd.to_f64_lossy() * z,
        ))
    }

    /// True with probability `p`; `p <= 0` never and `p >= 1` always. Always
    /// consumes one draw.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Uniform integer in `0..=max`.
    pub fn index_upto(&mut self, max: usize) -> usize {
        self.rng.random_range(0..=max as u64) as usize
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index_upto(i);
            items.swap(i, j);
        }
    }
}
