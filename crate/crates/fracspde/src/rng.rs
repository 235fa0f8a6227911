//! Reproducible parallel randomness: a counter-based ChaCha8 generator with
//! per-(path, step) substreams derived from (seed, path index, step index).
//!
//! Each path owns one ChaCha stream (stream id = path index); each time step
//! jumps the word position to a fixed block, so the draws at a given
//! (path, step) are identical regardless of worker count, execution order,
//! or how many values earlier steps consumed. Coupled simulations that share
//! a seed therefore see bitwise-identical noise.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// 2^32 words of headroom per step; far more than any step ever draws.
const STEP_BLOCK: u128 = 1 << 32;

/// Counter-based generator pinned to one simulation path.
#[derive(Debug, Clone)]
pub struct PathRng {
    inner: ChaCha8Rng,
}

impl PathRng {
    pub fn new(seed: u64, path: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(path);
        inner.set_word_pos(0);
        Self { inner }
    }

    /// Positions the stream at the start of `step`'s block.
    pub fn begin_step(&mut self, step: u64) {
        self.inner.set_word_pos(step as u128 * STEP_BLOCK);
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }
}

impl RngCore for PathRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_are_reproducible_and_independent_of_history() {
        let mut a = PathRng::new(1234, 7);
        a.begin_step(0);
        let burn: Vec<f64> = (0..17).map(|_| a.normal()).collect();
        a.begin_step(5);
        let first: Vec<f64> = (0..4).map(|_| a.normal()).collect();

        // A fresh generator that never touched step 0 sees the same step 5.
        let mut b = PathRng::new(1234, 7);
        b.begin_step(5);
        let second: Vec<f64> = (0..4).map(|_| b.normal()).collect();
        assert_eq!(first, second);
        assert_ne!(burn[..4], first[..]);
    }

    #[test]
    fn paths_and_seeds_decorrelate() {
        let mut a = PathRng::new(1, 0);
        let mut b = PathRng::new(1, 1);
        let mut c = PathRng::new(2, 0);
        a.begin_step(0);
        b.begin_step(0);
        c.begin_step(0);
        let xa = a.normal();
        let xb = b.normal();
        let xc = c.normal();
        assert_ne!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn draws_are_standard_normal() {
        let mut rng = PathRng::new(99, 0);
        rng.begin_step(0);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let z = rng.normal();
            sum += z;
            sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
