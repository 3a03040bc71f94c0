//! Seeded, stream-keyed random numbers.
//!
//! Streams are keyed by `(seed, stream_id)`. Distinct stream ids give
//! statistically independent sequences, so parallel fitness evaluation can
//! hand every individual its own stream and stay order-independent.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

/// A deterministic random stream keyed by `(seed, stream_id)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
    cached_gaussian: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RngStream {
            seed,
            stream_id,
            rng,
            cached_gaussian: None,
        }
    }

    /// The stream for generation `generation`, individual `index` under the
    /// run seed. Stable layout so runs reproduce across thread counts.
    pub fn for_individual(seed: u64, generation: u64, index: u64) -> Self {
        RngStream::new(seed, generation.wrapping_mul(1 << 32).wrapping_add(index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform01(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform01() * n as f64) as usize).min(n - 1)
    }

    /// Gaussian draw via Box-Muller. `gaussian(m, 0)` is exactly `m`.
    pub fn gaussian(&mut self, mean: f64, sd: f64) -> f64 {
        debug_assert!(sd >= 0.0);
        let z = match self.cached_gaussian.take() {
            Some(z) => z,
            None => {
                let u1 = loop {
                    let u = self.uniform01();
                    if u > 0.0 {
                        break u;
                    }
                };
                let u2 = self.uniform01();
                let r = (-2.0 * u1.ln()).sqrt();
                let theta = 2.0 * std::f64::consts::PI * u2;
                self.cached_gaussian = Some(r * theta.sin());
                r * theta.cos()
            }
        };
        mean + sd * z
    }

    /// One draw from the named distribution.
    pub fn draw(&mut self, kind: DrawKind) -> f64 {
        match kind {
            DrawKind::Uniform01 => self.uniform01(),
            DrawKind::Gaussian { mean, sd } => self.gaussian(mean, sd),
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Distributions [`RngStream::draw`] can sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DrawKind {
    Uniform01,
    Gaussian { mean: f64, sd: f64 },
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_sequence() {
        let mut a = RngStream::new(42, 3);
        let mut b = RngStream::new(42, 3);
        for _ in 0..100 {
            assert_eq!(a.uniform01().to_bits(), b.uniform01().to_bits());
        }
    }

    #[test]
    fn different_streams_differ() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let same = (0..32).filter(|_| a.uniform01() == b.uniform01()).count();
        assert!(same < 4);
    }

    #[test]
    fn degenerate_gaussian_is_exactly_mean() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(rng.gaussian(0.0, 0.0), 0.0);
        assert_eq!(rng.gaussian(2.5, 0.0), 2.5);
    }

    #[test]
    fn uniform_mean_near_half() {
        let mut rng = RngStream::new(9, 0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| rng.uniform01()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {}", mean);
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = RngStream::new(5, 7);
        for _ in 0..1000 {
            assert!(rng.below(4) < 4);
        }
    }

    /// Chi-square uniformity of one stream XORed against another: draws from
    /// distinct streams should look jointly uniform.
    #[test]
    fn distinct_streams_pass_chi_square_uniformity() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};

        let bins = 16;
        let per_stream = 4000;
        let mut counts = vec![0usize; bins * bins];
        let mut a = RngStream::new(123, 10);
        let mut b = RngStream::new(123, 11);
        for _ in 0..per_stream {
            let i = (a.uniform01() * bins as f64) as usize % bins;
            let j = (b.uniform01() * bins as f64) as usize % bins;
            counts[i * bins + j] += 1;
        }
        let expected = per_stream as f64 / (bins * bins) as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        let dist = ChiSquared::new((bins * bins - 1) as f64).unwrap();
        let p = 1.0 - dist.cdf(chi2);
        assert!(p > 0.001, "chi2 {} p {}", chi2, p);
    }
}
