//! Empirical distributions, Kolmogorov-Smirnov distances, and the
//! deterministic chunked driver used by every Monte Carlo loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Point estimate with standard error and sample size.
#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

impl Estimate {
    /// Binomial proportion k/n with its standard error.
    pub fn proportion(k: u64, n: u64) -> Estimate {
        let p = k as f64 / n as f64;
        Estimate {
            mean: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// Sample mean and standard error of the mean from sum and sum of squares.
    pub fn from_moments(sum: f64, sum_sq: f64, n: u64) -> Estimate {
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sum_sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
        Estimate {
            mean,
            se: (var / nf).sqrt(),
            n,
        }
    }

    /// Combined standard error of a difference of independent estimates.
    pub fn combined_se(&self, other: &Estimate) -> f64 {
        (self.se * self.se + other.se * other.se).sqrt()
    }
}

/// Sorted sample supporting CDF evaluation and KS distances.
#[derive(Clone, Debug)]
pub struct EmpiricalDistribution {
    samples: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut samples: Vec<f64>) -> EmpiricalDistribution {
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        EmpiricalDistribution { samples }
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Right-continuous empirical CDF: fraction of samples <= x.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.samples.partition_point(|&s| s <= x);
        k as f64 / self.samples.len() as f64
    }

    /// Fraction of samples >= x (survival function, left-continuous).
    pub fn survival(&self, x: f64) -> f64 {
        let k = self.samples.partition_point(|&s| s < x);
        (self.samples.len() - k) as f64 / self.samples.len() as f64
    }

    /// One-sample KS distance against a CDF given as a function.
    pub fn ks_against(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.samples.len() as f64;
        let mut sup: f64 = 0.0;
        for (i, &x) in self.samples.iter().enumerate() {
            let f = cdf(x);
            sup = sup.max((f - i as f64 / n).abs());
            sup = sup.max((f - (i + 1) as f64 / n).abs());
        }
        sup
    }

    /// Two-sample KS distance.
    pub fn ks_two_sample(&self, other: &EmpiricalDistribution) -> f64 {
        let (a, b) = (&self.samples, &other.samples);
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let (mut i, mut j) = (0usize, 0usize);
        let mut sup: f64 = 0.0;
        while i < a.len() && j < b.len() {
            let x = a[i].min(b[j]);
            while i < a.len() && a[i] <= x {
                i += 1;
            }
            while j < b.len() && b[j] <= x {
                j += 1;
            }
            sup = sup.max((i as f64 / na - j as f64 / nb).abs());
        }
        sup
    }
}

/// Fixed chunk size recorded in every run manifest; changing it would
/// change the RNG streams, so it is a constant of the artifact.
pub const CHUNK_SIZE: u64 = 1024;

/// RNG for chunk `idx` of the run seeded by `seed`. Streams are independent
/// because the full 256-bit ChaCha key space is split between the two words.
pub fn chunk_rng(seed: u64, idx: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&idx.to_le_bytes());
    key[16] = 0x5f;
    ChaCha8Rng::from_seed(key)
}

/// Runs `n` independent replications split into fixed-size chunks, each
/// chunk on its own RNG stream, and folds the per-chunk accumulators in
/// chunk order. Deterministic for a fixed seed regardless of thread count.
pub fn run_chunked<A: Send>(
    n: u64,
    seed: u64,
    chunk_acc: impl Fn(&mut ChaCha8Rng, u64) -> A + Sync,
) -> Vec<A> {
    let n_chunks = n.div_ceil(CHUNK_SIZE);
    (0..n_chunks)
        .into_par_iter()
        .map(|idx| {
            let mut rng = chunk_rng(seed, idx);
            let count = CHUNK_SIZE.min(n - idx * CHUNK_SIZE);
            chunk_acc(&mut rng, count)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_and_survival() {
        let e = EmpiricalDistribution::new(vec![3.0, 1.0, 2.0, 2.0]);
        assert_eq!(e.cdf(0.5), 0.0);
        assert_eq!(e.cdf(1.0), 0.25);
        assert_eq!(e.cdf(2.0), 0.75);
        assert_eq!(e.cdf(10.0), 1.0);
        assert_eq!(e.survival(0.5), 1.0);
        assert_eq!(e.survival(2.0), 0.75);
        assert_eq!(e.survival(3.1), 0.0);
    }

    #[test]
    fn ks_identical_is_zero() {
        let e1 = EmpiricalDistribution::new(vec![1.0, 2.0, 3.0]);
        let e2 = EmpiricalDistribution::new(vec![3.0, 1.0, 2.0]);
        assert_eq!(e1.ks_two_sample(&e2), 0.0);
    }

    #[test]
    fn ks_disjoint_is_one() {
        let e1 = EmpiricalDistribution::new(vec![1.0, 2.0]);
        let e2 = EmpiricalDistribution::new(vec![5.0, 6.0]);
        assert_eq!(e1.ks_two_sample(&e2), 1.0);
    }

    #[test]
    fn ks_one_sample_uniform() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let e = EmpiricalDistribution::new(xs);
        assert!(e.ks_against(|x| x.clamp(0.0, 1.0)) < 0.001);
    }

    #[test]
    fn chunked_deterministic() {
        use rand::Rng;
        let f = |rng: &mut ChaCha8Rng, count: u64| -> f64 {
            (0..count).map(|_| rng.gen::<f64>()).sum()
        };
        let a: f64 = run_chunked(10_000, 7, f).iter().sum();
        let b: f64 = run_chunked(10_000, 7, f).iter().sum();
        assert_eq!(a, b);
        let c: f64 = run_chunked(10_000, 8, f).iter().sum();
        assert_ne!(a, c);
    }

    #[test]
    fn proportion_se() {
        let e = Estimate::proportion(250, 1000);
        assert!((e.mean - 0.25).abs() < 1e-15);
        assert!((e.se - (0.25 * 0.75 / 1000.0f64).sqrt()).abs() < 1e-15);
    }
}
