//! Timing of Hankel tensor-vector products: dense brute force (including
//! materialization of the tensor) against the FFT-based algorithm.

use std::hint::black_box;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hankel::{HankelPlan, HankelTensor};
use crate::tensor::{build_hankel_dense, dense_cap, relative_error, tvp_contract};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Naive,
    Fast,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Fast => "fast",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub order: usize,
    /// Timed repetitions; one extra warm-up run is discarded.
    pub reps: usize,
    /// Products per repetition.
    pub products: usize,
    pub seed: u64,
    pub include_naive: bool,
    /// Pad the FFT length of the fast path up to a power of two.
    pub pad_pow2: bool,
}

impl BenchConfig {
    pub fn new(sizes: Vec<usize>, order: usize) -> Self {
        Self { sizes, order, reps: 5, products: 100, seed: 0, include_naive: true, pad_pow2: false }
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
        }
        if self.products == 0 {
            return Err(Error::InvalidParameter("products per repetition must be at least 1".into()));
        }
        if self.order < 2 {
            return Err(Error::InvalidParameter(format!("order must be at least 2, got {}", self.order)));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::InvalidParameter("sizes must be non-empty and positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub order: usize,
    pub dim: usize,
    /// Median over repetitions of (batch time / products). Zero when skipped.
    pub seconds_per_product: f64,
    pub repetitions: usize,
    pub products: usize,
    /// Naive run not attempted because the dense tensor exceeds the size cap.
    pub skipped: bool,
    /// Relative difference between the two algorithms' results (naive rows only).
    pub agreement: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// Runs `batch` `reps + 1` times and returns the median seconds per product
/// of all but the first run.
fn time_batches(reps: usize, products: usize, mut batch: impl FnMut() -> Result<()>) -> Result<f64> {
    let mut times = Vec::with_capacity(reps);
    for rep in 0..=reps {
        let start = Instant::now();
        batch()?;
        let elapsed = start.elapsed().as_secs_f64();
        if rep > 0 {
            times.push(elapsed / products as f64);
        }
    }
    // guard against clocks too coarse for tiny sizes
    Ok(median(times).max(f64::MIN_POSITIVE))
}

/// Times `H x^{m-1}` for square Hankel tensors of every size in `cfg.sizes`.
/// Both algorithms see the same random `h` and vectors. Runs sequentially.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let m = cfg.order;
    let mut records = Vec::new();
    for &n in &cfg.sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let h = HankelTensor::square(random_vec(&mut rng, m * (n - 1) + 1), m)?;
        let xs: Vec<Vec<Complex64>> = (1..m).map(|_| random_vec(&mut rng, n)).collect();
        let refs: Vec<&[Complex64]> = xs.iter().map(Vec::as_slice).collect();

        let len = if cfg.pad_pow2 { h.degree_of_freedom().next_power_of_two() } else { h.degree_of_freedom() };
        let fast_once = || -> Result<Vec<Complex64>> { HankelPlan::with_length(&h, len)?.tvp_partial(&refs) };
        let fast_result = fast_once()?;
        let fast = time_batches(cfg.reps, cfg.products, || {
            for _ in 0..cfg.products {
                black_box(fast_once()?);
            }
            Ok(())
        })?;
        records.push(BenchRecord {
            algorithm: Algorithm::Fast,
            order: m,
            dim: n,
            seconds_per_product: fast,
            repetitions: cfg.reps,
            products: cfg.products,
            skipped: false,
            agreement: None,
        });

        if !cfg.include_naive {
            continue;
        }
        let entries = (n as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        let mut record = BenchRecord {
            algorithm: Algorithm::Naive,
            order: m,
            dim: n,
            seconds_per_product: 0.0,
            repetitions: cfg.reps,
            products: cfg.products,
            skipped: true,
            agreement: None,
        };
        if entries <= dense_cap() as u128 {
            let shape = vec![n; m];
            let naive_result = tvp_contract(&build_hankel_dense(h.generating_vector(), &shape)?, &refs)?;
            record.agreement = Some(relative_error(&naive_result, &fast_result));
            record.seconds_per_product = time_batches(cfg.reps, cfg.products, || {
                let dense = build_hankel_dense(h.generating_vector(), &shape)?;
                for _ in 0..cfg.products {
                    black_box(tvp_contract(&dense, &refs)?);
                }
                Ok(())
            })?;
            record.skipped = false;
        }
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_agrees() {
        let mut cfg = BenchConfig::new(vec![16], 3);
        cfg.reps = 3;
        cfg.products = 5;
        let recs = run_bench(&cfg).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| r.seconds_per_product > 0.0 && !r.skipped));
        assert!(recs[1].agreement.unwrap() <= 1e-10);
    }

    #[test]
    fn zero_reps_rejected() {
        let mut cfg = BenchConfig::new(vec![8], 3);
        cfg.reps = 0;
        assert!(matches!(run_bench(&cfg), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn oversized_naive_is_skipped() {
        let mut cfg = BenchConfig::new(vec![300], 3);
        cfg.reps = 1;
        cfg.products = 1;
        let recs = run_bench(&cfg).unwrap();
        assert!(recs[1].skipped);
        assert!(!recs[0].skipped);
    }

    #[test]
    fn padded_fast_path() {
        let mut cfg = BenchConfig::new(vec![10], 3);
        cfg.reps = 1;
        cfg.products = 2;
        cfg.pad_pow2 = true;
        let recs = run_bench(&cfg).unwrap();
        assert!(recs[1].agreement.unwrap() <= 1e-10);
    }
}
