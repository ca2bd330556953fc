//! Counter-based Monte Carlo and randomised quasi-Monte Carlo estimators.
//!
//! Every sample is a pure function of `(seed, index)`: plain Monte Carlo
//! draws each fixed-size chunk from its own ChaCha stream, and QMC uses
//! Owen-scrambled Sobol points addressed by index. Chunk sums are combined
//! in index order, so the estimate is bit-identical for any worker count.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::IntegralResult;
use crate::num::{lit, to_f64, Real};

/// Samples per chunk; also the granularity of parallel work.
pub const CHUNK: usize = 1024;
/// Chunks processed between convergence checks.
const ROUND: usize = 16;
/// Independent scrambles used for the QMC error estimate.
pub const QMC_REPLICATES: u32 = 8;
/// Points per scrambled replicate supported by the Sobol generator.
pub const MAX_QMC_POINTS: usize = 1 << 16;

#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn merge(self, o: Moments) -> Moments {
        Moments {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }
}

fn map_point<T: Real>(u: &[f64], lo: &[T], hi: &[T], x: &mut [T]) {
    for i in 0..lo.len() {
        x[i] = lo[i] + (hi[i] - lo[i]) * lit::<T>(u[i]);
    }
}

fn volume<T: Real>(lo: &[T], hi: &[T]) -> f64 {
    lo.iter().zip(hi).map(|(&a, &b)| to_f64(b - a)).product()
}

fn chunk_moments<T, F>(f: &F, lo: &[T], hi: &[T], seed: u64, chunk: usize, count: usize) -> Moments
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    let dim = lo.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    let mut u = vec![0.0f64; dim];
    let mut x = vec![T::zero(); dim];
    let mut m = Moments::default();
    for _ in 0..count {
        for v in u.iter_mut() {
            *v = rng.random::<f64>();
        }
        map_point(&u, lo, hi, &mut x);
        let y = to_f64(f(&x));
        m.n += 1;
        m.sum += y;
        m.sum_sq += y * y;
    }
    m
}

pub fn monte_carlo<T, F>(f: F, lo: &[T], hi: &[T], rel_tol: T, abs_tol: T, max_evals: usize, seed: u64) -> IntegralResult<T>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    let vol = volume(lo, hi);
    let total_chunks = max_evals.div_ceil(CHUNK);
    let mut acc = Moments::default();
    let mut next = 0usize;
    let (rel, abs) = (to_f64(rel_tol), to_f64(abs_tol));
    let mut est = 0.0;
    let mut err = f64::INFINITY;
    while next < total_chunks {
        let end = (next + ROUND).min(total_chunks);
        let parts: Vec<Moments> = (next..end)
            .into_par_iter()
            .map(|c| {
                let count = CHUNK.min(max_evals - c * CHUNK);
                chunk_moments(&f, lo, hi, seed, c, count)
            })
            .collect();
        for p in parts {
            acc = acc.merge(p);
        }
        next = end;
        let n = acc.n as f64;
        let mean = acc.sum / n;
        let var = ((acc.sum_sq / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
        est = vol * mean;
        err = vol * (var / n).sqrt();
        if acc.n >= 4 * CHUNK && err <= abs.max(rel * est.abs()) {
            break;
        }
    }
    IntegralResult {
        estimate: lit(est),
        error_estimate: lit(err),
        evals: acc.n,
        converged: err <= abs.max(rel * est.abs()),
    }
}

fn replicate_seed(seed: u64, r: u32) -> u32 {
    // SplitMix64 finaliser folded to 32 bits.
    let mut z = seed ^ (u64::from(r) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z ^ (z >> 32)) as u32
}

pub fn quasi_monte_carlo<T, F>(
    f: F,
    lo: &[T],
    hi: &[T],
    rel_tol: T,
    abs_tol: T,
    max_evals: usize,
    seed: u64,
) -> IntegralResult<T>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    let dim = lo.len();
    assert!(dim as u32 <= sobol_burley::NUM_DIMENSIONS, "too many dimensions for Sobol sampler");
    let vol = volume(lo, hi);
    let per = (max_evals / QMC_REPLICATES as usize).clamp(1, MAX_QMC_POINTS);
    let mut means = Vec::with_capacity(QMC_REPLICATES as usize);
    for r in 0..QMC_REPLICATES {
        let s = replicate_seed(seed, r);
        let chunks = per.div_ceil(CHUNK);
        let sums: Vec<f64> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut u = vec![0.0f64; dim];
                let mut x = vec![T::zero(); dim];
                let start = c * CHUNK;
                let end = (start + CHUNK).min(per);
                let mut acc = 0.0;
                for i in start..end {
                    for (d, v) in u.iter_mut().enumerate() {
                        // Centre each Sobol cell so no coordinate is exactly 0.
                        let base = f64::from(sobol_burley::sample(i as u32, d as u32, s));
                        *v = (base + 0.5 / 16_777_216.0).min(1.0 - f64::EPSILON);
                    }
                    map_point(&u, lo, hi, &mut x);
                    acc += to_f64(f(&x));
                }
                acc
            })
            .collect();
        means.push(sums.iter().sum::<f64>() / per as f64);
    }
    let r = means.len() as f64;
    let mean = means.iter().sum::<f64>() / r;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (r - 1.0);
    let est = vol * mean;
    let err = vol * (var / r).sqrt();
    IntegralResult {
        estimate: lit(est),
        error_estimate: lit(err),
        evals: per * QMC_REPLICATES as usize,
        converged: err <= to_f64(abs_tol).max(to_f64(rel_tol) * est.abs()),
    }
}
