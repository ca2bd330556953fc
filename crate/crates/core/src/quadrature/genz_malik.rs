//! Globally adaptive Genz–Malik cubature (degree 7 with embedded degree 5).
//!
//! Regions with the largest error are bisected along the axis with the
//! largest fourth divided difference. New regions are evaluated in fixed-size
//! batches so the refinement sequence is independent of the thread count.

use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::gauss_kronrod::{VecResult, VecTolerance};
use super::Region;
use crate::num::{lit, to_f64, Real};

/// Regions refined per sweep of the adaptive loop.
const BATCH: usize = 8;

struct Rule<T> {
    dim: usize,
    l2: T,
    l3: T,
    l4: T,
    l5: T,
    w: [T; 5],
    w5: [T; 4],
}

impl<T: Real> Rule<T> {
    fn new(dim: usize) -> Self {
        let n = dim as f64;
        Self {
            dim,
            l2: lit((9.0f64 / 70.0).sqrt()),
            l3: lit((9.0f64 / 10.0).sqrt()),
            l4: lit((9.0f64 / 10.0).sqrt()),
            l5: lit((9.0f64 / 19.0).sqrt()),
            w: [
                lit((12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0),
                lit(980.0 / 6561.0),
                lit((1820.0 - 400.0 * n) / 19683.0),
                lit(200.0 / 19683.0),
                lit(6859.0 / 19683.0 / 2f64.powi(dim as i32)),
            ],
            w5: [
                lit((729.0 - 950.0 * n + 50.0 * n * n) / 729.0),
                lit(245.0 / 486.0),
                lit((265.0 - 100.0 * n) / 1458.0),
                lit(25.0 / 729.0),
            ],
        }
    }

    fn points_per_region(&self) -> usize {
        let n = self.dim;
        (1usize << n) + 2 * n * n + 2 * n + 1
    }

    fn apply<const K: usize, F>(&self, f: &F, lo: &[T], hi: &[T], tol: &VecTolerance<T, K>) -> Region<T, K>
    where
        F: Fn(&[T]) -> [T; K],
    {
        let n = self.dim;
        let half = lit::<T>(0.5);
        let c: Vec<T> = lo.iter().zip(hi).map(|(&a, &b)| half * (a + b)).collect();
        let h: Vec<T> = lo.iter().zip(hi).map(|(&a, &b)| half * (b - a)).collect();
        let vol = h.iter().fold(T::one(), |acc, &x| acc * (x + x));

        let mut x = c.clone();
        let f0 = f(&x);
        let mut s2 = [T::zero(); K];
        let mut s3 = [T::zero(); K];
        let mut s4 = [T::zero(); K];
        let mut s5 = [T::zero(); K];
        let two = lit::<T>(2.0);
        let ratio = lit::<T>(1.0 / 7.0);

        let mut best_dim = 0;
        let mut best_diff = -1.0f64;
        for i in 0..n {
            x[i] = c[i] - self.l2 * h[i];
            let a = f(&x);
            x[i] = c[i] + self.l2 * h[i];
            let b = f(&x);
            x[i] = c[i] - self.l3 * h[i];
            let d = f(&x);
            x[i] = c[i] + self.l3 * h[i];
            let e = f(&x);
            x[i] = c[i];
            let mut diff = 0.0f64;
            for k in 0..K {
                s2[k] = s2[k] + a[k] + b[k];
                s3[k] = s3[k] + d[k] + e[k];
                let fourth = (a[k] + b[k] - two * f0[k]) - ratio * (d[k] + e[k] - two * f0[k]);
                let scale = to_f64(tol.abs[k]).max(f64::MIN_POSITIVE);
                diff = diff.max(to_f64(fourth.abs()) / scale);
            }
            if diff > best_diff {
                best_diff = diff;
                best_dim = i;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                for (si, sj) in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
                    x[i] = c[i] + lit::<T>(f64::from(si)) * self.l4 * h[i];
                    x[j] = c[j] + lit::<T>(f64::from(sj)) * self.l4 * h[j];
                    let v = f(&x);
                    for k in 0..K {
                        s4[k] = s4[k] + v[k];
                    }
                }
                x[i] = c[i];
                x[j] = c[j];
            }
        }
        for mask in 0..(1usize << n) {
            for i in 0..n {
                let sign = if mask >> i & 1 == 1 { T::one() } else { -T::one() };
                x[i] = c[i] + sign * self.l5 * h[i];
            }
            let v = f(&x);
            for k in 0..K {
                s5[k] = s5[k] + v[k];
            }
        }

        let mut est = [T::zero(); K];
        let mut err = [T::zero(); K];
        for k in 0..K {
            let i7 = self.w[0] * f0[k] + self.w[1] * s2[k] + self.w[2] * s3[k] + self.w[3] * s4[k] + self.w[4] * s5[k];
            let i5 = self.w5[0] * f0[k] + self.w5[1] * s2[k] + self.w5[2] * s3[k] + self.w5[3] * s4[k];
            est[k] = vol * i7;
            err[k] = (vol * (i7 - i5)).abs();
        }
        Region {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            est,
            err,
            priority: 0.0,
            split_dim: best_dim,
        }
    }
}

/// Adaptive cubature of a vector-valued integrand over a box (dimension >= 2).
pub fn integrate_vec<T, const K: usize, F>(
    f: F,
    lo: &[T],
    hi: &[T],
    tol: VecTolerance<T, K>,
    max_evals: usize,
    parallel: bool,
) -> VecResult<T, K>
where
    T: Real,
    F: Fn(&[T]) -> [T; K] + Sync,
{
    assert_eq!(lo.len(), hi.len());
    assert!(lo.len() >= 2, "Genz–Malik needs at least two dimensions");
    let rule = Rule::<T>::new(lo.len());
    let per = rule.points_per_region();

    let mut first = rule.apply(&f, lo, hi, &tol);
    let mut evals = per;
    let mut total_est = first.est;
    let mut total_err = first.err;
    first.priority = tol.priority(&total_est, &first.err);
    let mut heap = BinaryHeap::new();
    heap.push(first);

    let satisfied = |est: &[T; K], err: &[T; K]| {
        (0..K).all(|k| err[k] <= tol.abs[k].max(tol.rel * est[k].abs()))
    };

    while !satisfied(&total_est, &total_err) && evals + 2 * per <= max_evals {
        let room = (max_evals - evals) / (2 * per);
        let take = BATCH.min(room).min(heap.len()).max(1);
        let parents: Vec<Region<T, K>> = (0..take).filter_map(|_| heap.pop()).collect();
        let halves: Vec<(Vec<T>, Vec<T>)> = parents
            .iter()
            .flat_map(|p| {
                let d = p.split_dim;
                let mid = lit::<T>(0.5) * (p.lo[d] + p.hi[d]);
                let mut hi_left = p.hi.clone();
                hi_left[d] = mid;
                let mut lo_right = p.lo.clone();
                lo_right[d] = mid;
                [(p.lo.clone(), hi_left), (lo_right, p.hi.clone())]
            })
            .collect();
        let children: Vec<Region<T, K>> = if parallel {
            halves.par_iter().map(|(a, b)| rule.apply(&f, a, b, &tol)).collect()
        } else {
            halves.iter().map(|(a, b)| rule.apply(&f, a, b, &tol)).collect()
        };
        evals += children.len() * per;
        for p in &parents {
            for k in 0..K {
                total_est[k] = total_est[k] - p.est[k];
                total_err[k] = total_err[k] - p.err[k];
            }
        }
        for ch in &children {
            for k in 0..K {
                total_est[k] = total_est[k] + ch.est[k];
                total_err[k] = total_err[k] + ch.err[k];
            }
        }
        for mut ch in children {
            ch.priority = tol.priority(&total_est, &ch.err);
            heap.push(ch);
        }
    }

    let mut est = [T::zero(); K];
    let mut err = [T::zero(); K];
    for r in heap.iter() {
        for k in 0..K {
            est[k] = est[k] + r.est[k];
            err[k] = err[k] + r.err[k];
        }
    }
    VecResult {
        estimate: est,
        error: err,
        evals,
        converged: satisfied(&est, &err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_constants() {
        for n in 2..=13 {
            let r = integrate_vec(
                |_x: &[f64]| [1.0],
                &vec![0.0; n],
                &vec![2.0; n],
                VecTolerance { rel: 1e-12, abs: [0.0] },
                1_000_000,
                false,
            );
            assert!((r.estimate[0] / 2f64.powi(n as i32) - 1.0).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn gaussian_2d() {
        let r = integrate_vec(
            |x: &[f64]| [(-x[0] * x[0] - x[1] * x[1]).exp()],
            &[-8.0, -8.0],
            &[8.0, 8.0],
            VecTolerance { rel: 1e-9, abs: [0.0] },
            2_000_000,
            false,
        );
        assert!(r.converged);
        assert!((r.estimate[0] - std::f64::consts::PI).abs() < 1e-8);
    }

    #[test]
    fn degree_seven_exactness() {
        let r = integrate_vec(
            |x: &[f64]| [x[0].powi(4) * x[1].powi(3) + x[2].powi(6) + x[0] * x[1] * x[2]],
            &[0.0, 0.0, 0.0],
            &[1.0, 1.0, 1.0],
            VecTolerance { rel: 1e-14, abs: [0.0] },
            33,
            false,
        );
        let want = 1.0 / 20.0 + 1.0 / 7.0 + 1.0 / 8.0;
        assert!((r.estimate[0] - want).abs() < 1e-13);
    }
}
