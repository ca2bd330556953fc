//! Globally adaptive 7/15-point Gauss–Kronrod quadrature on a finite interval.

use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::{IntegralResult, Region};
use crate::num::{lit, to_f64, Real};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd-indexed Kronrod abscissae (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const NODES_PER_PANEL: usize = 15;

/// Abscissae of the 15-point rule on `[a, b]`, in a fixed order.
fn abscissae<T: Real>(a: T, b: T) -> [T; NODES_PER_PANEL] {
    let c = lit::<T>(0.5) * (a + b);
    let h = lit::<T>(0.5) * (b - a);
    let mut x = [c; NODES_PER_PANEL];
    for i in 0..7 {
        let d = h * lit(XGK[i]);
        x[2 * i] = c - d;
        x[2 * i + 1] = c + d;
    }
    x
}

/// Applies the Kronrod and embedded Gauss rules to precomputed node values.
fn combine<T: Real, const K: usize>(a: T, b: T, fx: &[[T; K]]) -> ([T; K], [T; K]) {
    let h = lit::<T>(0.5) * (b - a);
    let mut kron = [T::zero(); K];
    let mut gauss = [T::zero(); K];
    for c in 0..K {
        let mut rk = lit::<T>(WGK[7]) * fx[14][c];
        let mut rg = lit::<T>(WG[3]) * fx[14][c];
        for i in 0..7 {
            let pair = fx[2 * i][c] + fx[2 * i + 1][c];
            rk = rk + lit::<T>(WGK[i]) * pair;
            if i % 2 == 1 {
                rg = rg + lit::<T>(WG[i / 2]) * pair;
            }
        }
        kron[c] = rk * h;
        gauss[c] = rg * h;
    }
    let mut err = [T::zero(); K];
    for c in 0..K {
        err[c] = (kron[c] - gauss[c]).abs();
    }
    (kron, err)
}

/// Result for vector-valued integrands.
#[derive(Debug, Clone, Copy)]
pub struct VecResult<T, const K: usize> {
    pub estimate: [T; K],
    pub error: [T; K],
    pub evals: usize,
    pub converged: bool,
}

/// Tolerance for vector-valued adaptive rules: component `c` is converged
/// once its error is below `max(abs[c], rel * |estimate[c]|)`.
#[derive(Debug, Clone, Copy)]
pub struct VecTolerance<T, const K: usize> {
    pub rel: T,
    pub abs: [T; K],
}

impl<T: Real, const K: usize> VecTolerance<T, K> {
    fn bound(&self, est: &[T; K]) -> [T; K] {
        let mut b = [T::zero(); K];
        for c in 0..K {
            b[c] = self.abs[c].max(self.rel * est[c].abs());
        }
        b
    }

    fn satisfied(&self, est: &[T; K], err: &[T; K]) -> bool {
        let b = self.bound(est);
        (0..K).all(|c| err[c] <= b[c])
    }

    /// Priority of a region: largest component error relative to the scale
    /// on which that component is judged.
    pub(crate) fn priority(&self, est: &[T; K], err: &[T; K]) -> f64 {
        let b = self.bound(est);
        let mut p = 0.0f64;
        for c in 0..K {
            let denom = to_f64(b[c]).max(f64::MIN_POSITIVE);
            p = p.max(to_f64(err[c]) / denom);
        }
        p
    }
}

/// Adaptive Gauss–Kronrod for a vector-valued integrand on `[a, b]`.
///
/// With `parallel`, the 15 nodes of each new panel are evaluated on the
/// current rayon pool; the subdivision order never depends on scheduling.
pub fn adaptive_vec<T, const K: usize, F>(
    f: F,
    a: T,
    b: T,
    tol: VecTolerance<T, K>,
    max_evals: usize,
    parallel: bool,
) -> VecResult<T, K>
where
    T: Real,
    F: Fn(T) -> [T; K] + Sync,
{
    let eval_panel = |lo: T, hi: T| -> Region<T, K> {
        let xs = abscissae(lo, hi);
        let fx: Vec<[T; K]> = if parallel {
            xs.par_iter().map(|&x| f(x)).collect()
        } else {
            xs.iter().map(|&x| f(x)).collect()
        };
        let (est, err) = combine(lo, hi, &fx);
        Region {
            lo: vec![lo],
            hi: vec![hi],
            est,
            err,
            priority: 0.0,
            split_dim: 0,
        }
    };

    let mut heap = BinaryHeap::new();
    let mut first = eval_panel(a, b);
    let mut evals = NODES_PER_PANEL;
    let mut total_est = first.est;
    let mut total_err = first.err;
    first.priority = tol.priority(&total_est, &first.err);
    heap.push(first);

    while !tol.satisfied(&total_est, &total_err) && evals + 2 * NODES_PER_PANEL <= max_evals {
        let Some(worst) = heap.pop() else { break };
        let lo = worst.lo[0];
        let hi = worst.hi[0];
        let mid = lit::<T>(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            // Interval can no longer be split in this precision.
            heap.push(worst);
            break;
        }
        let mut left = eval_panel(lo, mid);
        let mut right = eval_panel(mid, hi);
        evals += 2 * NODES_PER_PANEL;
        for c in 0..K {
            total_est[c] = total_est[c] - worst.est[c] + left.est[c] + right.est[c];
            total_err[c] = total_err[c] - worst.err[c] + left.err[c] + right.err[c];
        }
        left.priority = tol.priority(&total_est, &left.err);
        right.priority = tol.priority(&total_est, &right.err);
        heap.push(left);
        heap.push(right);
    }

    // Re-sum from scratch to shed accumulated cancellation in the running totals.
    let mut est = [T::zero(); K];
    let mut err = [T::zero(); K];
    let mut regions: Vec<_> = heap.into_vec();
    regions.sort_by(|x, y| to_f64(x.lo[0]).total_cmp(&to_f64(y.lo[0])));
    for r in &regions {
        for c in 0..K {
            est[c] = est[c] + r.est[c];
            err[c] = err[c] + r.err[c];
        }
    }
    VecResult {
        estimate: est,
        error: err,
        evals,
        converged: tol.satisfied(&est, &err),
    }
}

/// Scalar adaptive Gauss–Kronrod on `[a, b]`.
pub fn adaptive<T, F>(f: F, a: T, b: T, rel_tol: T, abs_tol: T, max_evals: usize) -> IntegralResult<T>
where
    T: Real,
    F: Fn(T) -> T + Sync,
{
    let r = adaptive_vec(
        |x| [f(x)],
        a,
        b,
        VecTolerance {
            rel: rel_tol,
            abs: [abs_tol],
        },
        max_evals,
        false,
    );
    IntegralResult {
        estimate: r.estimate[0],
        error_estimate: r.error[0],
        evals: r.evals,
        converged: r.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let r = adaptive(|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-12, 0.0, 10_000);
        assert!(r.converged);
        assert!((r.estimate - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // int_0^1 x^(-2/3) dx = 3
        let r = adaptive(|x: f64| x.powf(-2.0 / 3.0), 0.0, 1.0, 1e-8, 0.0, 200_000);
        assert!((r.estimate - 3.0).abs() < 1e-6, "{}", r.estimate);
    }

    #[test]
    fn polynomial_exact_on_one_panel() {
        let r = adaptive(|x: f64| x.powi(20) - 3.0 * x.powi(7), -1.0, 2.0, 1e-14, 0.0, 15);
        let want = (2f64.powi(21) + 1.0) / 21.0 - 3.0 * (2f64.powi(8) - 1.0) / 8.0;
        assert_eq!(r.evals, 15);
        assert!((r.estimate / want - 1.0).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let r = adaptive(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, 1e-14, 0.0, 45);
        assert!(!r.converged);
        assert!(r.evals <= 45);
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let f = |x: f64| [x.sin() * (-x).exp(), x.cos()];
        let tol = VecTolerance {
            rel: 1e-10,
            abs: [0.0, 0.0],
        };
        let a = adaptive_vec(f, 0.0, 30.0, tol, 100_000, false);
        let b = adaptive_vec(f, 0.0, 30.0, tol, 100_000, true);
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.evals, b.evals);
    }
}
