//! Deterministic and Monte-Carlo integration engines with error control and
//! reproducible parallelism.

use std::cmp::Ordering;

use crate::error::{invalid, Error, Result};
use crate::num::{lit, Real};

pub mod gauss_kronrod;
pub mod genz_malik;
pub mod sampling;

pub use gauss_kronrod::{VecResult, VecTolerance};

/// Largest dimension accepted by [`integrate`].
pub const MAX_DIM: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Gauss–Kronrod in one dimension, Genz–Malik cubature above.
    AdaptiveProduct,
    /// Owen-scrambled Sobol points with replicate-based error bars.
    QuasiMonteCarlo,
    /// Counter-based pseudo-random sampling.
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig<T> {
    pub method: Method,
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_evals: usize,
    /// Cutoff radius of Gaussian directions, in units of their natural width.
    pub truncation_sigmas: T,
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
}

impl<T: Real> Default for IntegrationConfig<T> {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveProduct,
            rel_tol: lit(1e-2),
            abs_tol: T::zero(),
            max_evals: 2_000_000,
            truncation_sigmas: lit(6.0),
            seed: 0x5EED,
            workers: 0,
        }
    }
}

impl<T: Real> IntegrationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero()) {
            return Err(invalid("rel_tol", format!("must be > 0, got {}", self.rel_tol)));
        }
        if !(self.abs_tol >= T::zero()) {
            return Err(invalid("abs_tol", format!("must be >= 0, got {}", self.abs_tol)));
        }
        if self.max_evals < 1000 {
            return Err(invalid("max_evals", format!("must be >= 1000, got {}", self.max_evals)));
        }
        if !(self.truncation_sigmas >= lit(4.0)) {
            return Err(invalid(
                "truncation_sigmas",
                format!("must be >= 4, got {}", self.truncation_sigmas),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult<T> {
    pub estimate: T,
    pub error_estimate: T,
    pub evals: usize,
    pub converged: bool,
}

/// Runs `f` on a pool with `workers` threads (0 = default size).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Integrates `f` over the box `domain` (one `(lo, hi)` pair per dimension).
///
/// Infinite Gaussian directions must be truncated by the caller. A
/// tolerance miss is not an error: the best estimate comes back with
/// `converged = false`.
pub fn integrate<T, F>(f: F, domain: &[(T, T)], config: &IntegrationConfig<T>) -> Result<IntegralResult<T>>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync + Send,
{
    config.validate()?;
    if domain.is_empty() || domain.len() > MAX_DIM {
        return Err(invalid("domain", format!("dimension must be 1..={MAX_DIM}, got {}", domain.len())));
    }
    if domain.iter().any(|&(a, b)| !a.is_finite() || !b.is_finite() || !(b > a)) {
        return Err(Error::Domain {
            what: "integrate",
            detail: "bounds must be finite with lo < hi".into(),
        });
    }
    let lo: Vec<T> = domain.iter().map(|d| d.0).collect();
    let hi: Vec<T> = domain.iter().map(|d| d.1).collect();
    let cfg = *config;
    Ok(with_workers(cfg.workers, move || match cfg.method {
        Method::AdaptiveProduct if lo.len() == 1 => {
            let r = gauss_kronrod::adaptive_vec(
                |x| [f(&[x])],
                lo[0],
                hi[0],
                VecTolerance {
                    rel: cfg.rel_tol,
                    abs: [cfg.abs_tol],
                },
                cfg.max_evals,
                true,
            );
            IntegralResult {
                estimate: r.estimate[0],
                error_estimate: r.error[0],
                evals: r.evals,
                converged: r.converged,
            }
        }
        Method::AdaptiveProduct => {
            let r = genz_malik::integrate_vec(
                |x| [f(x)],
                &lo,
                &hi,
                VecTolerance {
                    rel: cfg.rel_tol,
                    abs: [cfg.abs_tol],
                },
                cfg.max_evals,
                true,
            );
            IntegralResult {
                estimate: r.estimate[0],
                error_estimate: r.error[0],
                evals: r.evals,
                converged: r.converged,
            }
        }
        Method::MonteCarlo => sampling::monte_carlo(f, &lo, &hi, cfg.rel_tol, cfg.abs_tol, cfg.max_evals, cfg.seed),
        Method::QuasiMonteCarlo => {
            sampling::quasi_monte_carlo(f, &lo, &hi, cfg.rel_tol, cfg.abs_tol, cfg.max_evals, cfg.seed)
        }
    }))
}

/// Midpoint nodes on `[a, b]`: spectrally accurate for periodic integrands.
pub fn periodic_nodes<T: Real>(a: T, b: T, n: usize) -> impl Iterator<Item = (T, T)> {
    let h = (b - a) / lit::<T>(n as f64);
    (0..n).map(move |i| (a + (lit::<T>(i as f64) + lit(0.5)) * h, h))
}

/// Subregion shared by the adaptive rules.
#[derive(Debug, Clone)]
pub(crate) struct Region<T, const K: usize> {
    pub lo: Vec<T>,
    pub hi: Vec<T>,
    pub est: [T; K],
    pub err: [T; K],
    pub priority: f64,
    pub split_dim: usize,
}

impl<T, const K: usize> PartialEq for Region<T, K> {
    fn eq(&self, other: &Self) -> bool {
        self.priority.total_cmp(&other.priority) == Ordering::Equal
    }
}
impl<T, const K: usize> Eq for Region<T, K> {}
impl<T, const K: usize> PartialOrd for Region<T, K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T, const K: usize> Ord for Region<T, K> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: Method, rel: f64) -> IntegrationConfig<f64> {
        IntegrationConfig {
            method,
            rel_tol: rel,
            max_evals: 4_000_000,
            ..Default::default()
        }
    }

    #[test]
    fn gaussian_1d() {
        let r = integrate(|x: &[f64]| (-x[0] * x[0]).exp(), &[(-8.0, 8.0)], &cfg(Method::AdaptiveProduct, 1e-6)).unwrap();
        assert!(r.converged);
        assert!((r.estimate / std::f64::consts::PI.sqrt() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gaussian_2d_all_methods() {
        let f = |x: &[f64]| (-x[0] * x[0] - x[1] * x[1]).exp();
        let dom = [(-8.0, 8.0), (-8.0, 8.0)];
        let pi = std::f64::consts::PI;
        let r = integrate(f, &dom, &cfg(Method::AdaptiveProduct, 1e-6)).unwrap();
        assert!(r.converged && (r.estimate / pi - 1.0).abs() < 1e-6);
        for m in [Method::QuasiMonteCarlo, Method::MonteCarlo] {
            let r = integrate(f, &dom, &cfg(m, 1e-2)).unwrap();
            assert!((r.estimate / pi - 1.0).abs() < 4.0 * r.error_estimate / pi + 1e-3, "{m:?} {r:?}");
        }
    }

    #[test]
    fn monte_carlo_independent_of_workers() {
        let f = |x: &[f64]| (x[0] * 3.0).sin().powi(2) * (-x[1]).exp() + x[2];
        let dom = [(0.0, 1.0), (0.0, 2.0), (-1.0, 1.0)];
        let mut c = cfg(Method::MonteCarlo, 1e-9);
        c.max_evals = 100_000;
        c.workers = 1;
        let a = integrate(f, &dom, &c).unwrap();
        c.workers = 8;
        let b = integrate(f, &dom, &c).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.error_estimate.to_bits(), b.error_estimate.to_bits());
        let mut q = c;
        q.method = Method::QuasiMonteCarlo;
        let a = integrate(f, &dom, &q).unwrap();
        q.workers = 1;
        let b = integrate(f, &dom, &q).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    }

    #[test]
    fn tighter_tolerance_never_worse() {
        let battery: [(fn(&[f64]) -> f64, f64); 3] = [
            (|x| (-x[0] * x[0]).exp(), std::f64::consts::PI.sqrt()),
            (|x| (-2.0 * x[0] * x[0]).exp() * x[0] * x[0], (std::f64::consts::PI / 2.0).sqrt() / 4.0),
            (|x| (-(x[0] - 1.0).powi(2) / 0.5).exp(), (0.5 * std::f64::consts::PI).sqrt()),
        ];
        for (f, exact) in battery {
            let mut prev = f64::INFINITY;
            let mut tol = 1e-3;
            for _ in 0..6 {
                let r = integrate(f, &[(-8.0, 8.0)], &cfg(Method::AdaptiveProduct, tol)).unwrap();
                let achieved = (r.estimate - exact).abs();
                assert!(achieved <= prev.max(1e-15), "tol {tol}: {achieved} > {prev}");
                prev = achieved;
                tol /= 2.0;
            }
        }
    }

    #[test]
    fn rejects_bad_config_and_domain() {
        let f = |x: &[f64]| x[0];
        let mut c = cfg(Method::AdaptiveProduct, 1e-3);
        c.truncation_sigmas = 3.0;
        assert!(integrate(f, &[(0.0, 1.0)], &c).is_err());
        let c = cfg(Method::AdaptiveProduct, 1e-3);
        assert!(integrate(f, &[(0.0, f64::INFINITY)], &c).is_err());
        assert!(integrate(f, &[(0.0, 1.0); 14], &c).is_err());
    }

    #[test]
    fn converged_implies_bound() {
        let r = integrate(|x: &[f64]| x[0].cos() * x[1].exp(), &[(0.0, 3.0), (0.0, 1.0)], &cfg(Method::AdaptiveProduct, 1e-8)).unwrap();
        assert!(r.converged);
        assert!(r.error_estimate <= 1e-8 * r.estimate.abs());
    }
}
