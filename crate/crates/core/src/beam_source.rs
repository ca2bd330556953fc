//! Gaussian Schell-model source: initial phase-space density, diffuser
//! averaging and the effective radius.
//!
//! The phase diffuser multiplies the aperture field by a random tilt
//! `exp(-i a.r)` with `<a_x^2> = <a_y^2> = lambda^-2`. Averaged over `a` for a
//! slow detector, the momentum width of the source grows while its spatial
//! width stays `r0`; everything downstream only sees the combination
//! `r1^2 = r0^2 / (1 + 2 r0^2 / lambda^2)`.

use crate::error::{domain, invalid, Result};
use crate::num::{lit, norm_sq, Real, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams<T> {
    /// Initial beam radius `r0`, m.
    pub r0: T,
    /// Central wavenumber `q0`, m^-1.
    pub q0: T,
    /// Diffuser correlation length `lambda`, m. Infinite for a coherent beam.
    pub lambda_diffuser: T,
    r1: T,
}

impl<T: Real> BeamParams<T> {
    pub fn new(r0: T, q0: T, lambda_diffuser: T) -> Result<Self> {
        if !(q0 > T::zero()) || !q0.is_finite() {
            return Err(invalid("q0", format!("must be finite and > 0, got {q0}")));
        }
        let r1 = effective_radius(r0, lambda_diffuser).map_err(|e| match e {
            crate::Error::Domain { detail, .. } => invalid("r0/lambda_diffuser", detail),
            other => other,
        })?;
        Ok(Self {
            r0,
            q0,
            lambda_diffuser,
            r1,
        })
    }

    pub fn coherent(r0: T, q0: T) -> Result<Self> {
        Self::new(r0, q0, T::infinity())
    }

    /// Diffuser correlation length giving a prescribed `r1^2 / r0^2`.
    pub fn with_radius_ratio(r0: T, q0: T, r1_sq_over_r0_sq: T) -> Result<Self> {
        if !(r1_sq_over_r0_sq > T::zero() && r1_sq_over_r0_sq <= T::one()) {
            return Err(invalid("r1^2/r0^2", format!("must lie in (0, 1], got {r1_sq_over_r0_sq}")));
        }
        if r1_sq_over_r0_sq == T::one() {
            return Self::coherent(r0, q0);
        }
        // 1 + 2 r0^2 / lambda^2 = r0^2 / r1^2
        let lambda = r0 * (lit::<T>(2.0) / (r1_sq_over_r0_sq.recip() - T::one())).sqrt();
        Self::new(r0, q0, lambda)
    }

    /// Effective radius `r1 <= r0`.
    #[inline]
    pub fn r1(&self) -> T {
        self.r1
    }

    #[inline]
    pub fn is_coherent(&self) -> bool {
        self.lambda_diffuser.is_infinite()
    }

    /// Diffuser-averaged initial phase-space weight, peak-normalised.
    ///
    /// `exp(-q^2 r1^2 / 2 - k^2 r0^2 / 8)`: the momentum width follows `r1`,
    /// the intensity-Fourier width follows `r0` only.
    pub fn initial_phase_density(&self, k: Vec2<T>, q: Vec2<T>) -> T {
        let half = lit::<T>(0.5);
        let eighth = lit::<T>(0.125);
        (-(half * norm_sq(q) * self.r1 * self.r1) - eighth * norm_sq(k) * self.r0 * self.r0).exp()
    }

    /// Gaussian Schell-model field correlation `<E(r) E(r + delta)>`, with `E0^2 = 1`.
    pub fn source_correlation(&self, r_perp: Vec2<T>, delta: Vec2<T>) -> T {
        let shifted = [r_perp[0] + delta[0], r_perp[1] + delta[1]];
        let r0_sq = self.r0 * self.r0;
        let envelope = (-(norm_sq(r_perp) + norm_sq(shifted)) / r0_sq).exp();
        let coherence = if self.is_coherent() {
            T::one()
        } else {
            (-norm_sq(delta) / (self.lambda_diffuser * self.lambda_diffuser)).exp()
        };
        envelope * coherence
    }
}

/// `r1^2 = r0^2 (1 + 2 r0^2 lambda^-2)^-1`.
pub fn effective_radius<T: Real>(r0: T, lambda: T) -> Result<T> {
    if !(r0 > T::zero()) || !r0.is_finite() {
        return Err(domain("effective_radius", format!("r0 must be finite and > 0, got {r0}")));
    }
    if !(lambda > T::zero()) {
        return Err(domain("effective_radius", format!("lambda must be > 0 or infinite, got {lambda}")));
    }
    if lambda.is_infinite() {
        return Ok(r0);
    }
    let ratio = r0 / lambda;
    Ok(r0 / (T::one() + lit::<T>(2.0) * ratio * ratio).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coherent_limit() {
        assert_eq!(effective_radius(0.01, f64::INFINITY).unwrap(), 0.01);
    }

    #[test]
    fn reference_radii() {
        let r0: f64 = 0.01;
        let lam = (2.0 * r0 * r0).sqrt();
        let r1 = effective_radius(r0, lam).unwrap();
        assert!((r1 - r0 / 2f64.sqrt()).abs() < 1e-15);
        let r1 = effective_radius(0.01, 0.01).unwrap();
        assert!((r1 - 0.01 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(effective_radius(0.0, 1.0).is_err());
        assert!(effective_radius(0.01, 0.0).is_err());
        assert!(effective_radius(-0.01, 1.0).is_err());
        assert!(BeamParams::new(0.01, -1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn radius_ratio_constructor() {
        let b = BeamParams::<f64>::with_radius_ratio(0.01, 1e7, 0.5).unwrap();
        assert!((b.r1() * b.r1() / 1e-4 - 0.5).abs() < 1e-14);
        assert!(BeamParams::with_radius_ratio(0.01, 1e7, 1.0).unwrap().is_coherent());
    }

    #[test]
    fn near_coherent_gap() {
        let r1 = effective_radius(0.01, 10.0).unwrap();
        assert!((0.01 - r1) / 0.01 < 3e-6);
    }

    #[test]
    fn phase_density_points() {
        let b = BeamParams::new(0.01, 1e7, 0.02).unwrap();
        assert_eq!(b.initial_phase_density([0.0, 0.0], [0.0, 0.0]), 1.0);
        let q = 2f64.sqrt() / b.r1();
        let v = b.initial_phase_density([0.0, 0.0], [q, 0.0]);
        assert!((v - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn k_width_independent_of_diffuser() {
        let coh = BeamParams::<f64>::coherent(0.01, 1e7).unwrap();
        let dif = BeamParams::new(0.01, 1e7, 0.01).unwrap();
        let q = [35.0, -12.0];
        for &k in &[10.0, 100.0, 400.0] {
            let a = coh.initial_phase_density([k, 0.0], q) / coh.initial_phase_density([0.0, 0.0], q);
            let b = dif.initial_phase_density([k, 0.0], q) / dif.initial_phase_density([0.0, 0.0], q);
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn q_marginal_is_diffuser_independent() {
        // r1^2 * int d^2q exp(-q^2 r1^2 / 2) = 2 pi for any r1
        for &lam in &[f64::INFINITY, 0.02, 0.005] {
            let b = BeamParams::new(0.01, 1e7, lam).unwrap();
            let r1 = b.r1();
            let n = 400;
            let qmax = 12.0 / r1;
            let h = qmax / n as f64;
            let mut s = 0.0;
            for i in 0..n {
                let q = (i as f64 + 0.5) * h;
                s += 2.0 * std::f64::consts::PI * q * b.initial_phase_density([0.0, 0.0], [q, 0.0]) * h;
            }
            assert!((s * r1 * r1 / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn source_correlation_points() {
        let b = BeamParams::new(0.01, 1e7, 0.004).unwrap();
        assert_eq!(b.source_correlation([0.0, 0.0], [0.0, 0.0]), 1.0);
        let d: [f64; 2] = [0.004, 0.0];
        let v = b.source_correlation([0.0, 0.0], d);
        let want = (-1f64).exp() * (-(0.004f64 * 0.004) / 1e-4).exp();
        assert!((v - want).abs() < 1e-15);
        let coh = BeamParams::coherent(0.01, 1e7).unwrap();
        let r = [0.003, -0.001];
        let v = coh.source_correlation(r, d);
        let want = (-(norm_sq(r) + norm_sq([r[0] + d[0], r[1]])) / 1e-4).exp();
        assert!((v - want).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn r1_bounded_and_monotone(r0 in 1e-3f64..0.1, l1 in 1e-4f64..1.0, f in 1.001f64..10.0) {
            let a = effective_radius(r0, l1).unwrap();
            let b = effective_radius(r0, l1 * f).unwrap();
            prop_assert!(a > 0.0 && a <= r0);
            prop_assert!(b > a);
        }

        #[test]
        fn correlation_symmetric_about_midpoint(mx in -0.02f64..0.02, my in -0.02f64..0.02,
                                                 dx in -0.02f64..0.02, dy in -0.02f64..0.02) {
            let b = BeamParams::new(0.01, 1e7, 0.007).unwrap();
            let r = [mx - dx / 2.0, my - dy / 2.0];
            let r2 = [mx + dx / 2.0, my + dy / 2.0];
            let fwd = b.source_correlation(r, [dx, dy]);
            let back = b.source_correlation(r2, [-dx, -dy]);
            prop_assert!((fwd - back).abs() <= 1e-12 * fwd.abs().max(1e-300));
        }
    }
}
