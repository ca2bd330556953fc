//! Slow direct evaluation of the inner exponent, used as a test oracle.
//!
//! One substitution level of the displacement hierarchy gives
//!
//! ```text
//! E = -2 pi int_0^zeta dt t^2 int d^2g' psi(g') (g.g')^2
//!       [ (zeta-t)^2 (u.g')^2 / 2 + (pi/30) (zeta-t)^5 J(g') ]
//! J(g') = int d^2g'' psi(g'') (u.g'')^2 (g'.g'')^2,      u = (q - q')/q0
//! ```
//!
//! Each integral is evaluated numerically: the radial moments by adaptive
//! quadrature of the spectrum, the angular factors on a periodic grid and
//! the path integrals by Gauss-Kronrod. Only the exact factorisation of a
//! polynomial times a radial function into radius and angle is used.

use crate::error::{domain, Result};
use crate::num::{lit, Real};
use crate::quadrature::gauss_kronrod;
use crate::turbulence::TurbulenceParams;

const ANGLES: usize = 64;

fn radial_moment<T: Real>(turb: &TurbulenceParams<T>, n: i32) -> T {
    let l = turb.reduced_inner_scale();
    let f = |u: T| {
        let g = u * u * u / l;
        g.powi(n) * turb.spectrum_unchecked(g) * lit::<T>(3.0) * u * u / l
    };
    gauss_kronrod::adaptive(f, T::zero(), lit(3.0), lit(1e-13), T::zero(), 400_000).estimate
}

fn path_integral<T: Real>(zeta: T, power: i32) -> T {
    gauss_kronrod::adaptive(
        |t: T| t * t * (zeta - t).powi(power),
        T::zero(),
        zeta,
        lit(1e-14),
        T::zero(),
        10_000,
    )
    .estimate
}

/// Brute-force inner exponent for `g` at angle `theta` to `q - q'`.
pub fn inner_exponent_brute_force<T: Real>(turb: &TurbulenceParams<T>, q0: T, g: T, theta: T, dq: T, zeta: T) -> Result<T> {
    if !(zeta >= T::zero()) || !(g >= T::zero()) || !(dq >= T::zero()) {
        return Err(domain("inner_exponent_brute_force", "g, dq and zeta must be >= 0"));
    }
    let u = dq / q0;
    let h = lit::<T>(std::f64::consts::TAU / ANGLES as f64);
    let node = |i: usize| (lit::<T>(i as f64) + lit(0.5)) * h;
    let r5 = radial_moment(turb, 5);
    let (gs, gc) = theta.sin_cos();
    let gvec = [g * gc, g * gs];

    // Angular part of J for a unit g' at angle beta: int (u.e'')^2 (e'.e'')^2.
    let j_ang = |beta: T| {
        let (bs, bc) = beta.sin_cos();
        (0..ANGLES)
            .map(|k| {
                let (s, c) = node(k).sin_cos();
                let ue = u * c;
                let ge = bc * c + bs * s;
                ue * ue * ge * ge
            })
            .fold(T::zero(), |a, b| a + b)
            * h
    };

    let mut ang1 = T::zero();
    let mut ang2 = T::zero();
    for i in 0..ANGLES {
        let beta = node(i);
        let (s, c) = beta.sin_cos();
        let gg = gvec[0] * c + gvec[1] * s;
        let ug = u * c;
        ang1 = ang1 + gg * gg * ug * ug;
        ang2 = ang2 + gg * gg * j_ang(beta);
    }
    ang1 = ang1 * h;
    ang2 = ang2 * h;

    // Radial factors: g'^5 from d^2g' = g' dg' times the quartic; in the
    // nested term J carries g'^2 and the g'' moment, again giving g'^5.
    let i1 = r5 * ang1;
    let i2 = r5 * r5 * ang2;
    let a1 = path_integral(zeta, 2);
    let a2 = path_integral(zeta, 5);
    let pi = T::PI();
    Ok(-(pi + pi) * (lit::<T>(0.5) * a1 * i1 + pi / lit(30.0) * a2 * i2))
}
