//! Refractive-index fluctuation spectra and the random-force spectral tensor.
//!
//! The spectrum is the 3-D von Karman form with a Gaussian inner-scale cutoff,
//!
//! ```text
//! psi(g) = 0.033 Cn2 exp[-(g l0 / 2 pi)^2] / (g^2 + L0^-2)^(11/6)      [m^3]
//! ```
//!
//! and the Tatarskii variant drops the outer-scale term. After the Markov
//! reduction it is evaluated on transverse wavevectors with the same closed
//! form and units; the `2 pi` longitudinal factor belongs to the kernel.

use crate::error::{domain, invalid, Result};
use crate::num::{lit, Real, Vec2};
use crate::quadrature::gauss_kronrod;

/// Kolmogorov prefactor of the index spectrum.
pub const KOLMOGOROV_PREFACTOR: f64 = 0.033;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpectrumModel {
    VonKarman,
    /// Von Karman with `L0^-1 = 0`.
    Tatarskii,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams<T> {
    /// Structure constant `Cn2`, m^(-2/3).
    pub cn2: T,
    /// Inner scale `l0`, m.
    pub inner_scale: T,
    /// Outer scale `L0`, m. Infinite for the Tatarskii model.
    pub outer_scale: T,
    pub model: SpectrumModel,
}

impl<T: Real> TurbulenceParams<T> {
    pub fn new(cn2: T, inner_scale: T, outer_scale: T, model: SpectrumModel) -> Result<Self> {
        if !(cn2 >= T::zero()) || !cn2.is_finite() {
            return Err(invalid("cn2", format!("must be finite and >= 0, got {cn2}")));
        }
        if !(inner_scale > T::zero()) || !inner_scale.is_finite() {
            return Err(invalid("l0", format!("must be finite and > 0, got {inner_scale}")));
        }
        match model {
            SpectrumModel::VonKarman => {
                if !outer_scale.is_finite() || !(outer_scale > inner_scale) {
                    return Err(invalid(
                        "L0",
                        format!("von Karman model needs a finite outer scale larger than l0, got {outer_scale}"),
                    ));
                }
            }
            SpectrumModel::Tatarskii => {
                if outer_scale.is_finite() {
                    return Err(invalid("L0", "Tatarskii model implies an infinite outer scale"));
                }
            }
        }
        Ok(Self {
            cn2,
            inner_scale,
            outer_scale,
            model,
        })
    }

    pub fn tatarskii(cn2: T, inner_scale: T) -> Result<Self> {
        Self::new(cn2, inner_scale, T::infinity(), SpectrumModel::Tatarskii)
    }

    pub fn von_karman(cn2: T, inner_scale: T, outer_scale: T) -> Result<Self> {
        Self::new(cn2, inner_scale, outer_scale, SpectrumModel::VonKarman)
    }

    /// `l0 / 2 pi`, the length appearing in the Gaussian cutoff.
    #[inline]
    pub fn reduced_inner_scale(&self) -> T {
        self.inner_scale / T::TAU()
    }

    /// `L0^-2`, zero for Tatarskii.
    #[inline]
    fn outer_wavenumber_sq(&self) -> T {
        match self.model {
            SpectrumModel::Tatarskii => T::zero(),
            SpectrumModel::VonKarman => (self.outer_scale * self.outer_scale).recip(),
        }
    }

    /// Spectral density `psi(g)` in m^3 for a wavenumber magnitude `g`.
    pub fn spectrum(&self, g: T) -> Result<T> {
        if !(g >= T::zero()) {
            return Err(domain("spectrum", format!("wavenumber must be >= 0, got {g}")));
        }
        if g == T::zero() && self.model == SpectrumModel::Tatarskii {
            return Err(domain("spectrum", "Tatarskii spectrum diverges at g = 0"));
        }
        Ok(self.spectrum_unchecked(g))
    }

    /// Hot-path evaluation without argument checks.
    #[inline]
    pub fn spectrum_unchecked(&self, g: T) -> T {
        let l = self.reduced_inner_scale();
        let gl = g * l;
        let denom = (g * g + self.outer_wavenumber_sq()).powf(lit(11.0 / 6.0));
        lit::<T>(KOLMOGOROV_PREFACTOR) * self.cn2 * (-gl * gl).exp() / denom
    }

    /// Force spectral tensor `omega0^2 g_a g_b psi(|g|)` for a transverse wavevector.
    pub fn force_spectral_tensor(&self, g_vec: Vec2<T>, omega0: T) -> Result<[[T; 2]; 2]> {
        if !g_vec[0].is_finite() || !g_vec[1].is_finite() {
            return Err(domain("force_spectral_tensor", "wavevector must be finite"));
        }
        if !(omega0 > T::zero()) {
            return Err(domain("force_spectral_tensor", format!("omega0 must be > 0, got {omega0}")));
        }
        let psi = self.spectrum(g_vec[0].hypot(g_vec[1]))?;
        let w = omega0 * omega0 * psi;
        let off = w * g_vec[0] * g_vec[1];
        Ok([[w * g_vec[0] * g_vec[0], off], [off, w * g_vec[1] * g_vec[1]]])
    }

    /// Radial moment `int_0^inf g^n psi(g) dg`.
    ///
    /// Closed form for Tatarskii; adaptive quadrature for von Karman. `n` must
    /// exceed `8/3` for the Tatarskii integral to exist at `g = 0`.
    pub fn spectral_moment(&self, n: u32) -> T {
        let l = self.reduced_inner_scale();
        match self.model {
            SpectrumModel::Tatarskii => {
                let e: T = lit::<T>(f64::from(n)) - lit(8.0 / 3.0);
                let half = lit::<T>(0.5);
                lit::<T>(KOLMOGOROV_PREFACTOR) * self.cn2 * half * (half * e).gamma() * l.powf(-e)
            }
            SpectrumModel::VonKarman => {
                // g = u^3 / l keeps the integrand smooth at the origin.
                let u_max = lit::<T>(8.0).cbrt();
                let three = lit::<T>(3.0);
                let f = |u: T| {
                    let g = u * u * u / l;
                    g.powi(n as i32) * self.spectrum_unchecked(g) * three * u * u / l
                };
                let res = gauss_kronrod::adaptive(f, T::zero(), u_max, lit(1e-12), T::zero(), 200_000);
                res.estimate
            }
        }
    }

    /// Transverse momentum diffusion coefficient `D = 2 pi^2 int g^3 psi dg`.
    ///
    /// For a single trajectory the accumulated phase variance obeys
    /// `phi_PP = D int_0^z |q0 p + k z'|^2 dz'` and `<dq^2> = 2 D q0^2 z`.
    pub fn diffusion_coefficient(&self) -> T {
        lit::<T>(2.0) * T::PI() * T::PI() * self.spectral_moment(3)
    }
}
