//! Random-mode synthesis of the transverse force field, one independent
//! screen per longitudinal slab.
//!
//! Slab `i` carries `G_i(r) = int_slab grad n dz`, a Gaussian-coefficient sum
//! of plane waves
//!
//! ```text
//! G_i(r) = sum_j e_j (a_j cos(g_j.r) + b_j sin(g_j.r)),   a_j, b_j ~ N(0, s^2)
//! ```
//!
//! with `e_j = g_j / |g_j|`, `|g_j|` drawn from the density `g^3 psi(g) / K3`
//! and `s^2 = 4 pi^2 dz K3 / M`. The covariance is then exactly
//! `2 pi dz int d^2g g g^T psi(g) cos(g.dr)` for any mode count `M`, and the
//! field is irrotational because every mode is parallel to its wavevector.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::num::{dot, lit, to_f64, Real, Vec2};
use crate::turbulence::{SpectrumModel, TurbulenceParams};

/// Discretisation of a synthetic field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec<T> {
    /// Longitudinal slab thickness, m.
    pub slab_thickness: T,
    /// Plane-wave modes per slab.
    pub modes: usize,
    /// Spacing of the sampling grid used for dumps and spatial checks, m.
    pub grid_spacing: T,
    /// Side length of the sampling grid, m.
    pub extent: T,
}

impl<T: Real> FieldSpec<T> {
    /// Slabs of `5 l0`, 64 modes, a grid of spacing `l0 / 4` and extent `64 l0`.
    pub fn for_turbulence(turb: &TurbulenceParams<T>) -> Self {
        let l0 = turb.inner_scale;
        Self {
            slab_thickness: lit::<T>(5.0) * l0,
            modes: 64,
            grid_spacing: l0 / lit(4.0),
            extent: lit::<T>(64.0) * l0,
        }
    }

    pub fn validate(&self, turb: &TurbulenceParams<T>) -> Result<()> {
        let l0 = turb.inner_scale;
        if !(self.slab_thickness > T::zero()) || !self.slab_thickness.is_finite() {
            return Err(Error::Configuration(format!(
                "slab thickness must be finite and > 0, got {}",
                self.slab_thickness
            )));
        }
        if self.modes == 0 {
            return Err(Error::Configuration("at least one mode per slab is required".into()));
        }
        if !(self.grid_spacing > T::zero()) || self.grid_spacing > l0 / lit(4.0) {
            return Err(Error::Configuration(format!(
                "grid spacing {} does not resolve l0 = {} (need <= l0/4)",
                self.grid_spacing, l0
            )));
        }
        if !(self.extent >= lit::<T>(50.0) * l0) || !self.extent.is_finite() {
            return Err(Error::Configuration(format!(
                "grid extent {} is smaller than 50 l0 = {}",
                self.extent,
                lit::<T>(50.0) * l0
            )));
        }
        Ok(())
    }

    /// Number of grid points per side.
    pub fn grid_points(&self) -> usize {
        (to_f64(self.extent / self.grid_spacing).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode<T> {
    /// Wavevector, m^-1.
    pub g: Vec2<T>,
    pub cos_amp: T,
    pub sin_amp: T,
}

/// Modes of one slab.
#[derive(Debug, Clone, PartialEq)]
pub struct Slab<T> {
    pub modes: Vec<Mode<T>>,
}

impl<T: Real> Slab<T> {
    /// Integrated index gradient `G(r)`, dimensionless.
    pub fn gradient(&self, r: Vec2<T>) -> Vec2<T> {
        let mut out = [T::zero(); 2];
        for m in &self.modes {
            let (s, c) = dot(m.g, r).sin_cos();
            let amp = (m.cos_amp * c + m.sin_amp * s) / m.g[0].hypot(m.g[1]);
            out[0] = out[0] + amp * m.g[0];
            out[1] = out[1] + amp * m.g[1];
        }
        out
    }
}

/// One realization of the field on `[0, slabs * slab_thickness]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization<T> {
    pub spec: FieldSpec<T>,
    pub seed: u64,
    pub index: u64,
    pub slabs: Vec<Slab<T>>,
}

impl<T: Real> FieldRealization<T> {
    pub fn length(&self) -> T {
        lit::<T>(self.slabs.len() as f64) * self.spec.slab_thickness
    }

    /// Slab containing path length `z`, clamped to the realization.
    pub fn slab_index(&self, z: T) -> usize {
        let i = to_f64(z / self.spec.slab_thickness).floor();
        (i.max(0.0) as usize).min(self.slabs.len().saturating_sub(1))
    }
}

/// Samples `|g|` from the density proportional to `g^3 psi(g)`.
pub(crate) struct WavenumberSampler {
    gamma: Gamma<f64>,
    inv_l: f64,
    outer_sq: f64,
}

impl WavenumberSampler {
    pub fn new<T: Real>(turb: &TurbulenceParams<T>) -> Self {
        let outer_sq = match turb.model {
            SpectrumModel::Tatarskii => 0.0,
            SpectrumModel::VonKarman => to_f64(turb.outer_scale).powi(-2),
        };
        Self {
            gamma: Gamma::new(1.0 / 6.0, 1.0).expect("valid gamma shape"),
            inv_l: 1.0 / to_f64(turb.reduced_inner_scale()),
            outer_sq,
        }
    }

    /// `g^2 l'^2 ~ Gamma(1/6)` for Tatarskii; von Karman thins that proposal
    /// by `(g^2 / (g^2 + L0^-2))^(11/6)`.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let g = self.gamma.sample(rng).sqrt() * self.inv_l;
            if self.outer_sq == 0.0 {
                if g > 0.0 {
                    return g;
                }
                continue;
            }
            let g2 = g * g;
            let accept = (g2 / (g2 + self.outer_sq)).powf(11.0 / 6.0);
            if rng.random::<f64>() < accept {
                return g;
            }
        }
    }
}

/// Independent stream for one slab of one realization.
pub(crate) fn slab_rng(seed: u64, realization: u64, slab: u64) -> ChaCha8Rng {
    let key = seed ^ realization.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(slab);
    rng
}

/// Synthesizes realization `index` covering at least `[0, length]`.
pub fn synthesize_field<T: Real>(
    turb: &TurbulenceParams<T>,
    spec: &FieldSpec<T>,
    length: T,
    seed: u64,
    index: u64,
) -> Result<FieldRealization<T>> {
    spec.validate(turb)?;
    if !(length >= T::zero()) || !length.is_finite() {
        return Err(Error::Configuration(format!("field length must be finite and >= 0, got {length}")));
    }
    let n_slabs = (to_f64(length / spec.slab_thickness).ceil() as usize).max(1);
    let k3 = to_f64(turb.spectral_moment(3));
    let sigma = (4.0 * std::f64::consts::PI.powi(2) * to_f64(spec.slab_thickness) * k3 / spec.modes as f64).sqrt();
    let sampler = WavenumberSampler::new(turb);
    let slabs = (0..n_slabs)
        .map(|i| {
            if sigma == 0.0 {
                return Slab { modes: Vec::new() };
            }
            let mut rng = slab_rng(seed, index, i as u64);
            let modes = (0..spec.modes)
                .map(|_| {
                    let g = sampler.sample(&mut rng);
                    let phi = std::f64::consts::TAU * rng.random::<f64>();
                    let a: f64 = StandardNormal.sample(&mut rng);
                    let b: f64 = StandardNormal.sample(&mut rng);
                    Mode {
                        g: [lit(g * phi.cos()), lit(g * phi.sin())],
                        cos_amp: lit(sigma * a),
                        sin_amp: lit(sigma * b),
                    }
                })
                .collect();
            Slab { modes }
        })
        .collect();
    Ok(FieldRealization {
        spec: *spec,
        seed,
        index,
        slabs,
    })
}

/// Radial power of a slab's modes in the bins `edges[i]..edges[i+1]`,
/// divided by the bin width.
pub fn radial_power<T: Real>(slab: &Slab<T>, edges: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; edges.len().saturating_sub(1)];
    for m in &slab.modes {
        let g = to_f64(m.g[0].hypot(m.g[1]));
        let p = 0.5 * (to_f64(m.cos_amp).powi(2) + to_f64(m.sin_amp).powi(2));
        if let Some(i) = edges.windows(2).position(|w| g >= w[0] && g < w[1]) {
            out[i] += p;
        }
    }
    for (o, w) in out.iter_mut().zip(edges.windows(2)) {
        *o /= w[1] - w[0];
    }
    out
}

/// Expected radial power density `4 pi^2 dz g^3 psi(g)` of [`radial_power`].
pub fn radial_power_target<T: Real>(turb: &TurbulenceParams<T>, slab_thickness: T, g: T) -> T {
    lit::<T>(4.0) * T::PI() * T::PI() * slab_thickness * g * g * g * turb.spectrum_unchecked(g)
}
