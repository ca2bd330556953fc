//! Direct estimate of the cross-trajectory functional `phi_PP'`.
//!
//! Both photons are traced back from a common detector point, and along
//! each one the phase `Phi = sum v(z_m) . w G_i(r(z_m))` is accumulated with
//! `v(z) = q0 p + k z`. Then `phi_PP' = <Phi_P Phi_P'>`. Sampling that product
//! directly is noisy, so the estimator is written as
//!
//! ```text
//! <Phi_P Phi_P'> = <Phi_P Phi_P^0> - <Phi_P (Phi_P^0 - Phi_P')>
//! ```
//!
//! where `Phi_P^0` weights `P`'s own kicks with `v'`. The first term is known
//! exactly: a slab's field is independent of where the slabs closer to the
//! detector moved the photon, so it equals `D dz sum_i V_i . V'_i` with `V_i`
//! the weighted sum of `v` over the kicks of slab `i`. Only the small
//! decorrelation term is sampled.

use rayon::prelude::*;

use super::field::{synthesize_field, FieldSpec};
use super::trajectory::{advance, McEstimate, Photon, StepControl};
use crate::error::{Error, Result};
use crate::num::{dot, to_f64, Real, Vec2};
use crate::trajectory_kernel::PhasePoint;
use crate::turbulence::TurbulenceParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOracleConfig<T> {
    pub field: FieldSpec<T>,
    pub realizations: usize,
    pub seed: u64,
    pub step: StepControl<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEstimate<T> {
    /// Estimate of `phi_PP'` with its standard error.
    pub phi: McEstimate<T>,
    /// Fully correlated value `<Phi_P Phi_P^0>`, averaged over realizations.
    pub reference: T,
}

fn weight<T: Real>(pt: &PhasePoint<T>, q0: T, z: T) -> Vec2<f64> {
    [
        to_f64(q0 * pt.p[0] + pt.k[0] * z),
        to_f64(q0 * pt.p[1] + pt.k[1] * z),
    ]
}

/// Estimates `phi_PP'` at detector distance `z` for every pair; all pairs
/// share the same field realizations.
pub fn estimate_phi_pairs<T: Real>(
    turb: &TurbulenceParams<T>,
    q0: T,
    pairs: &[(PhasePoint<T>, PhasePoint<T>)],
    z: T,
    cfg: &PairOracleConfig<T>,
) -> Result<Vec<PairEstimate<T>>> {
    if cfg.realizations < 2 {
        return Err(Error::Configuration("need at least two realizations".into()));
    }
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::Configuration(format!("z must be finite and > 0, got {z}")));
    }
    let d_dz = to_f64(turb.diffusion_coefficient() * cfg.field.slab_thickness);
    let n = pairs.len();
    let samples: Vec<Result<Vec<(f64, f64)>>> = (0..cfg.realizations)
        .into_par_iter()
        .map(|r| {
            let field = synthesize_field(turb, &cfg.field, z, cfg.seed, r as u64)?;
            let mut photons: Vec<Photon<T>> = pairs
                .iter()
                .flat_map(|(a, b)| {
                    [
                        Photon { r: [T::zero(); 2], q: a.q },
                        Photon { r: [T::zero(); 2], q: b.q },
                    ]
                })
                .collect();
            // Per pair: Phi_P, Phi_P^0, Phi_P'.
            let mut phase = vec![[0.0f64; 3]; n];
            // Per pair and slab: weighted phase vectors V_i and V'_i.
            let mut slab_v: Vec<Vec<[f64; 4]>> = vec![vec![[0.0; 4]; field.slabs.len()]; n];
            advance(
                &mut photons,
                &field,
                z,
                T::zero(),
                q0,
                turb.inner_scale,
                &cfg.step,
                |j, kick| {
                    let (a, b) = &pairs[j / 2];
                    let g = [to_f64(kick.gradient[0]), to_f64(kick.gradient[1])];
                    let w = to_f64(kick.weight);
                    let vb = weight(b, q0, kick.z);
                    if j % 2 == 0 {
                        let va = weight(a, q0, kick.z);
                        let ph = &mut phase[j / 2];
                        ph[0] += w * (va[0] * g[0] + va[1] * g[1]);
                        ph[1] += w * (vb[0] * g[0] + vb[1] * g[1]);
                        let acc = &mut slab_v[j / 2][kick.slab];
                        acc[0] += w * va[0];
                        acc[1] += w * va[1];
                        acc[2] += w * vb[0];
                        acc[3] += w * vb[1];
                    } else {
                        phase[j / 2][2] += w * (vb[0] * g[0] + vb[1] * g[1]);
                    }
                },
                |_, _| {},
            )?;
            Ok((0..n)
                .map(|k| {
                    let reference: f64 = slab_v[k].iter().map(|v| d_dz * dot([v[0], v[1]], [v[2], v[3]])).sum();
                    let p = phase[k];
                    (reference, reference - p[0] * (p[1] - p[2]))
                })
                .collect())
        })
        .collect();
    let mut refs = vec![Vec::with_capacity(cfg.realizations); n];
    let mut vals = vec![Vec::with_capacity(cfg.realizations); n];
    for s in samples {
        for (k, (r, v)) in s?.into_iter().enumerate() {
            refs[k].push(r);
            vals[k].push(v);
        }
    }
    Ok((0..n)
        .map(|k| PairEstimate {
            phi: McEstimate::from_samples(&vals[k]),
            reference: McEstimate::<T>::from_samples(&refs[k]).value,
        })
        .collect())
}

/// Single-pair form of [`estimate_phi_pairs`].
pub fn estimate_phi_pair<T: Real>(
    turb: &TurbulenceParams<T>,
    q0: T,
    a: &PhasePoint<T>,
    b: &PhasePoint<T>,
    z: T,
    cfg: &PairOracleConfig<T>,
) -> Result<PairEstimate<T>> {
    Ok(estimate_phi_pairs(turb, q0, &[(*a, *b)], z, cfg)?[0])
}
