//! Photon trajectories through a sequence of slab screens.
//!
//! In path-length form the equations of motion are `dr/dz = q / q0` and
//! `dq/dz = q0 grad n`. Each slab delivers its integrated gradient `G_i`
//! spread evenly over `n` kick-drift-kick substeps, so refining the step
//! changes only the integrator and never the field.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::field::{synthesize_field, FieldRealization, FieldSpec};
use crate::beam_source::BeamParams;
use crate::error::{Error, Result};
use crate::num::{axpy, lit, norm, norm_sq, to_f64, Real, Vec2};
use crate::turbulence::TurbulenceParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Photon<T> {
    /// Transverse position, m.
    pub r: Vec2<T>,
    /// Transverse momentum, m^-1.
    pub q: Vec2<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub z: T,
    pub photons: Vec<Photon<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsemble<T> {
    pub photons: Vec<Photon<T>>,
    /// Current path length, m.
    pub z: T,
    /// Largest substep used so far, m.
    pub step: T,
    /// States at slab boundaries when recording is enabled.
    pub history: Vec<Snapshot<T>>,
}

impl<T: Real> TrajectoryEnsemble<T> {
    pub fn new(photons: Vec<Photon<T>>, z: T) -> Self {
        Self {
            photons,
            z,
            step: T::zero(),
            history: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    /// Largest transverse displacement per substep, in units of `l0`.
    pub max_displacement: T,
    /// Extra refinement factor applied on top of the displacement rule.
    pub refine: usize,
    /// Keep a snapshot after each slab.
    pub record: bool,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            max_displacement: lit(0.25),
            refine: 1,
            record: false,
        }
    }
}

/// Samples `n` photons from the source: positions with per-axis width
/// `r0 / 2`, momenta with per-axis width `1 / r1`.
pub fn sample_source<T: Real>(beam: &BeamParams<T>, n: usize, seed: u64) -> TrajectoryEnsemble<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = Normal::new(0.0, to_f64(beam.r0) / 2.0).expect("finite width");
    let mom = Normal::new(0.0, 1.0 / to_f64(beam.r1())).expect("finite width");
    let photons = (0..n)
        .map(|_| Photon {
            r: [lit(pos.sample(&mut rng)), lit(pos.sample(&mut rng))],
            q: [lit(mom.sample(&mut rng)), lit(mom.sample(&mut rng))],
        })
        .collect();
    TrajectoryEnsemble::new(photons, T::zero())
}

/// One momentum kick: substep midpoint `z`, slab index, the substep's share
/// `weight` of the slab, and the slab gradient at the photon.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kick<T> {
    pub z: T,
    pub slab: usize,
    pub weight: T,
    pub gradient: Vec2<T>,
}

/// Moves every photon from `z_from` to `z_to` (either direction), calling
/// `on_kick(photon, kick)` at each kick and `on_slab(z, photons)` after each
/// slab. Returns the largest substep used.
pub(crate) fn advance<T, F>(
    photons: &mut [Photon<T>],
    field: &FieldRealization<T>,
    z_from: T,
    z_to: T,
    q0: T,
    inner_scale: T,
    ctl: &StepControl<T>,
    mut on_kick: F,
    mut on_slab: impl FnMut(T, &[Photon<T>]),
) -> Result<T>
where
    T: Real,
    F: FnMut(usize, Kick<T>),
{
    let dz = field.spec.slab_thickness;
    if z_from.min(z_to) < T::zero() || z_from.max(z_to) > field.length() * lit(1.0 + 1e-12) {
        return Err(Error::Configuration(format!(
            "path [{z_from}, {z_to}] leaves the synthesized field [0, {}]",
            field.length()
        )));
    }
    let forward = z_to >= z_from;
    let half = lit::<T>(0.5);
    let mut z = z_from;
    let mut largest = T::zero();
    while if forward { z < z_to } else { z > z_to } {
        // Segment inside the current slab.
        let last = field.slabs.len() - 1;
        let (i, end) = if forward {
            let mut i = field.slab_index(z);
            if i < last && lit::<T>((i + 1) as f64) * dz <= z {
                i += 1;
            }
            let end = if i == last { z_to } else { (lit::<T>((i + 1) as f64) * dz).min(z_to) };
            (i, end)
        } else {
            let mut i = field.slab_index(z);
            if i > 0 && lit::<T>(i as f64) * dz >= z {
                i -= 1;
            }
            let end = if i == 0 { z_to } else { (lit::<T>(i as f64) * dz).max(z_to) };
            (i, end)
        };
        let len = (end - z).abs();
        let qmax = photons.iter().map(|p| norm(p.q)).fold(T::zero(), T::max);
        let limit = ctl.max_displacement * inner_scale;
        let by_disp = to_f64(len * qmax / (q0 * limit)).ceil().max(1.0) as usize;
        let n = by_disp * ctl.refine.max(1);
        let h = (end - z) / lit::<T>(n as f64);
        largest = largest.max(h.abs());
        let w = h.abs() / dz;
        let slab = &field.slabs[i];
        for s in 0..n {
            let zm = z + (lit::<T>(s as f64) + half) * h;
            for (j, p) in photons.iter_mut().enumerate() {
                p.r = axpy(half * h / q0, p.q, p.r);
                let g = slab.gradient(p.r);
                let kick = [w * g[0], w * g[1]];
                on_kick(
                    j,
                    Kick {
                        z: zm,
                        slab: i,
                        weight: w,
                        gradient: g,
                    },
                );
                // dq = q0 G dz / slab in the direction of travel.
                let sign = if forward { q0 } else { -q0 };
                p.q = axpy(sign, kick, p.q);
                p.r = axpy(half * h / q0, p.q, p.r);
            }
        }
        if photons.iter().any(|p| p.r.iter().chain(&p.q).any(|v| !v.is_finite())) {
            return Err(Error::Configuration("trajectory became non-finite".into()));
        }
        z = end;
        on_slab(z, photons);
    }
    Ok(largest)
}

/// Propagates an ensemble through `field` up to `z_final`.
pub fn propagate<T: Real>(
    mut ensemble: TrajectoryEnsemble<T>,
    field: &FieldRealization<T>,
    z_final: T,
    turb: &TurbulenceParams<T>,
    q0: T,
    ctl: &StepControl<T>,
) -> Result<TrajectoryEnsemble<T>> {
    let mut history = std::mem::take(&mut ensemble.history);
    if ctl.record && history.is_empty() {
        history.push(Snapshot {
            z: ensemble.z,
            photons: ensemble.photons.clone(),
        });
    }
    let step = advance(
        &mut ensemble.photons,
        field,
        ensemble.z,
        z_final,
        q0,
        turb.inner_scale,
        ctl,
        |_, _| {},
        |z, ph| {
            if ctl.record {
                history.push(Snapshot { z, photons: ph.to_vec() });
            }
        },
    )?;
    ensemble.z = z_final;
    ensemble.step = ensemble.step.max(step);
    ensemble.history = history;
    Ok(ensemble)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub value: T,
    pub std_error: T,
    pub samples: usize,
}

impl<T: Real> McEstimate<T> {
    pub(crate) fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            value: lit(mean),
            std_error: lit((var / n).sqrt()),
            samples: xs.len(),
        }
    }

    /// `|value - target| <= k` standard errors, with a round-off floor.
    pub fn agrees_with(&self, target: T, k: T) -> bool {
        let floor = lit::<T>(1e-12) * target.abs().max(self.value.abs());
        (self.value - target).abs() <= k * self.std_error + floor
    }
}

/// Mean squared momentum change and mean squared radius after forward
/// propagation to `z`, each photon in its own field realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionEstimate<T> {
    pub dq2: McEstimate<T>,
    pub radius_sq: McEstimate<T>,
}

pub fn estimate_dq2<T: Real>(
    turb: &TurbulenceParams<T>,
    beam: &BeamParams<T>,
    spec: &FieldSpec<T>,
    z: T,
    photons: usize,
    seed: u64,
    ctl: &StepControl<T>,
) -> Result<DiffusionEstimate<T>> {
    if photons < 2 {
        return Err(Error::Configuration("need at least two photons".into()));
    }
    let source = sample_source(beam, photons, seed);
    let samples: Vec<Result<(f64, f64)>> = source
        .photons
        .par_iter()
        .enumerate()
        .map(|(i, p0)| {
            let field = synthesize_field(turb, spec, z, seed, i as u64)?;
            let mut ph = [*p0];
            advance(&mut ph, &field, T::zero(), z, beam.q0, turb.inner_scale, ctl, |_, _| {}, |_, _| {})?;
            let dq = [ph[0].q[0] - p0.q[0], ph[0].q[1] - p0.q[1]];
            Ok((to_f64(norm_sq(dq)), to_f64(norm_sq(ph[0].r))))
        })
        .collect();
    let mut dq2 = Vec::with_capacity(photons);
    let mut r2 = Vec::with_capacity(photons);
    for s in samples {
        let (a, b) = s?;
        dq2.push(a);
        r2.push(b);
    }
    Ok(DiffusionEstimate {
        dq2: McEstimate::from_samples(&dq2),
        radius_sq: McEstimate::from_samples(&r2),
    })
}
