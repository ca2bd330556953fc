//! Mean intensity, second moment and scintillation index of the received
//! beam, plus the beam-geometry diagnostics.
//!
//! After the diffuser and force averages, `<I^2>` is a Gaussian integral
//! over `(q, q', p, p', k, k')` weighted by `<M>`. Integrating the mean
//! momentum of the pair enforces `p + p' = -(k + k') z / q0`; with
//! `a = p + k z / q0` the remaining variables are `x = (a, k, k')` and the
//! momentum difference `d = q - q'`, which enters only through `exp(i d.a)`
//! and through the pair moments `T_n(|d|)`. In the frame aligned with `d`
//! the 6-dimensional Gaussian splits into two 3x3 problems, so for each
//! `|d|`
//!
//! ```text
//! F(d) = pref (2 pi)^3 det(M)^(-1/2) exp(-b^T M^-1 b / 2),   b = (d, -r, -r)
//! ```
//!
//! and `<I^2> = int d^2d [F_A(d) + F_B(d)]` for the two source terms. The
//! baselines with `phi_PP' = 0` are Gaussian in `d` and are integrated in
//! closed form; only the difference `F - F0` is integrated numerically.
//!
//! Normalisation constants common to `<I>` and `<I^2>` (photon number,
//! quantisation volume, density of states) are dropped: `<I>` is computed
//! as `(2 pi / r1^2)(pi / alpha) exp(-r^2 / 4 alpha)`, and `<I^2>` with the
//! matching prefactors `1 / r1^4` and `1 / (r0^2 r1^2)`.

use rayon::prelude::*;

use crate::beam_source::BeamParams;
use crate::error::{domain, Error, Result};
use crate::linalg::Cholesky;
use crate::num::{lit, norm_sq, to_f64, Real, Vec2};
use crate::quadrature::{gauss_kronrod, periodic_nodes, with_workers, IntegrationConfig, VecTolerance};
use crate::trajectory_kernel::{InnerCoefficients, Kernel, KernelMode, MomentTolerance};
use crate::turbulence::TurbulenceParams;

/// Default applicability floor for sweeps.
pub const DEFAULT_MIN_APPLICABILITY: f64 = 5.0;
/// Azimuthal nodes for off-axis detectors.
const OFF_AXIS_NODES: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationQuery<T> {
    /// Propagation distance, m.
    pub z: T,
    /// Detector offset from the axis, m.
    pub r_perp: Vec2<T>,
    pub mode: KernelMode,
    /// Replace `phi_PP'` by zero (uncorrelated trajectories).
    pub drop_pair_correlation: bool,
}

impl<T: Real> PropagationQuery<T> {
    pub fn on_axis(z: T, mode: KernelMode) -> Self {
        Self {
            z,
            r_perp: [T::zero(); 2],
            mode,
            drop_pair_correlation: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z > T::zero()) || !self.z.is_finite() {
            return Err(domain("PropagationQuery", format!("z must be finite and > 0, got {}", self.z)));
        }
        if self.r_perp.iter().any(|v| !v.is_finite()) {
            return Err(domain("PropagationQuery", "r_perp must be finite"));
        }
        Ok(())
    }
}

/// Estimate with an error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaCurvePoint<T> {
    pub z: T,
    /// `NaN` when the mode was not requested or failed.
    pub sigma2_correlated: T,
    pub sigma2_multiplicative: T,
    pub err_sigma2_correlated: T,
    pub err_sigma2_multiplicative: T,
    pub mean_intensity: T,
    pub dq2: T,
    pub beam_radius_sq: T,
    pub applicability_ratio: T,
    /// Below the configured applicability floor.
    pub below_applicability: bool,
    /// Per-mode failure messages.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions<T> {
    pub correlated: bool,
    pub multiplicative: bool,
    pub min_applicability: T,
    pub r_perp: Vec2<T>,
}

impl<T: Real> Default for SweepOptions<T> {
    fn default() -> Self {
        Self {
            correlated: true,
            multiplicative: true,
            min_applicability: lit(DEFAULT_MIN_APPLICABILITY),
            r_perp: [T::zero(); 2],
        }
    }
}

/// Per-axis 3x3 precision matrix over `(a, k, k')`.
type Mat3 = [[f64; 3]; 3];

fn add_rank_one(m: &mut Mat3, c: f64, alpha: [f64; 3]) {
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] += 2.0 * c * alpha[i] * alpha[j];
        }
    }
}

/// Which brace term of the second moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    A,
    B,
}

/// Gaussian data for one distance.
#[derive(Debug, Clone, Copy)]
struct Reduction {
    q0: f64,
    /// Source plus correlated-turbulence precision, per source term.
    base: [Mat3; 2],
    log_pref: [f64; 2],
    refs: [f64; 3],
}

impl Reduction {
    fn new<T: Real>(kernel: &Kernel<T>, z: f64) -> Self {
        let beam = &kernel.beam;
        let r0 = to_f64(beam.r0);
        let r1 = to_f64(beam.r1());
        let q0 = to_f64(beam.q0);
        let d = to_f64(kernel.diffusion_coefficient());
        let zq = z / q0;
        let (r0s, r1s) = (r0 * r0, r1 * r1);

        let mut a = [[0.0; 3]; 3];
        add_rank_one(&mut a, 0.5 / r1s, [1.0, -zq, 0.0]);
        add_rank_one(&mut a, 0.5 / r1s, [1.0, 0.0, zq]);
        a[1][1] += r0s / 4.0;
        a[2][2] += r0s / 4.0;

        let mut b = [[0.0; 3]; 3];
        add_rank_one(&mut b, 0.25 / r0s, [2.0, -zq, zq]);
        add_rank_one(&mut b, 0.25 / r1s, [0.0, zq, zq]);
        add_rank_one(&mut b, r0s / 16.0, [0.0, 1.0, 1.0]);
        add_rank_one(&mut b, r1s / 16.0, [0.0, 1.0, -1.0]);

        // Turbulence with fully correlated trajectories: (D z^3 / 6)|k + k'|^2.
        for m in [&mut a, &mut b] {
            add_rank_one(m, d * z * z * z / 6.0, [0.0, 1.0, 1.0]);
        }
        let refs = kernel.reference_moments(lit::<T>(z)).map(to_f64);
        Self {
            q0,
            base: [a, b],
            log_pref: [-2.0 * r1s.ln(), -(r0s.ln() + r1s.ln())],
            refs,
        }
    }

    /// Precision matrix for one axis given its three deficit moments.
    fn matrix(&self, src: Source, def: [f64; 3]) -> Mat3 {
        let mut m = self.base[src as usize];
        let tau = std::f64::consts::TAU;
        let q0 = self.q0;
        m[0][0] += 2.0 * tau * q0 * q0 * def[0];
        m[0][2] += tau * q0 * def[1];
        m[2][0] += tau * q0 * def[1];
        m[0][1] -= tau * q0 * def[1];
        m[1][0] -= tau * q0 * def[1];
        m[1][2] -= tau * def[2];
        m[2][1] -= tau * def[2];
        m
    }

    /// `(ln det, b^T M^-1 b)` for one axis, or an error if `M` is not positive definite.
    fn axis_terms(&self, m: &Mat3, b: [f64; 3]) -> Result<(f64, f64)> {
        let c = Cholesky::new(m).ok_or(Error::NotPositiveDefinite {
            context: "second-moment Gaussian",
        })?;
        Ok((c.log_det(), c.quad_inv(&b)))
    }

    /// `ln F` for separation `rho` along the unit direction `e`, detector at `r`.
    fn log_f(&self, src: Source, def_par: [f64; 3], def_perp: [f64; 3], rho: f64, e: [f64; 2], r: [f64; 2]) -> Result<f64> {
        let r_par = r[0] * e[0] + r[1] * e[1];
        let r_perp = -r[0] * e[1] + r[1] * e[0];
        let (ld1, q1) = self.axis_terms(&self.matrix(src, def_par), [rho, -r_par, -r_par])?;
        let (ld2, q2) = self.axis_terms(&self.matrix(src, def_perp), [0.0, -r_perp, -r_perp])?;
        let tau = std::f64::consts::TAU;
        Ok(self.log_pref[src as usize] + 3.0 * tau.ln() - 0.5 * (ld1 + ld2) - 0.5 * (q1 + q2))
    }

    /// Closed-form `int d^2d F0(d)` for the uncorrelated baseline.
    fn baseline_integral(&self, src: Source, r: [f64; 2]) -> Result<f64> {
        let m = self.matrix(src, self.refs);
        let c = Cholesky::new(&m).ok_or(Error::NotPositiveDefinite { context: "baseline Gaussian" })?;
        let w = |i: usize, j: usize| {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            c.solve(&e)[i]
        };
        let waa = w(0, 0);
        let cross = w(0, 1) + w(0, 2);
        let kk = w(1, 1) + 2.0 * w(1, 2) + w(2, 2);
        let tau = std::f64::consts::TAU;
        let log = self.log_pref[src as usize] + 3.0 * tau.ln() - c.log_det() + (tau / waa).ln()
            - 0.5 * norm_sq(r) * (kk - cross * cross / waa);
        Ok(log.exp())
    }

    /// Gaussian width of `F` in `|d|` for given deficits.
    fn rho_width(&self, src: Source, def: [f64; 3]) -> Option<f64> {
        let c = Cholesky::new(&self.matrix(src, def))?;
        Some(c.inv_diag(0).sqrt().recip())
    }
}

/// Scintillation model for one beam and turbulence configuration.
#[derive(Debug, Clone, Copy)]
pub struct Scintillation<T> {
    pub kernel: Kernel<T>,
    pub config: IntegrationConfig<T>,
    /// Global intensity scale; cancels in `sigma^2`.
    pub normalization: T,
}

impl<T: Real> Scintillation<T> {
    pub fn new(beam: BeamParams<T>, turbulence: TurbulenceParams<T>, config: IntegrationConfig<T>) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            kernel: Kernel::new(turbulence, beam),
            config,
            normalization: T::one(),
        })
    }

    pub fn with_coefficients(mut self, c: InnerCoefficients) -> Result<Self> {
        self.kernel = self.kernel.with_coefficients(c)?;
        Ok(self)
    }

    fn beam(&self) -> &BeamParams<T> {
        &self.kernel.beam
    }

    /// `alpha = z^2 / (2 q0^2 r1^2) + r0^2 / 8 + D z^3 / 6`.
    fn alpha(&self, z: T) -> T {
        let b = self.beam();
        let r1 = b.r1();
        z * z / (lit::<T>(2.0) * b.q0 * b.q0 * r1 * r1)
            + b.r0 * b.r0 / lit(8.0)
            + self.kernel.diffusion_coefficient() * z * z * z / lit(6.0)
    }

    /// Mean intensity `<I>(r, z)` in the model's units.
    pub fn mean_intensity(&self, query: &PropagationQuery<T>) -> Result<T> {
        query.validate()?;
        let a = self.alpha(query.z);
        let r1 = self.beam().r1();
        let pi = T::PI();
        Ok(self.normalization * (pi + pi) / (r1 * r1) * (pi / a) * (-norm_sq(query.r_perp) / (lit::<T>(4.0) * a)).exp())
    }

    /// Transverse momentum variance `2 D q0^2 z`.
    pub fn momentum_diffusion(&self, z: T) -> Result<T> {
        if !(z >= T::zero()) {
            return Err(domain("momentum_diffusion", format!("z must be >= 0, got {z}")));
        }
        let q0 = self.beam().q0;
        Ok(lit::<T>(2.0) * self.kernel.diffusion_coefficient() * q0 * q0 * z)
    }

    /// Mean-square beam radius `R^2 = (r0^2/2)[1 + 4 z^2/(q0^2 r0^2 r1^2) + 8 z^3 T / r0^2]`, `T = D / 6`.
    pub fn beam_radius_sq(&self, z: T) -> Result<T> {
        if !(z >= T::zero()) {
            return Err(domain("beam_radius_sq", format!("z must be >= 0, got {z}")));
        }
        Ok(lit::<T>(4.0) * self.alpha(z))
    }

    /// Ratio of the momentum spread to the momentum uncertainty of the beam.
    ///
    /// `sqrt(q_t^2 * 4 T z^3)`, where `q_t^2 = <dq^2> + 2/r1^2 - 2/r0^2` is the
    /// transverse momentum spread beyond the coherent diffraction limit.
    pub fn applicability_ratio(&self, z: T) -> Result<T> {
        if !(z > T::zero()) {
            return Err(domain("applicability_ratio", format!("z must be > 0, got {z}")));
        }
        let b = self.beam();
        let two = lit::<T>(2.0);
        let spread = self.momentum_diffusion(z)? + two / (b.r1() * b.r1()) - two / (b.r0 * b.r0);
        let t = self.kernel.diffusion_coefficient() / lit(6.0);
        Ok((spread * lit::<T>(4.0) * t * z * z * z).sqrt())
    }

    fn deficit_tolerance(&self, z: f64, tau: f64) -> MomentTolerance<T> {
        let b = self.beam();
        let (r0, q0) = (to_f64(b.r0), to_f64(b.q0));
        let s_aa = 2.0 / (r0 * r0);
        let s_kk = r0 * r0 / 8.0 + (z / q0).powi(2) / (2.0 * r0 * r0);
        let two_pi = std::f64::consts::TAU;
        MomentTolerance {
            rel: lit(tau),
            abs: [
                lit(tau * s_aa / (2.0 * two_pi * q0 * q0)),
                lit(tau * (s_aa * s_kk).sqrt() / (two_pi * q0)),
                lit(tau * s_kk / two_pi),
            ],
            max_evals: self.config.max_evals,
        }
    }

    /// `<I^2>` split into baseline and pair-correlation parts, normalised by `<I>^2`.
    fn normalized_second_moment(&self, query: &PropagationQuery<T>) -> Result<(Estimate<f64>, f64, f64)> {
        query.validate()?;
        let z = to_f64(query.z);
        let r = query.r_perp.map(to_f64);
        let mean = to_f64(self.mean_intensity(query)? / self.normalization);
        let mean_sq = mean * mean;
        let red = Reduction::new(&self.kernel, z);
        let a0 = red.baseline_integral(Source::A, r)? / mean_sq;
        let b0 = red.baseline_integral(Source::B, r)? / mean_sq;
        let cn2_zero = self.kernel.turbulence.cn2 == T::zero();
        if query.drop_pair_correlation || cn2_zero {
            let exact = Estimate {
                value: 0.0,
                error: 0.0,
                evals: 0,
                converged: true,
            };
            return Ok((exact, a0, b0));
        }

        let rel = to_f64(self.config.rel_tol);
        let tau = rel / 20.0;
        let tol = self.deficit_tolerance(z, tau);
        let mode = query.mode;
        let kernel = &self.kernel;
        let zt = query.z;

        let widths = [Source::A, Source::B]
            .into_iter()
            .flat_map(|s| [red.rho_width(s, red.refs), red.rho_width(s, [0.0; 3])])
            .collect::<Option<Vec<f64>>>()
            .ok_or(Error::NotPositiveDefinite { context: "rho width" })?;
        let rho_max = to_f64(self.config.truncation_sigmas) * widths.iter().cloned().fold(0.0, f64::max);
        let on_axis = norm_sq(r) == 0.0;
        let failure = std::sync::Mutex::new(None::<Error>);

        let integrand = |rho_t: T| -> [T; 3] {
            let rho = to_f64(rho_t);
            let eval = || -> Result<[f64; 3]> {
                let m = kernel.pair_moments(rho_t, zt, mode, tol)?;
                if !m.converged {
                    return Err(Error::Integration {
                        context: "pair moments",
                        estimate: f64::NAN,
                        error: m.error.iter().map(|&e| to_f64(e)).fold(0.0, f64::max),
                        evals: m.evals,
                    });
                }
                let def_par = m.deficit_parallel.map(to_f64);
                let def_perp = m.deficit_perpendicular.map(to_f64);
                let (dirs, weight): (Vec<[f64; 2]>, f64) = if on_axis {
                    (vec![[1.0, 0.0]], std::f64::consts::TAU)
                } else {
                    let nodes: Vec<_> = periodic_nodes(0.0, std::f64::consts::TAU, OFF_AXIS_NODES).collect();
                    let h = nodes[0].1;
                    (nodes.into_iter().map(|(t, _)| [t.cos(), t.sin()]).collect(), h)
                };
                let mut out = [0.0; 3];
                for e in dirs {
                    for (slot, src) in [(0usize, Source::A), (1, Source::B)] {
                        let lf = red.log_f(src, def_par, def_perp, rho, e, r)?;
                        let lf0 = red.log_f(src, red.refs, red.refs, rho, e, r)?;
                        let diff = lf0.exp() * (lf - lf0).exp_m1();
                        out[slot] += weight * rho * diff / mean_sq;
                        out[2] += weight * rho * diff.abs() / mean_sq;
                    }
                }
                Ok(out)
            };
            match eval() {
                Ok(v) => v.map(lit::<T>),
                Err(e) => {
                    let mut f = failure.lock().unwrap();
                    if f.is_none() {
                        *f = Some(e);
                    }
                    [T::zero(); 3]
                }
            }
        };

        let abs = lit::<T>(0.25 * rel);
        let res = gauss_kronrod::adaptive_vec(
            integrand,
            T::zero(),
            lit(rho_max),
            VecTolerance {
                rel: lit(rel),
                abs: [abs, abs, T::infinity()],
            },
            self.config.max_evals,
            true,
        );
        if let Some(e) = failure.into_inner().unwrap() {
            return Err(e);
        }
        let delta = to_f64(res.estimate[0]) + to_f64(res.estimate[1]);
        let outer = to_f64(res.error[0]) + to_f64(res.error[1]);
        let inner = tau * to_f64(res.estimate[2]);
        Ok((
            Estimate {
                value: delta,
                error: outer + inner,
                evals: res.evals,
                converged: res.converged,
            },
            a0,
            b0,
        ))
    }

    /// `<I^2>(r, z)`.
    pub fn second_moment(&self, query: &PropagationQuery<T>) -> Result<Estimate<T>> {
        let (delta, a0, b0) = self.normalized_second_moment(query)?;
        let mean = self.mean_intensity(query)?;
        let msq = mean * mean;
        Ok(Estimate {
            value: msq * lit::<T>(a0 + b0 + delta.value),
            error: msq * lit::<T>(delta.error),
            evals: delta.evals,
            converged: delta.converged,
        })
    }

    /// Scintillation index `(<I^2> - <I>^2) / <I>^2`.
    pub fn sigma2(&self, query: &PropagationQuery<T>) -> Result<Estimate<T>> {
        let (delta, a0, b0) = self.normalized_second_moment(query)?;
        Ok(Estimate {
            value: lit((a0 - 1.0) + b0 + delta.value),
            error: lit(delta.error),
            evals: delta.evals,
            converged: delta.converged,
        })
    }

    fn point(&self, z: T, opts: &SweepOptions<T>) -> SigmaCurvePoint<T> {
        let nan = T::nan();
        let mut pt = SigmaCurvePoint {
            z,
            sigma2_correlated: nan,
            sigma2_multiplicative: nan,
            err_sigma2_correlated: nan,
            err_sigma2_multiplicative: nan,
            mean_intensity: nan,
            dq2: nan,
            beam_radius_sq: nan,
            applicability_ratio: nan,
            below_applicability: false,
            failures: Vec::new(),
        };
        let q = PropagationQuery {
            z,
            r_perp: opts.r_perp,
            mode: KernelMode::Correlated,
            drop_pair_correlation: false,
        };
        match self.mean_intensity(&q) {
            Ok(v) => pt.mean_intensity = v,
            Err(e) => pt.failures.push(format!("mean_intensity: {e}")),
        }
        if let (Ok(dq2), Ok(r2), Ok(ratio)) = (self.momentum_diffusion(z), self.beam_radius_sq(z), self.applicability_ratio(z)) {
            pt.dq2 = dq2;
            pt.beam_radius_sq = r2;
            pt.applicability_ratio = ratio;
            pt.below_applicability = ratio < opts.min_applicability;
        }
        for (enabled, mode) in [(opts.correlated, KernelMode::Correlated), (opts.multiplicative, KernelMode::Multiplicative)] {
            if !enabled {
                continue;
            }
            let res = self.sigma2(&PropagationQuery { mode, ..q });
            match res {
                Ok(est) if est.converged => {
                    let (v, e) = match mode {
                        KernelMode::Correlated => (&mut pt.sigma2_correlated, &mut pt.err_sigma2_correlated),
                        KernelMode::Multiplicative => (&mut pt.sigma2_multiplicative, &mut pt.err_sigma2_multiplicative),
                    };
                    *v = est.value;
                    *e = est.error;
                }
                Ok(est) => pt.failures.push(format!(
                    "{}: tolerance not met (estimate {}, error {})",
                    mode.name(),
                    est.value,
                    est.error
                )),
                Err(e) => pt.failures.push(format!("{}: {e}", mode.name())),
            }
        }
        pt
    }

    /// Evaluates every distance; results follow input order.
    pub fn sweep(&self, z_list: &[T], opts: &SweepOptions<T>) -> Result<Vec<SigmaCurvePoint<T>>> {
        if z_list.iter().any(|z| !(*z > T::zero()) || !z.is_finite()) {
            return Err(domain("sweep", "every z must be finite and > 0"));
        }
        if z_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("sweep", "z values must be strictly increasing"));
        }
        let this = *self;
        let opts = *opts;
        Ok(with_workers(self.config.workers, move || {
            z_list.par_iter().map(|&z| this.point(z, &opts)).collect()
        }))
    }
}

/// `<I>` for a query; see [`Scintillation::mean_intensity`].
pub fn mean_intensity<T: Real>(
    query: &PropagationQuery<T>,
    beam: &BeamParams<T>,
    turb: &TurbulenceParams<T>,
    config: &IntegrationConfig<T>,
) -> Result<T> {
    Scintillation::new(*beam, *turb, *config)?.mean_intensity(query)
}

pub fn second_moment<T: Real>(
    query: &PropagationQuery<T>,
    beam: &BeamParams<T>,
    turb: &TurbulenceParams<T>,
    config: &IntegrationConfig<T>,
) -> Result<Estimate<T>> {
    Scintillation::new(*beam, *turb, *config)?.second_moment(query)
}

pub fn sigma2<T: Real>(
    query: &PropagationQuery<T>,
    beam: &BeamParams<T>,
    turb: &TurbulenceParams<T>,
    config: &IntegrationConfig<T>,
) -> Result<Estimate<T>> {
    Scintillation::new(*beam, *turb, *config)?.sigma2(query)
}

pub fn momentum_diffusion<T: Real>(z: T, beam: &BeamParams<T>, turb: &TurbulenceParams<T>) -> Result<T> {
    Scintillation::new(*beam, *turb, IntegrationConfig::default())?.momentum_diffusion(z)
}

pub fn beam_radius_sq<T: Real>(z: T, beam: &BeamParams<T>, turb: &TurbulenceParams<T>) -> Result<T> {
    Scintillation::new(*beam, *turb, IntegrationConfig::default())?.beam_radius_sq(z)
}

pub fn applicability_ratio<T: Real>(z: T, beam: &BeamParams<T>, turb: &TurbulenceParams<T>) -> Result<T> {
    Scintillation::new(*beam, *turb, IntegrationConfig::default())?.applicability_ratio(z)
}

pub fn sweep<T: Real>(
    z_list: &[T],
    beam: &BeamParams<T>,
    turb: &TurbulenceParams<T>,
    config: &IntegrationConfig<T>,
    opts: &SweepOptions<T>,
) -> Result<Vec<SigmaCurvePoint<T>>> {
    Scintillation::new(*beam, *turb, *config)?.sweep(z_list, opts)
}

#[cfg(test)]
mod tests;
