//! Force-correlation functionals along photon trajectories.
//!
//! All time variables are path lengths: `z = c t` and `zeta = c (t - t')`.
//! With the force `F = q0 grad n` and a delta-correlated index along the
//! axis, the double time integral of the force correlator collapses to
//! `2 pi int dz' int d^2g psi(g) (...)`; the `1 / c` of the time-domain
//! delta function cancels against `dt = dz / c`, so `c` never appears.
//!
//! Along one trajectory the phase weight is `v(z') = q0 p + k z'`, and
//!
//! ```text
//! phi_PP  = D int_0^z |v(z')|^2 dz'                        D = 2 pi^2 K3
//! phi_PP' = 2 pi int_0^z ds v(z-s)^T T(s, q - q') v'(z-s)
//! T(s, d) = int d^2g psi(g) g g^T cos(s g.d / q0) exp(E(g, s, |d|))
//! ```
//!
//! where `K_n = int g^n psi(g) dg` and `E` is the inner decorrelation
//! exponent. `T` is diagonal in the frame aligned with `d`; its moments
//! `T_n = int_0^z s^n T ds` are computed as the isotropic reference
//! `pi K3 z^(n+1) / (n+1)` minus a deficit that vanishes when the two
//! trajectories stay correlated.

use crate::beam_source::BeamParams;
use crate::error::{domain, invalid, Error, Result};
use crate::num::{dot, lit, norm, to_f64, Real, Vec2};
use crate::quadrature::{genz_malik, IntegrationConfig, VecTolerance};
use crate::turbulence::{SpectrumModel, TurbulenceParams};

pub mod reference;

/// Angular factor of the inner exponent below which the integrand is zero
/// to double precision.
const NEGLIGIBLE_EXPONENT: f64 = -40.0;
/// Upper limit of the `g` integration in units of `1 / l0'` (`g_max = 8 * 2 pi / l0`).
const G_MAX_REDUCED: f64 = 8.0;
/// Cap on angular nodes per quarter period.
const MAX_ANGULAR_NODES: usize = 4096;

/// One trajectory's integration variables `{q, p, k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<T> {
    /// Transverse photon momentum, m^-1.
    pub q: Vec2<T>,
    /// Conjugate Gaussian-transform variable, m.
    pub p: Vec2<T>,
    /// Intensity-Fourier variable, m^-1.
    pub k: Vec2<T>,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(q: Vec2<T>, p: Vec2<T>, k: Vec2<T>) -> Result<Self> {
        if q.iter().chain(&p).chain(&k).any(|v| !v.is_finite()) {
            return Err(invalid("PhasePoint", "all components must be finite"));
        }
        Ok(Self { q, p, k })
    }

    /// Phase weight `q0 p + k z` at the detector plane.
    fn weight_at(&self, q0: T, z: T) -> Vec2<T> {
        [q0 * self.p[0] + self.k[0] * z, q0 * self.p[1] + self.k[1] * z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelMode {
    /// Joint average of the two displacements, iterated once.
    Correlated,
    /// Product of single-trajectory averages.
    Multiplicative,
}

impl KernelMode {
    pub fn name(self) -> &'static str {
        match self {
            KernelMode::Correlated => "correlated",
            KernelMode::Multiplicative => "multiplicative",
        }
    }
}

/// Numerical constants of the closed-form inner exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InnerCoefficients {
    /// `pi^2 K5 / 60` and `pi^2 K5 / 84` from the spectral moment, valid for
    /// any spectrum.
    #[default]
    Derived,
    /// Rounded literature constants `2.52e-3` and `1/560`; Tatarskii only.
    Printed,
}

/// Moments `T_n`, `n = 0, 1, 2`, along and across the separation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMoments<T> {
    pub parallel: [T; 3],
    pub perpendicular: [T; 3],
    /// Deficits relative to the isotropic reference, same layout.
    pub deficit_parallel: [T; 3],
    pub deficit_perpendicular: [T; 3],
    /// Error estimates of the deficits, `[par0, par1, par2, perp0, perp1, perp2]`.
    pub error: [T; 6],
    pub evals: usize,
    pub converged: bool,
}

/// Real part of `phi_PP'` with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairValue<T> {
    pub value: T,
    pub error_estimate: T,
    /// Magnitude of the imaginary part found by an unsymmetrised angular grid.
    pub imaginary_residue: T,
}

/// Absolute tolerances on the deficit moments, one per power of `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTolerance<T> {
    pub rel: T,
    pub abs: [T; 3],
    pub max_evals: usize,
}

/// Precomputed kernel for one turbulence and beam configuration.
#[derive(Debug, Clone, Copy)]
pub struct Kernel<T> {
    pub turbulence: TurbulenceParams<T>,
    pub beam: BeamParams<T>,
    pub coefficients: InnerCoefficients,
    k3: T,
    diffusion: T,
    base_coef: T,
    nested_coef: T,
    l_reduced: T,
}

impl<T: Real> Kernel<T> {
    pub fn new(turbulence: TurbulenceParams<T>, beam: BeamParams<T>) -> Self {
        let k3 = turbulence.spectral_moment(3);
        let k5 = turbulence.spectral_moment(5);
        let pi2 = T::PI() * T::PI();
        Self {
            turbulence,
            beam,
            coefficients: InnerCoefficients::Derived,
            k3,
            diffusion: lit::<T>(2.0) * pi2 * k3,
            base_coef: pi2 * k5 / lit(60.0),
            nested_coef: pi2 * k5 / lit(84.0),
            l_reduced: turbulence.reduced_inner_scale(),
        }
    }

    pub fn with_coefficients(mut self, coefficients: InnerCoefficients) -> Result<Self> {
        match coefficients {
            InnerCoefficients::Derived => self = Self::new(self.turbulence, self.beam),
            InnerCoefficients::Printed => {
                if self.turbulence.model != SpectrumModel::Tatarskii {
                    return Err(invalid(
                        "inner_coefficients",
                        "printed constants assume the Tatarskii spectrum",
                    ));
                }
                let s = self.turbulence.cn2 * self.l_reduced.powf(lit(-7.0 / 3.0));
                self.base_coef = lit::<T>(2.52e-3) * s;
                self.nested_coef = s / lit(560.0);
                self.coefficients = InnerCoefficients::Printed;
            }
        }
        Ok(self)
    }

    /// `D = 2 pi^2 K3`.
    pub fn diffusion_coefficient(&self) -> T {
        self.diffusion
    }

    /// Isotropic reference `pi K3`, the value of `T(s, 0)` per component.
    pub fn isotropic_strength(&self) -> T {
        T::PI() * self.k3
    }

    /// Inner exponent split as `E0 + E2 cos 2 theta`.
    #[inline]
    fn exponent_split(&self, g: T, dq: T, zeta: T, mode: KernelMode) -> (T, T) {
        match mode {
            KernelMode::Correlated => {
                let u = dq / self.beam.q0;
                let s2 = zeta * zeta;
                let base = -self.base_coef * s2 * s2 * zeta * g * g * u * u;
                let x = self.nested_coef * s2 * zeta;
                (base * (T::one() + x), base * (lit::<T>(0.5) + lit::<T>(0.25) * x))
            }
            KernelMode::Multiplicative => (-self.diffusion / lit(3.0) * g * g * zeta * zeta * zeta, T::zero()),
        }
    }

    /// Closed-form decorrelation exponent of the correlated mode.
    ///
    /// `theta` is the angle between `g` and `q - q'`; `zeta` the path length
    /// between the two force evaluations.
    pub fn inner_exponent(&self, g: T, theta: T, dq: T, zeta: T) -> Result<T> {
        if !(zeta >= T::zero()) {
            return Err(domain("inner_exponent", format!("zeta must be >= 0, got {zeta}")));
        }
        if !(g >= T::zero()) || !(dq >= T::zero()) {
            return Err(domain("inner_exponent", "g and dq must be >= 0"));
        }
        let (e0, e2) = self.exponent_split(g, dq, zeta, KernelMode::Correlated);
        Ok(e0 + e2 * (theta + theta).cos())
    }

    /// Exponent used by `mode`; the multiplicative one ignores `theta` and `dq`.
    pub fn mode_exponent(&self, g: T, theta: T, dq: T, zeta: T, mode: KernelMode) -> Result<T> {
        match mode {
            KernelMode::Correlated => self.inner_exponent(g, theta, dq, zeta),
            KernelMode::Multiplicative => {
                if !(zeta >= T::zero()) {
                    return Err(domain("inner_exponent", format!("zeta must be >= 0, got {zeta}")));
                }
                Ok(self.exponent_split(g, dq, zeta, mode).0)
            }
        }
    }

    /// `D int_0^z (q0 p + k z')(q0 p' + k' z') dz'`.
    pub fn phi_self_bilinear(&self, a: &PhasePoint<T>, b: &PhasePoint<T>, z: T) -> Result<T> {
        if !(z >= T::zero()) {
            return Err(domain("phi_self", format!("z must be >= 0, got {z}")));
        }
        let q0 = self.beam.q0;
        let half = lit::<T>(0.5);
        let third = lit::<T>(1.0 / 3.0);
        let v = q0 * q0 * dot(a.p, b.p) * z
            + q0 * (dot(a.p, b.k) + dot(a.k, b.p)) * half * z * z
            + dot(a.k, b.k) * third * z * z * z;
        Ok(self.diffusion * v)
    }

    /// Single-trajectory functional `phi_PP >= 0`.
    pub fn phi_self(&self, point: &PhasePoint<T>, z: T) -> Result<T> {
        Ok(self.phi_self_bilinear(point, point, z)?.max(T::zero()))
    }

    fn angular_deficit(&self, e0: T, e2: T, x: T, mode: KernelMode) -> (T, T) {
        let pi = T::PI();
        if to_f64(e0 + e2.abs()) < NEGLIGIBLE_EXPONENT {
            return (pi, pi);
        }
        match mode {
            KernelMode::Multiplicative => {
                let xf = to_f64(x);
                let (j0, j2) = (libm::j0(xf), libm::jn(2, xf));
                let loss = -e0.exp_m1();
                let keep = e0.exp();
                (
                    pi * (loss + keep * lit::<T>(1.0 - j0 + j2)),
                    pi * (loss + keep * lit::<T>(1.0 - j0 - j2)),
                )
            }
            KernelMode::Correlated => {
                let band = to_f64(x) + 2.0 * to_f64(e2.abs());
                let n = (6 + (band / 3.0).ceil() as usize).min(MAX_ANGULAR_NODES);
                let h = lit::<T>(std::f64::consts::FRAC_PI_2 / n as f64);
                let half = lit::<T>(0.5);
                let two = lit::<T>(2.0);
                let mut par = T::zero();
                let mut perp = T::zero();
                for i in 0..n {
                    let th = (lit::<T>(i as f64) + half) * h;
                    let (s, c) = th.sin_cos();
                    let e = e0 + e2 * (c * c - s * s);
                    let osc = (half * x * c).sin();
                    let term = -e.exp_m1() + e.exp() * two * osc * osc;
                    par = par + c * c * term;
                    perp = perp + s * s * term;
                }
                let w = lit::<T>(4.0) * h;
                (w * par, w * perp)
            }
        }
    }

    /// Integrand of the deficit moments over `(s, u)` with `g = u^3 / l0'`.
    fn deficit_integrand(&self, s: T, u: T, rho: T, mode: KernelMode) -> [T; 6] {
        let l = self.l_reduced;
        let g = u * u * u / l;
        let jac = lit::<T>(3.0) * u * u / l;
        let w = g * g * g * self.turbulence.spectrum_unchecked(g) * jac;
        if !(w > T::zero()) {
            return [T::zero(); 6];
        }
        let x = g * s * rho / self.beam.q0;
        let (e0, e2) = self.exponent_split(g, rho, s, mode);
        let (dp, dn) = self.angular_deficit(e0, e2, x, mode);
        let (a, b) = (w * dp, w * dn);
        [a, a * s, a * s * s, b, b * s, b * s * s]
    }

    /// Moments `T_n(rho)` on `[0, z]` for a pair at momentum separation `rho`.
    pub fn pair_moments(&self, rho: T, z: T, mode: KernelMode, tol: MomentTolerance<T>) -> Result<PairMoments<T>> {
        if !(z >= T::zero()) || !(rho >= T::zero()) {
            return Err(domain("pair_moments", "z and rho must be >= 0"));
        }
        let refs = self.reference_moments(z);
        let zero = [T::zero(); 3];
        let trivially_correlated = mode == KernelMode::Correlated && rho == T::zero();
        if z == T::zero() || self.turbulence.cn2 == T::zero() || trivially_correlated {
            return Ok(PairMoments {
                parallel: refs,
                perpendicular: refs,
                deficit_parallel: zero,
                deficit_perpendicular: zero,
                error: [T::zero(); 6],
                evals: 0,
                converged: true,
            });
        }
        let abs = [tol.abs[0], tol.abs[1], tol.abs[2], tol.abs[0], tol.abs[1], tol.abs[2]];
        let r = genz_malik::integrate_vec(
            |x: &[T]| self.deficit_integrand(x[0], x[1], rho, mode),
            &[T::zero(), T::zero()],
            &[z, lit::<T>(G_MAX_REDUCED).cbrt()],
            VecTolerance { rel: tol.rel, abs },
            tol.max_evals,
            false,
        );
        let d = r.estimate;
        let dp = [d[0], d[1], d[2]];
        let dn = [d[3], d[4], d[5]];
        Ok(PairMoments {
            parallel: [refs[0] - dp[0], refs[1] - dp[1], refs[2] - dp[2]],
            perpendicular: [refs[0] - dn[0], refs[1] - dn[1], refs[2] - dn[2]],
            deficit_parallel: dp,
            deficit_perpendicular: dn,
            error: r.error,
            evals: r.evals,
            converged: r.converged,
        })
    }

    /// `pi K3 z^(n+1) / (n+1)`.
    pub fn reference_moments(&self, z: T) -> [T; 3] {
        let c = self.isotropic_strength();
        [c * z, c * z * z / lit(2.0), c * z * z * z / lit(3.0)]
    }

    /// Unit vector along `q - q'` (x axis when the momenta coincide).
    fn frame(a: &PhasePoint<T>, b: &PhasePoint<T>) -> (T, Vec2<T>) {
        let d = [a.q[0] - b.q[0], a.q[1] - b.q[1]];
        let rho = norm(d);
        if rho > T::zero() {
            (rho, [d[0] / rho, d[1] / rho])
        } else {
            (T::zero(), [T::one(), T::zero()])
        }
    }

    /// `sum_n` bilinear of deficit moments with the phase weights, in the pair frame.
    fn deficit_bilinear(m: &PairMoments<T>, e: Vec2<T>, aw: Vec2<T>, ak: Vec2<T>, bw: Vec2<T>, bk: Vec2<T>) -> (T, T) {
        let perp = [-e[1], e[0]];
        let mut total = T::zero();
        let mut err = T::zero();
        for (axis, dm, off) in [(e, m.deficit_parallel, 0), (perp, m.deficit_perpendicular, 3)] {
            let (a, ka, b, kb) = (dot(aw, axis), dot(ak, axis), dot(bw, axis), dot(bk, axis));
            let c0 = a * b;
            let c1 = -(a * kb + ka * b);
            let c2 = ka * kb;
            total = total + c0 * dm[0] + c1 * dm[1] + c2 * dm[2];
            err = err + c0.abs() * m.error[off] + c1.abs() * m.error[off + 1] + c2.abs() * m.error[off + 2];
        }
        (total, err)
    }

    fn moment_tolerance(&self, a: &PhasePoint<T>, b: &PhasePoint<T>, z: T, cfg: &IntegrationConfig<T>) -> MomentTolerance<T> {
        // Scale each deficit tolerance by the weight it multiplies so every
        // term contributes comparably to the error of phi_PP'.
        let q0 = self.beam.q0;
        let aw = norm(a.weight_at(q0, z)).max(norm(b.weight_at(q0, z)));
        let kw = norm(a.k).max(norm(b.k));
        let refs = self.reference_moments(z);
        let scale = aw * aw * refs[0] + lit::<T>(2.0) * aw * kw * refs[1] + kw * kw * refs[2];
        let tiny = lit::<T>(1e-300);
        let t = cfg.rel_tol * scale / lit(3.0);
        MomentTolerance {
            rel: cfg.rel_tol,
            abs: [
                (t / (aw * aw)).max(cfg.abs_tol).max(tiny),
                (t / (aw * kw)).max(cfg.abs_tol).max(tiny),
                (t / (kw * kw)).max(cfg.abs_tol).max(tiny),
            ],
            max_evals: cfg.max_evals,
        }
    }

    /// Cross-trajectory functional `phi_PP'`, real part.
    pub fn phi_pair(
        &self,
        a: &PhasePoint<T>,
        b: &PhasePoint<T>,
        z: T,
        mode: KernelMode,
        cfg: &IntegrationConfig<T>,
    ) -> Result<PairValue<T>> {
        cfg.validate()?;
        let reference = self.phi_self_bilinear(a, b, z)?;
        let (rho, e) = Self::frame(a, b);
        let m = self.pair_moments(rho, z, mode, self.moment_tolerance(a, b, z, cfg))?;
        let q0 = self.beam.q0;
        let (def, err) = Self::deficit_bilinear(&m, e, a.weight_at(q0, z), a.k, b.weight_at(q0, z), b.k);
        let two_pi = T::PI() + T::PI();
        let value = reference - two_pi * def;
        let error_estimate = two_pi * err;
        if !m.converged {
            return Err(Error::Integration {
                context: "phi_pair",
                estimate: to_f64(value),
                error: to_f64(error_estimate),
                evals: m.evals,
            });
        }
        let imaginary_residue = self.imaginary_part(a, b, z, mode).abs();
        let floor = lit::<T>(1e-12) * (reference.abs() + two_pi * def.abs());
        if imaginary_residue > lit::<T>(10.0) * error_estimate + floor {
            return Err(Error::Integration {
                context: "phi_pair imaginary part",
                estimate: to_f64(imaginary_residue),
                error: to_f64(error_estimate),
                evals: m.evals,
            });
        }
        Ok(PairValue {
            value,
            error_estimate,
            imaginary_residue,
        })
    }

    /// Imaginary part of `phi_PP'` on a fixed product grid with an odd number
    /// of angular nodes, so opposite directions are never paired.
    fn imaginary_part(&self, a: &PhasePoint<T>, b: &PhasePoint<T>, z: T, mode: KernelMode) -> T {
        let (rho, e) = Self::frame(a, b);
        if rho == T::zero() || z == T::zero() {
            return T::zero();
        }
        const NS: usize = 24;
        const NU: usize = 24;
        const NT: usize = 63;
        let q0 = self.beam.q0;
        let l = self.l_reduced;
        let u_max = lit::<T>(G_MAX_REDUCED).cbrt();
        let hs = z / lit(NS as f64);
        let hu = u_max / lit(NU as f64);
        let ht = lit::<T>(std::f64::consts::TAU / NT as f64);
        let half = lit::<T>(0.5);
        let mut total = T::zero();
        for i in 0..NS {
            let s = (lit::<T>(i as f64) + half) * hs;
            let va = [a.p[0] * q0 + a.k[0] * (z - s), a.p[1] * q0 + a.k[1] * (z - s)];
            let vb = [b.p[0] * q0 + b.k[0] * (z - s), b.p[1] * q0 + b.k[1] * (z - s)];
            for j in 0..NU {
                let u = (lit::<T>(j as f64) + half) * hu;
                let g = u * u * u / l;
                let w = g * self.turbulence.spectrum_unchecked(g) * lit::<T>(3.0) * u * u / l;
                let (e0, e2) = self.exponent_split(g, rho, s, mode);
                for t in 0..NT {
                    let th = lit::<T>(t as f64) * ht;
                    let (sn, cs) = th.sin_cos();
                    let gv = [g * (cs * e[0] - sn * e[1]), g * (sn * e[0] + cs * e[1])];
                    let phase = g * s * rho * cs / q0;
                    let ex = e0 + e2 * (cs * cs - sn * sn);
                    total = total + w * dot(gv, va) * dot(gv, vb) * phase.sin() * ex.exp();
                }
            }
        }
        (T::PI() + T::PI()) * total * hs * hu * ht
    }

    /// `<M> = exp(-(phi_PP + 2 phi_PP' + phi_P'P') / 2)`.
    ///
    /// The exponent is assembled as `D int |v + v'|^2 - 4 pi (deficit)` so the
    /// super-correlated configuration gives exactly zero.
    pub fn average_m(
        &self,
        a: &PhasePoint<T>,
        b: &PhasePoint<T>,
        z: T,
        mode: KernelMode,
        cfg: &IntegrationConfig<T>,
    ) -> Result<T> {
        let sum = PhasePoint {
            q: a.q,
            p: [a.p[0] + b.p[0], a.p[1] + b.p[1]],
            k: [a.k[0] + b.k[0], a.k[1] + b.k[1]],
        };
        let reference = self.phi_self(&sum, z)?;
        let (rho, e) = Self::frame(a, b);
        let def = if (mode == KernelMode::Correlated && rho == T::zero()) || self.turbulence.cn2 == T::zero() {
            T::zero()
        } else {
            cfg.validate()?;
            let m = self.pair_moments(rho, z, mode, self.moment_tolerance(a, b, z, cfg))?;
            if !m.converged {
                return Err(Error::Integration {
                    context: "average_m",
                    estimate: f64::NAN,
                    error: to_f64(m.error.iter().fold(T::zero(), |x, &y| x.max(y))),
                    evals: m.evals,
                });
            }
            let q0 = self.beam.q0;
            Self::deficit_bilinear(&m, e, a.weight_at(q0, z), a.k, b.weight_at(q0, z), b.k).0
        };
        let exponent = reference - lit::<T>(4.0) * T::PI() * def;
        Ok((-lit::<T>(0.5) * exponent.max(T::zero())).exp())
    }
}
