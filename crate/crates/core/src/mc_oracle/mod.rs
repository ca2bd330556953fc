//! Monte Carlo verification path: synthetic random force fields, photon
//! trajectories integrated through them, and direct sample estimates of the
//! quantities the kernels compute in closed form.
//!
//! The longitudinal structure is a stack of independent screens, the same
//! delta-correlated limit the kernels assume. Every random draw is a pure
//! function of `(seed, realization, slab)`, so results do not depend on the
//! worker count.

pub mod dump;
pub mod field;
pub mod pair;
pub mod trajectory;

pub use field::{radial_power, radial_power_target, synthesize_field, FieldRealization, FieldSpec, Mode, Slab};
pub use pair::{estimate_phi_pair, estimate_phi_pairs, PairEstimate, PairOracleConfig};
pub use trajectory::{
    estimate_dq2, propagate, sample_source, DiffusionEstimate, McEstimate, Photon, Snapshot, StepControl,
    TrajectoryEnsemble,
};
