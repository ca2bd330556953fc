//! Scintillation of partially coherent beams in weak-to-moderate turbulence.

pub mod beam_source;
pub mod error;
pub mod linalg;
pub mod mc_oracle;
pub mod num;
pub mod quadrature;
pub mod scintillation;
pub mod trajectory_kernel;
pub mod turbulence;

pub use error::{Error, Result};
pub use num::Real;

pub use beam_source::BeamParams;
pub use quadrature::{IntegrationConfig, Method};
pub use scintillation::{PropagationQuery, Scintillation, SigmaCurvePoint, SweepOptions};
pub use trajectory_kernel::{InnerCoefficients, Kernel, KernelMode, PhasePoint};
pub use turbulence::{SpectrumModel, TurbulenceParams};

/// Double-precision turbulence parameters.
pub type Turbulence = TurbulenceParams<f64>;
/// Double-precision beam parameters.
pub type Beam = BeamParams<f64>;
pub type Integration = IntegrationConfig<f64>;
pub type Point = PhasePoint<f64>;
pub type TrajectoryKernel = Kernel<f64>;
pub type Model = Scintillation<f64>;
pub type Query = PropagationQuery<f64>;
pub type CurvePoint = SigmaCurvePoint<f64>;
pub type FieldSpec = mc_oracle::FieldSpec<f64>;
