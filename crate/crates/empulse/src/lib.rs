//! Exact finite-energy localized electromagnetic pulses in vacuum.
//!
//! The toolkit builds Maxwell fields from a closed-form focus-wave-mode
//! scalar and a six-element basis of constant chiral two-forms, verifies them
//! against the governing equations, measures pulse energy and geometry,
//! integrates relativistic charged-particle worldlines through the fields,
//! and evolves quantized bi-qutrit pulse states under the free effective
//! Hamiltonian.
//!
//! All numerics are generic over the scalar type through [`float::Real`]
//! (`f32` or `f64`); the `f64` aliases below are the concrete types used by
//! the CLI and the acceptance suite.
//!
//! Reduced units everywhere: lengths in units of the pulse scale, `c = 1`,
//! `eps0 = mu0 = 1`; the single strength knob is the dimensionless `Lambda`.
//! MKS reconstruction lives in [`diagnostics`].

pub mod chiral;
pub mod diagnostics;
pub mod dynamics;
pub mod float;
pub mod geometry;
pub mod ode;
pub mod quad;
pub mod quantum;
pub mod scalar;

pub use chiral::{
    ChiralMode, ConstantTwoForm, EMFieldSample, FieldError, ModeFamily, PulseField,
    SuperpositionSpec,
};
pub use diagnostics::{
    characterize, energy_density, energy_report, CharacterizeOpts, EnergyReport,
    PulseCharacteristics, QuadBudget, SPEED_OF_LIGHT,
};
pub use dynamics::{
    ChargeSign, CouplingSpec, ParticleState, RingConfig, Trajectory, TrajectoryOpts,
};
pub use float::{Real, C};
pub use geometry::SpacetimePoint;
pub use quantum::{BiQutritState, EvolutionSpec, GaussianPacket, QutritFactorState};
pub use scalar::{ComplexJet2, ParamsError, PulseParams};

/// Concrete `f64` instantiations.
pub type Complex64 = num_complex::Complex<f64>;
pub type PulseParams64 = scalar::PulseParams<f64>;
pub type SpacetimePoint64 = geometry::SpacetimePoint<f64>;
pub type SuperpositionSpec64 = chiral::SuperpositionSpec<f64>;
pub type PulseField64 = chiral::PulseField<f64>;
pub type EMFieldSample64 = chiral::EMFieldSample<f64>;
pub type ParticleState64 = dynamics::ParticleState<f64>;
pub type Trajectory64 = dynamics::Trajectory<f64>;
pub type BiQutritState64 = quantum::BiQutritState<f64>;
