//! Simulation kernel for a driven, dissipative four-level artificial atom
//! (two capacitively coupled Cooper-pair boxes) interacting with a single
//! microwave resonator mode.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`] — dense complex operators on the composite Hilbert space,
//!   Kronecker products, Liouvillian superoperators and linear solves;
//! * [`circuit`] — device physics: capacitance geometry, charging/Josephson
//!   energies, the 4×4 molecule Hamiltonian and its spectrum;
//! * [`nsystem`] — the driven N-configuration master equation (Hamiltonian
//!   plus collapse channels) on the atom⊗Fock space;
//! * [`solver`] — steady states, propagation, two-time correlations via the
//!   quantum regression theorem, and frequency-domain solves;
//! * [`observables`] — photon statistics g²(0)/g²(τ), squeezing spectra and
//!   the analytic self-Kerr estimator;
//! * [`kerr`] — the single-mode χ⁽³⁾ reference model used to convert a
//!   measured g²(0) into an effective nonlinearity η.
//!
//! All frequencies and rates are angular (rad/s) internally. Decay channels
//! follow the convention `D[A]ρ = 2AρA† − {A†A, ρ}` with no ½ prefactor, so a
//! cavity channel of rate κ damps the field amplitude at κ and the photon
//! number at 2κ.

pub mod algebra;
pub mod circuit;
pub mod error;
pub mod kerr;
pub mod nsystem;
pub mod observables;
pub mod solver;

pub use algebra::{HilbertSpace, Operator, SuperOperator, C64};
pub use circuit::{CircuitParams, GeometryParams, MoleculeSpectrum};
pub use error::CoreError;
pub use kerr::KerrParams;
pub use nsystem::NSystemParams;
pub use observables::{EtaEstimate, G2Result, SqueezeSpectrum};
pub use solver::{CorrelationSeries, SteadyState};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;
