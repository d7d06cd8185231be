//! Truncated Fock-space brute force, independent of the closed forms in
//! [`crate::conversion`].
//!
//! Every analytic result is re-derived here from first principles: a
//! multiphoton beam-splitter unitary, Hermite-function quadrature
//! projections, sampled post-selection windows and general POVM elements.

pub mod fock;
pub mod homodyne;
pub mod monte_carlo;
pub mod network;
pub mod povm;
pub mod verify;

pub use fock::FockState;
pub use homodyne::{conditional_output, fock_wavefunction, homodyne_density, ConditionalOutcome};
pub use monte_carlo::{monte_carlo_conversion, MonteCarloConfig, MonteCarloReport};
pub use network::{network_reduction_check, LineSplitter, MeasuredMode, NetworkCheck};
pub use povm::{povm_mixture_output, PovmElement, PovmOutcome};
pub use verify::{verify_plan, VerificationReport, VerifyOptions};

/// Photon-number cutoff per mode used unless a caller asks otherwise.
pub const DEFAULT_TRUNCATION: usize = 4;
