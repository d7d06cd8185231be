//! Imperfect single-rail optical qubits and their interconversion by a beam
//! splitter with conditional homodyne detection.
//!
//! - [`qubit`]: `(α, β, E)` states, density matrices, generalized efficiency
//! - [`conversion`]: closed-form outputs, feasibility and plan synthesis
//! - [`solver`]: parameter solves, partial-target optimization, sweeps
//! - [`oracle`]: truncated Fock-space simulation used to check all of the above

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conversion;
pub mod error;
pub mod oracle;
pub mod qubit;
pub mod solver;

pub use conversion::{
    classify_feasibility, homodyne_coefficients, project_output, synthesize_plan, BeamSplitter,
    ConversionOutcome, ConversionPlan, FeasibilityVerdict, HomodyneSetting, PlanOptions,
    ProjectionCoefficients, Stage, Verdict,
};
pub use error::{Error, Result};
pub use qubit::{efficiency_second_derivative, DensityMatrix2, SingleRailQubit, StateRecord};
