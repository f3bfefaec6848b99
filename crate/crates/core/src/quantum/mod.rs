//! Resource states, observables and correlators.
//!
//! Two independent routes compute the Bell functionals: [`factorized_ij`] multiplies
//! per-resource expectation values, and [`tensor_ij`] builds the global state and
//! evaluates every correlator on it. The second exists to check the first.

pub mod factorized;
pub mod linalg;
pub mod observables;
pub mod state;
pub mod tensor;

pub use factorized::{factorized_ij, AngleModel, source_factors, SourceFactors};
pub use linalg::{DenseOperator, C64};
pub use observables::{build_a, build_b, BOperators, MeasurementAngles, ObservableSet, PartitionIndex, PartyBlock};
pub use state::{build_state, check_pauli_psd, expectation, LocalFactor, QuantumState, StateRepr, DEFAULT_DIM_CAP};
pub use tensor::{tensor_ij, tensor_ij_by_settings};
