//! Gradient estimation for ansatz circuits of the form `U(a) = exp(i A(a))`,
//! where `A` decomposes over Pauli words, plus a dense simulator small enough
//! to verify every estimator exactly.
//!
//! The estimators share one pipeline: Hadamard-test values `D_s` (measured,
//! sampled, or computed exactly) enter a classical kernel built from the
//! adjoint action of `A` on a subgroup or Lie-closure basis. See the module
//! docs for the conventions that keep all of that arithmetic real.

pub mod clifford;
pub mod dla;
pub mod error;
pub mod gradient;
pub mod group;
pub mod io;
pub mod matfun;
pub mod pauli;
pub mod report;
pub mod run;
pub mod shadow;
pub mod sim;

pub use error::{Error, Result};
pub use pauli::{PauliLabel, PauliSum, PhasedPauli};
