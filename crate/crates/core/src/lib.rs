//! Finite-dimensional algebraic probability and quantum computation.
//!
//! States, observables and measurements, completely positive maps, an n-qubit
//! simulator with Grover search, interacting Fock spaces with the Favard
//! correspondence, *-subalgebra structure and the Kochen–Specker argument.

pub mod channels;
pub mod contextuality;
pub mod error;
pub mod fock;
pub mod matcore;
pub mod measure;
pub mod qpu;
pub mod random;
pub mod states;
pub mod structure;

pub use error::{Error, Result};
pub use matcore::{CMatrix, C64};
