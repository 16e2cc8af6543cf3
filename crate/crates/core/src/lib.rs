//! Quantum spin chains re-expressed as classical Ising lattices one
//! dimension up, and the machinery to check the books in both
//! directions.
//!
//! The library has three layers:
//!
//! * quantum reference values for transverse-field Ising chains, from
//!   dense diagonalization ([`spinchain`]);
//! * the chain-to-lattice dictionary and its single-qubit cousin
//!   ([`trotter`]), plus exact ([`lattice`]) and Monte Carlo ([`mc`])
//!   evaluation of the resulting classical models;
//! * reconstruction of reduced density matrices and entanglement
//!   measures from nothing but classical expectation values
//!   ([`entanglement`]).
//!
//! Everything downstream of a seed is deterministic: exact evaluators
//! reduce in fixed partition order, samplers use counter-seeded
//! streams, and serialized artifacts are canonical byte-for-byte.
//!
//! ```
//! use bridge_core::spinchain::{Boundary, QuantumChainSpec};
//! use bridge_core::trotter::{map_tfim, insertion_for, Observable};
//! use bridge_core::lattice::{expectation, Method};
//!
//! let chain = QuantumChainSpec {
//!     sites: 4,
//!     coupling_j: 1.0,
//!     field_b: 1.0,
//!     boundary: Boundary::Periodic,
//!     beta: 2.0,
//! };
//! let lattice = map_tfim(&chain, 8)?;
//! let ins = insertion_for(&lattice, Observable::Sx { site: 0 }, 0)?;
//! let sx = expectation(&lattice, &ins, Method::TransferMatrix)?.value;
//! assert!(sx > 0.0 && sx < 1.0);
//! # Ok::<(), bridge_core::error::Error>(())
//! ```

pub mod canonical;
pub mod entanglement;
pub mod error;
pub mod lattice;
pub mod mc;
pub mod spinchain;
pub mod trotter;

pub use error::{Error, Module, Result};

/// Runs every code snippet in the book (`book/src/`) as a doctest, so
/// the guide cannot drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mapping.md")]
    mod mapping {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/observables.md")]
    mod observables {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/entanglement.md")]
    mod entanglement {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
