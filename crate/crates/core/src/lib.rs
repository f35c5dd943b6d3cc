//! Retrodictive characterization of quantum measurement apparatuses.
//!
//! A detector is described by its POVM on a truncated Fock space. Each
//! outcome defines a retrodicted state `Π_n / Tr{Π_n}`, from which the crate
//! derives projectivity, ideality, fidelity and detectivity estimators,
//! phase-space non-classicality witnesses, and heralded-state simulations
//! from a two-mode squeezed vacuum.

pub mod detector;
pub mod error;
pub mod fock;
pub mod herald;
pub mod io;
pub mod phase_space;
pub mod random;
pub mod retrodiction;
pub mod tol;

pub use error::{Error, Result};
pub use fock::{
    coherent_state, conjugate_in_fock, eig_hermitian, fock_state, partial_trace_b, squeezed_vacuum,
    tensor, DensityMatrix, FockDim, HermitianOperator, Spectrum, StateVector, C64,
};
pub use tol::Tolerances;
