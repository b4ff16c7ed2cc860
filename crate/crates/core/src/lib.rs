//! Open-system geometric phase of a spin-1/2 under pure dephasing.
//!
//! The crate is organised bottom-up:
//!
//! * [`qmat`]: dense complex matrices for 2-level, 4-level and small
//!   many-body Hilbert spaces (Hermitian exponentials, tensor products,
//!   partial trace, Jacobi eigendecomposition).
//! * [`gp`]: the geometric phase of a cyclically driven qubit, both from a
//!   sampled decoherence factor (closed form) and from a density-matrix
//!   trajectory (parallel transport of the dominant eigenvector).
//! * [`bath`]: a two-level model of a critical bath and the
//!   transverse-field Ising chain.
//! * [`perturbative`]: weak-coupling expansion of the phase, elliptic
//!   integrals and the Ising closed forms.
//! * [`protocol`]: exact and Trotterized evolution of the two-qubit
//!   simulator Hamiltonian, coherence readout and baseline subtraction.

pub mod bath;
pub mod error;
pub mod gp;
pub mod perturbative;
pub mod protocol;
pub mod qmat;

pub use error::{Error, Result};
pub use num_complex::Complex64;
