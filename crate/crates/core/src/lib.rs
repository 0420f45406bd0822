//! Exact Fock-space simulation of split spin-squeezed two-component
//! Bose-Einstein condensates.
//!
//! A single two-mode ensemble of `N` bosons is prepared in the maximally
//! `S^x`-polarized spin coherent state, squeezed by one-axis twisting, split
//! by a 50:50 beam splitter into a left and a right well, and projected onto a
//! definite left-well particle number. The crate provides
//!
//! * [`statekit`]: construction of all states along that pipeline, plus the
//!   equivalent effective-Hamiltonian evolution and the post-collapse mixture;
//! * [`observables`]: collective spin operators, moments, reduced density
//!   matrices and right-well Fock projections;
//! * [`entangle`]: Schmidt spectra and logarithmic negativity;
//! * [`wigner`]: SU(2) Wigner functions on the Bloch sphere;
//! * [`witness`]: correlation-based entanglement and steering witnesses;
//! * [`specfun`] and [`linalg`]: the numerical kernels underneath.

pub mod entangle;
pub mod error;
pub mod linalg;
pub mod observables;
pub mod specfun;
pub mod statekit;
pub mod wigner;
pub mod witness;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
