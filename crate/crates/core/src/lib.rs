//! Generalized Pauli operators on qudits.
//!
//! - [`algebra`]: the operators `S_kl = S_x^k S_z^l` with exact phase bookkeeping.
//! - [`eigensolver`]: their closed-form eigenbases and a brute-force oracle.
//! - [`bipartite`]: Schmidt structure of the eigenvectors for `d = d1·d0` and
//!   the resulting measurement classes.
//! - [`tomography`]: state reconstruction from `S_kl` outcome statistics.
//! - [`crypto`]: two-bases key distribution with feed-forward `S_x` measurement.
//! - [`optics`]: polarisation-path devices and a triangular multiport compiler.

pub mod algebra;
pub mod bipartite;
pub mod crypto;
pub mod eigensolver;
pub mod error;
pub mod matrix;
pub mod optics;
pub mod random;
pub mod tomography;

pub use algebra::{commutes, compose, pauli_matrix, root_value, PauliLabel, Root};
pub use eigensolver::{
    analytic_eigensystem, numeric_eigensystem, spectral_equivalence, EigenSystem,
};
pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
