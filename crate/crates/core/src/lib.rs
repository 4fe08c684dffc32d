//! Finite-temperature entanglement of quantum spin chains from the imaginary-time cut of the
//! quantum transfer matrix.
//!
//! The crate builds the checkerboard transfer matrix of a spin chain, cuts its leading
//! eigenstate along the imaginary-time axis and measures the entropy of the resulting
//! non-Hermitian reduced density matrix. A transfer-matrix DMRG reaches low temperatures; exact
//! diagonalization, the two-qubit closed forms and free-fermion corner spectra serve as oracles.

pub mod edoracle;
pub mod error;
pub mod fforacle;
pub mod krylov;
pub mod linalg;
pub mod models;
pub mod qtm;
pub mod qubit;
pub mod tmrg;

pub use error::{Error, Result};
pub use linalg::{c64, BiorthogonalPair, DenseOperator, Spectrum, Tolerances};
pub use models::{Boundary, SpinChainModel};
pub use qtm::{AuxCut, EntanglementSpectrum, QtmOperator, TrotterGrid};
pub use tmrg::{TmrgConfig, TmrgPoint};

/// Version string written into every output header.
pub const FORMAT_VERSION: &str = "qtment-output/1";
