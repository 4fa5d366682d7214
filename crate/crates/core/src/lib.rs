//! Edge statistics of nested corner spectra of time-dependent Wigner matrices.
//!
//! The crate samples Hermitian matrix processes `H(tau)`, extracts the spectra
//! of the leading `N x N` corners, rescales the top eigenvalues to the
//! edge-scaling window, and compares the result with exact combinatorial and
//! Airy-type reference computations.

pub mod airy;
pub mod chebyshev;
pub mod diagrams;
pub mod entries;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod paths;
pub mod quad;
pub mod rng;
pub mod scaling;
pub mod spectra;
pub mod stats;
pub mod verify;

pub use entries::{EntryKind, EntryProcessSpec, MatrixPath, SymmetryClass};
pub use error::{Error, Result};
pub use linalg::HermitianMatrix;
