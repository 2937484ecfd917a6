//! Classical randomized Hamiltonian simulation at desk scale.
//!
//! This crate implements two families of algorithms for approximating the
//! time evolution `e^{iHt} ψ` of a Hermitian operator `H`:
//!
//! - **Nystrom sketching** ([`nystrom`]): row-sampled low-rank approximations
//!   with truncated-series evaluation, one variant for positive semidefinite
//!   `H` and one for general Hermitian `H`, plus the theorem-driven sample
//!   and truncation-order calculators and the trace-shift preconditioner.
//! - **A dense LCU walk emulator** ([`lcu`]): the quantum-walk operator
//!   `U = iS(2TTᴴ − I)`, its Bessel-weighted series `V_k`, and a segmented
//!   evolution loop, all materialized as dense matrices for small `N`.
//!
//! Supporting machinery: complex Hermitian matrices with a Jacobi
//! eigensolver ([`matrix`]), weighted sampling structures ([`sampling`]),
//! randomized matrix multiplication ([`randmm`]), and an exact
//! matrix-exponential reference ([`oracle`]) used as ground truth by every
//! stochastic test.

pub mod dense;
pub mod generate;
pub mod io;
pub mod lcu;
pub mod matrix;
pub mod nystrom;
pub mod oracle;
pub mod randmm;
pub mod sampling;
pub(crate) mod special;

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex64;

pub use dense::CMatrix;
pub use matrix::{HermitianMatrix, MatrixError, NormBundle, StateVector};
pub use nystrom::SimulationPlan;
pub use sampling::SeededRng;
