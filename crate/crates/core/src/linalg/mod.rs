//! Dense complex linear algebra for small (≤ 16) operators.

mod eig;
mod funcs;
pub(crate) use funcs::roundoff_floor;
mod matrix;

pub use eig::{eigenvalues, herm_eig, HermEig, HERMITIAN_TOL};
pub use funcs::{
    devectorize, expm, expm_hermitian_generator, solve, sqrt_psd, trace_functional, vectorize,
    PSD_TOL,
};
pub use matrix::{kron, ComplexMatrix, C64, I, ONE, ZERO};
