//! Dense linear-algebra primitives: column-major matrices, Householder QR,
//! triangular solves, symmetric eigenvalues and the fast Walsh–Hadamard transform.

mod eig;
mod fwht;
mod matrix;
mod qr;

pub use eig::{symmetric_eigenvalues, symmetric_spectral_norm};
pub use fwht::{fwht_in_place, fwht_normalized, fwht_normalized_in_place};
pub use matrix::{axpy, dot, matmul, matmul_tn, matvec, matvec_t, norm2, norm2_sq, sub_vec, Matrix};
pub use qr::{qr_thin, solve_upper, solve_upper_transpose, tri_solve_pair, HouseholderQr};
