//! Dense kernels, randomized sketches, preconditioners and momentum solvers
//! for large overdetermined least-squares problems.

pub mod dense;
pub mod error;
pub mod flops;
pub mod model;
pub mod precond;
pub mod rng;
pub mod schedule;
pub mod sketch;
pub mod solver;

pub use error::{Error, Result};
pub use rng::Rng;
