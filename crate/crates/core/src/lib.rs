//! Multi-time process tensors for open quantum systems.
//!
//! The crate builds process tensors in matrix-product form from
//! system–environment channels, evaluates two non-Markovianity measures on
//! them (operator-space entanglement entropy and the entropy of the effective
//! environment state), and reconstructs hidden Markovian system–environment
//! models from target process tensors by gradient-based fitting.
//!
//! All entropies are reported in bits.

pub mod channels;
pub mod error;
pub mod io;
pub mod measures;
pub mod models;
pub mod process_tensor;
pub mod reconstruct;
pub mod tensorops;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = nalgebra::DMatrix<C64>;
