//! Degenerate parametric down-conversion with a quantized, depleting pump.
//!
//! The two-mode Hilbert space splits into blocks of fixed total energy
//! `N = n_signal + 2 n_pump`; inside each block the interaction Hamiltonian
//! `a^2 b^† + a^†2 b` is a real symmetric tridiagonal matrix with zero
//! diagonal. This crate builds those blocks, diagonalizes them (the full
//! spectrum or only the eigenvalues closest to zero), evolves a coherent pump
//! with a vacuum signal, projects the pump onto photon-number outcomes and
//! compares the collapsed signal with squeezed even Schrödinger-cat states.
//!
//! Time is dimensionless throughout (`tau = g t`, `hbar = 1`).

pub mod catfit;
pub mod error;
pub mod evolution;
pub mod measurement;
pub mod oracle;
pub mod spectrum;
pub mod states;

pub use error::{Error, Result};
