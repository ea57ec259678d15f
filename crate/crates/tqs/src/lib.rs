//! Classical toolkit for truncated-Taylor quantum simulation: Pauli-string
//! algebra, a statevector emulator, cumulative moment bases, overlap-matrix
//! measurement, the constrained time stepper, the linear-ODE alternative,
//! dense reference oracles and a config-driven experiment harness.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod moments;
pub mod oracle;
pub mod overlaps;
pub mod pauli;
pub mod qas;
pub mod statevec;
pub mod stepper;

#[cfg(test)]
mod testutil;

pub use error::{Result, TqsError};
