//! Test-only helpers: an independent dense oracle built from Kronecker
//! products of 2x2 letter matrices, and random generators.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::pauli::{i_pow, PauliString};

pub fn letter_matrix(letter: char) -> DMatrix<Complex64> {
    let z = Complex64::ZERO;
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match letter {
        'I' => DMatrix::from_row_slice(2, 2, &[one, z, z, one]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
        _ => panic!("bad letter"),
    }
}

/// Dense matrix of a Pauli string via explicit Kronecker products, qubit 0
/// as the least significant index bit. Independent of `PauliString::dense_matrix`.
pub fn kron_dense(p: &PauliString) -> DMatrix<Complex64> {
    let mut acc = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for q in 0..p.n_qubits() {
        acc = letter_matrix(p.letter(q)).kronecker(&acc);
    }
    acc * i_pow(p.phase_exp())
}

pub fn rand_pauli<R: Rng>(rng: &mut R, n_qubits: usize) -> PauliString {
    let live = (1u64 << n_qubits) - 1;
    PauliString::new(
        n_qubits,
        rng.random::<u64>() & live,
        rng.random::<u64>() & live,
        rng.random_range(0..4),
    )
}
