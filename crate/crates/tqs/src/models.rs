//! Built-in model Hamiltonians used by the experiment runner and the
//! reference tests.

use crate::error::Result;
use crate::pauli::{Hamiltonian, PauliString};

/// 2-qubit Heisenberg pair: (X0X1 + Y0Y1 + Z0Z1) / 2.
pub fn heisenberg2() -> Hamiltonian {
    Hamiltonian::parse("0.5 X0 X1\n0.5 Y0 Y1\n0.5 Z0 Z1\n", 2).unwrap()
}

/// 4-qubit open XX chain: (X0X1 + X1X2 + X2X3) / 2.
pub fn xx_chain4() -> Hamiltonian {
    Hamiltonian::parse("0.5 X0 X1\n0.5 X1 X2\n0.5 X2 X3\n", 4).unwrap()
}

/// Periodic transverse-field Ising ring: sum_i Z_i Z_{i+1} / 2 + sum_j X_j.
pub fn tfi_ring(n: usize) -> Hamiltonian {
    let mut terms = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let zz = PauliString::single(n, i, 'Z')
            .unwrap()
            .multiply(&PauliString::single(n, j, 'Z').unwrap())
            .unwrap()
            .canonical();
        terms.push((0.5, zz));
    }
    for q in 0..n {
        terms.push((1.0, PauliString::single(n, q, 'X').unwrap()));
    }
    Hamiltonian::new(n, terms).unwrap()
}

/// 8-qubit transverse-field Ising ring.
pub fn tfi8() -> Hamiltonian {
    tfi_ring(8)
}

/// Small transverse-field Ising ring used for the circuit-count comparison.
/// The coupling indices run over a periodic ring of three sites.
pub fn tfi2() -> Hamiltonian {
    tfi_ring(3)
}

pub fn by_name(name: &str) -> Result<Hamiltonian> {
    match name {
        "heisenberg2" => Ok(heisenberg2()),
        "xx-chain4" => Ok(xx_chain4()),
        "tfi8" => Ok(tfi8()),
        "tfi2" => Ok(tfi2()),
        other => Err(crate::error::TqsError::parse_nl(format!(
            "unknown built-in Hamiltonian '{other}'"
        ))),
    }
}
