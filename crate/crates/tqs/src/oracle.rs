//! Dense ground truth for small systems: exact time evolution by Hermitian
//! eigendecomposition, state reconstruction from ansatz coefficients, and
//! fidelity time series against the exact flow.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, TqsError};
use crate::moments::MomentBasis;
use crate::pauli::Hamiltonian;
use crate::statevec::StateVector;
use crate::stepper::Trajectory;

/// Eigendecomposition of a dense Hamiltonian, reused across time points.
pub struct ExactEvolver {
    n_qubits: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl ExactEvolver {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        let dense = h.dense_matrix()?;
        let eig = dense.symmetric_eigen();
        Ok(ExactEvolver {
            n_qubits: h.n_qubits(),
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// exp(-iHt) applied to a raw amplitude vector.
    pub fn evolve_raw(&self, amps: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let mut coeffs = self.eigenvectors.adjoint() * amps;
        for (c, &l) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= Complex64::from_polar(1.0, -l * t);
        }
        &self.eigenvectors * coeffs
    }

    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        if psi.n_qubits() != self.n_qubits {
            return Err(TqsError::DimensionMismatch(psi.n_qubits(), self.n_qubits));
        }
        StateVector::from_amplitudes(self.n_qubits, self.evolve_raw(psi.amplitudes(), t))
    }
}

pub fn exact_evolve(psi: &StateVector, h: &Hamiltonian, t: f64) -> Result<StateVector> {
    ExactEvolver::new(h)?.evolve(psi, t)
}

/// Sum alpha_i R_i |psi> without normalization.
pub fn reconstruct_raw(
    alpha: &DVector<Complex64>,
    basis: &MomentBasis,
    psi: &StateVector,
) -> Result<DVector<Complex64>> {
    if alpha.len() != basis.len() {
        return Err(TqsError::DimensionMismatch(alpha.len(), basis.len()));
    }
    let mut out = DVector::zeros(psi.amplitudes().len());
    for (i, rep) in basis.reps().iter().enumerate() {
        let chi = psi.apply_pauli(rep)?;
        out += chi.amplitudes() * alpha[i];
    }
    Ok(out)
}

/// Normalized ansatz state sum alpha_i |chi_i>. The pre-normalization
/// squared norm equals alpha^dagger E alpha, which ties the coefficient
/// space to the state space.
pub fn reconstruct_state(
    alpha: &DVector<Complex64>,
    basis: &MomentBasis,
    psi: &StateVector,
) -> Result<StateVector> {
    let raw = reconstruct_raw(alpha, basis, psi)?;
    let norm = raw.norm();
    if norm < 1e-14 {
        return Err(TqsError::Inconsistent(
            "reconstructed state is the zero vector".into(),
        ));
    }
    StateVector::from_amplitudes(psi.n_qubits(), raw / Complex64::new(norm, 0.0))
}

/// Per-time-point fidelity of the reconstructed trajectory against exact
/// dense evolution from the reference state.
pub fn trajectory_fidelity(
    traj: &Trajectory,
    basis: &MomentBasis,
    psi0: &StateVector,
    h: &Hamiltonian,
) -> Result<Vec<f64>> {
    let evolver = ExactEvolver::new(h)?;
    traj.times
        .iter()
        .zip(&traj.alphas)
        .map(|(&t, alpha)| {
            let approx = reconstruct_state(alpha, basis, psi0)?;
            let exact = evolver.evolve(psi0, t)?;
            approx.fidelity(&exact)
        })
        .collect()
}
