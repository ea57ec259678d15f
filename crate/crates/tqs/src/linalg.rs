//! Small shared numerics: Hermitian eigendecomposition of the overlap
//! matrix with relative-threshold regularization, phase fixing, and a
//! log-log slope fit used by the convergence tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, TqsError};

/// Eigendecomposition of a Hermitian positive semidefinite matrix E with
/// eigenvalues below `rel_cutoff * lambda_max` discarded. Built once per run
/// and reused for every step.
pub struct RegularizedE {
    dim: usize,
    /// Kept (eigenvalue, eigenvector) pairs, eigenvalues descending.
    kept: Vec<(f64, DVector<Complex64>)>,
    min_rel_kept: f64,
}

impl RegularizedE {
    pub fn new(e: &DMatrix<Complex64>, rel_cutoff: f64) -> Result<Self> {
        assert!((0.0..1.0).contains(&rel_cutoff));
        let dim = e.nrows();
        let eig = e.clone().symmetric_eigen();
        let lambda_max = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if lambda_max <= 0.0 || lambda_max.is_nan() {
            return Err(TqsError::SingularOverlap);
        }
        let mut kept: Vec<(f64, DVector<Complex64>)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > rel_cutoff * lambda_max && l > 0.0)
            .map(|(i, &l)| (l, eig.eigenvectors.column(i).into_owned()))
            .collect();
        if kept.is_empty() {
            return Err(TqsError::SingularOverlap);
        }
        kept.sort_by(|a, b| b.0.total_cmp(&a.0));
        let min_rel_kept = kept.last().unwrap().0 / lambda_max;
        Ok(RegularizedE {
            dim,
            kept,
            min_rel_kept,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    /// Smallest kept eigenvalue relative to the largest.
    pub fn min_rel_eigenvalue(&self) -> f64 {
        self.min_rel_kept
    }

    /// E^+ v over the kept subspace.
    pub fn pinv_apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim);
        for (l, u) in &self.kept {
            let c = u.dotc(v) / *l;
            out += u * c;
        }
        out
    }

    /// B = U_k Lambda_k^{-1/2}: columns span the kept subspace and satisfy
    /// B^dagger E B = I, the whitening map for the pencil solver.
    pub fn whitening_basis(&self) -> DMatrix<Complex64> {
        let mut b = DMatrix::zeros(self.dim, self.kept.len());
        for (j, (l, u)) in self.kept.iter().enumerate() {
            b.set_column(j, &(u / Complex64::new(l.sqrt(), 0.0)));
        }
        b
    }
}

/// Replace m by its Hermitian part (m + m^dagger) / 2.
pub fn hermitize(m: &mut DMatrix<Complex64>) {
    let h = (&*m + m.adjoint()) * Complex64::new(0.5, 0.0);
    *m = h;
}

/// Fix the global phase so the largest-magnitude entry is real positive.
pub fn fix_global_phase(v: &DVector<Complex64>) -> DVector<Complex64> {
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].norm_sqr() > v[best].norm_sqr() {
            best = i;
        }
    }
    let a = v[best];
    if a.norm() == 0.0 {
        return v.clone();
    }
    v * (a.conj() / a.norm())
}

/// Multiply `v` by the unit phase that makes <reference, v> real positive.
pub fn align_phase(reference: &DVector<Complex64>, v: &DVector<Complex64>) -> DVector<Complex64> {
    let s = reference.dotc(v);
    if s.norm() == 0.0 {
        return v.clone();
    }
    v * (s.conj() / s.norm())
}

/// Least-squares slope of ln(y) against ln(x).
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pinv_of_identity_is_identity() {
        let e = DMatrix::<Complex64>::identity(3, 3);
        let reg = RegularizedE::new(&e, 1e-10).unwrap();
        assert_eq!(reg.rank(), 3);
        let v = DVector::from_fn(3, |i, _| Complex64::new(i as f64 + 1.0, -1.0));
        let w = reg.pinv_apply(&v);
        for (a, b) in w.iter().zip(v.iter()) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn cutoff_discards_small_eigenvalues() {
        let e = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1e-8, 0.0),
        ]));
        let reg = RegularizedE::new(&e, 1e-4).unwrap();
        assert_eq!(reg.rank(), 1);
        // Component along the discarded direction is annihilated.
        let v = DVector::from_vec(vec![Complex64::ZERO, Complex64::new(1.0, 0.0)]);
        assert!(reg.pinv_apply(&v).norm() < 1e-12);
    }

    #[test]
    fn fully_degenerate_is_an_error() {
        let e = DMatrix::<Complex64>::zeros(2, 2);
        assert!(RegularizedE::new(&e, 1e-10).is_err());
    }

    #[test]
    fn whitening_basis_diagonalizes_e() {
        let mut e = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.3, 0.4),
                Complex64::new(0.3, -0.4),
                Complex64::new(1.0, 0.0),
            ],
        );
        hermitize(&mut e);
        let reg = RegularizedE::new(&e, 1e-12).unwrap();
        let b = reg.whitening_basis();
        let prod = b.adjoint() * &e * &b;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(prod[(i, j)].re, want, epsilon = 1e-10);
                assert_relative_eq!(prod[(i, j)].im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn loglog_slope_recovers_power() {
        let xs = [1e-1, 1e-2, 1e-3];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
        assert_relative_eq!(fit_loglog_slope(&xs, &ys), 2.0, epsilon = 1e-10);
    }

    #[test]
    fn fix_global_phase_makes_leading_entry_positive() {
        let v = DVector::from_vec(vec![
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.5, 0.8),
        ]);
        let fixed = fix_global_phase(&v);
        assert!(fixed[1].im.abs() < 1e-12);
        assert!(fixed[1].re > 0.0);
        assert_relative_eq!(fixed.norm(), v.norm(), epsilon = 1e-12);
    }
}
