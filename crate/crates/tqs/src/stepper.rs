//! The TQS time step: build the propagation matrix (first order, second
//! order, or exact-unitary), then advance the coefficient vector by solving
//! the quadratically constrained quadratic program: maximize a'^ W a'
//! subject to a'^ E a' = 1, where W = G a a^ G^ / (a^ E a) is rank one. The closed-form solver uses
//! the rank-1 structure directly (maximizer proportional to E^+ G a); the
//! pencil solver takes the top generalized eigenvector of (W, E) on the
//! regularized subspace. Both are kept as independent routes and must agree.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, TqsError};
use crate::linalg::{fix_global_phase, RegularizedE};
use crate::moments::MomentBasis;
use crate::overlaps::{self, Mode, OverlapSet};
use crate::pauli::Hamiltonian;
use crate::statevec::StateVector;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Order {
    First,
    Second,
    ExactUnitary,
}

impl Order {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" | "first" => Ok(Order::First),
            "2" | "second" => Ok(Order::Second),
            "exact_unitary" => Ok(Order::ExactUnitary),
            other => Err(TqsError::parse_nl(format!("unknown order '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Order::First => "1",
            Order::Second => "2",
            Order::ExactUnitary => "exact_unitary",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Solver {
    ClosedForm,
    Pencil,
}

impl Solver {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(Solver::ClosedForm),
            "pencil" => Ok(Solver::Pencil),
            other => Err(TqsError::parse_nl(format!("unknown solver '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Solver::ClosedForm => "closed_form",
            Solver::Pencil => "pencil",
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StepConfig {
    pub dt: f64,
    pub order: Order,
    pub solver: Solver,
    /// Relative eigenvalue threshold for the regularized inverse of E.
    pub pinv_cutoff: f64,
    pub n_steps: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: 1e-3,
            order: Order::First,
            solver: Solver::ClosedForm,
            pinv_cutoff: 1e-10,
            n_steps: 1,
        }
    }
}

/// Default cutoff for shot-sampled overlap matrices, where statistical noise
/// pollutes the small eigenvalues of E.
pub const SAMPLED_PINV_CUTOFF: f64 = 1e-3;

/// Time series of coefficient vectors with per-step objectives.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub method: String,
    pub dt: f64,
    pub times: Vec<f64>,
    pub alphas: Vec<DVector<Complex64>>,
    /// objectives[i] is the QCQP value achieved stepping into alphas[i];
    /// objectives[0] = 1 by convention.
    pub objectives: Vec<f64>,
}

impl Trajectory {
    /// CSV with columns t, objective, Re/Im of each coefficient, then one
    /// column per supplied observable series.
    pub fn to_csv(&self, observables: &[(String, Vec<f64>)]) -> String {
        let m = self.alphas.first().map(|a| a.len()).unwrap_or(0);
        let mut header = String::from("t,objective");
        for i in 0..m {
            header.push_str(&format!(",re_a{i},im_a{i}"));
        }
        for (name, _) in observables {
            header.push_str(&format!(",{name}"));
        }
        let mut s = header;
        s.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            s.push_str(&format!("{:.12e},{:.17e}", t, self.objectives[i]));
            for a in self.alphas[i].iter() {
                s.push_str(&format!(",{:.17e},{:.17e}", a.re, a.im));
            }
            for (_, series) in observables {
                s.push_str(&format!(",{:.17e}", series[i]));
            }
            s.push('\n');
        }
        s
    }
}

/// The propagation matrix: E - i dt D (first order), additionally
/// - dt^2/2 J (second order), or the measured R matrix (exact-unitary).
pub fn build_g(ov: &OverlapSet, dt: f64, order: Order) -> Result<DMatrix<Complex64>> {
    let i_dt = Complex64::new(0.0, dt);
    match order {
        Order::First => Ok(ov.e() - ov.d() * i_dt),
        Order::Second => {
            let j = ov.j().ok_or(TqsError::MissingMatrix("J"))?;
            Ok(ov.e() - ov.d() * i_dt - j * Complex64::new(dt * dt / 2.0, 0.0))
        }
        Order::ExactUnitary => ov
            .named("R")
            .cloned()
            .ok_or(TqsError::MissingMatrix("R")),
    }
}

/// One trajectory's worth of reusable step machinery: G and the regularized
/// eigendecomposition of E are built once.
pub struct Stepper {
    g: DMatrix<Complex64>,
    e: DMatrix<Complex64>,
    reg: RegularizedE,
    cfg: StepConfig,
    exact_mode: bool,
}

impl Stepper {
    pub fn new(ov: &OverlapSet, cfg: &StepConfig) -> Result<Self> {
        Ok(Stepper {
            g: build_g(ov, cfg.dt, cfg.order)?,
            e: ov.e().clone(),
            reg: RegularizedE::new(ov.e(), cfg.pinv_cutoff)?,
            cfg: *cfg,
            // The objective is bounded by 1 only when G is a genuine unitary
            // overlap matrix and the entries are exact; the Taylor G matrices
            // legitimately reach 1 + O(dt^2).
            exact_mode: ov.mode().is_exact() && cfg.order == Order::ExactUnitary,
        })
    }

    pub fn regularization(&self) -> &RegularizedE {
        &self.reg
    }

    fn e_norm_sq(&self, v: &DVector<Complex64>) -> f64 {
        v.dotc(&(&self.e * v)).re
    }

    /// Advance by one step; returns the new coefficients (global phase fixed
    /// so the largest entry is real positive) and the achieved objective.
    pub fn step(&self, alpha: &DVector<Complex64>) -> Result<(DVector<Complex64>, f64)> {
        let c = self.e_norm_sq(alpha);
        if (c - 1.0).abs() > 1e-6 {
            return Err(TqsError::Inconsistent(format!(
                "input coefficients not E-normalized: a^Ea = {c}"
            )));
        }
        let v = &self.g * alpha;
        let candidate = match self.cfg.solver {
            Solver::ClosedForm => {
                let w = self.reg.pinv_apply(&v);
                let n2 = self.e_norm_sq(&w);
                if n2 <= 0.0 || !n2.is_finite() {
                    return Err(TqsError::SingularOverlap);
                }
                w / Complex64::new(n2.sqrt(), 0.0)
            }
            Solver::Pencil => {
                let b = self.reg.whitening_basis();
                let vt = b.adjoint() * &v;
                let w_tilde = &vt * vt.adjoint() / Complex64::new(c, 0.0);
                let eig = w_tilde.symmetric_eigen();
                let mut best = 0usize;
                for i in 0..eig.eigenvalues.len() {
                    if eig.eigenvalues[i] > eig.eigenvalues[best] {
                        best = i;
                    }
                }
                &b * eig.eigenvectors.column(best)
            }
        };
        let objective = candidate.dotc(&v).norm_sqr() / c;
        if self.exact_mode && objective > 1.0 + 1e-6 {
            return Err(TqsError::Inconsistent(format!(
                "exact-mode objective {objective} exceeds 1"
            )));
        }
        Ok((fix_global_phase(&candidate), objective))
    }

    /// Purely classical evolution: n_steps applications of `step`.
    pub fn evolve(&self, alpha0: &DVector<Complex64>) -> Result<Trajectory> {
        let c = self.e_norm_sq(alpha0);
        if (c - 1.0).abs() > 1e-6 {
            return Err(TqsError::Inconsistent(format!(
                "initial coefficients not E-normalized: a^Ea = {c}"
            )));
        }
        let mut alphas = vec![alpha0.clone()];
        let mut objectives = vec![1.0];
        let mut times = vec![0.0];
        let mut alpha = alpha0.clone();
        for i in 1..=self.cfg.n_steps {
            let (next, obj) = self.step(&alpha)?;
            times.push(i as f64 * self.cfg.dt);
            alphas.push(next.clone());
            objectives.push(obj);
            alpha = next;
        }
        Ok(Trajectory {
            method: format!("tqs-order{}", self.cfg.order.name()),
            dt: self.cfg.dt,
            times,
            alphas,
            objectives,
        })
    }
}

pub fn step(
    alpha: &DVector<Complex64>,
    ov: &OverlapSet,
    cfg: &StepConfig,
) -> Result<(DVector<Complex64>, f64)> {
    Stepper::new(ov, cfg)?.step(alpha)
}

pub fn evolve(
    alpha0: &DVector<Complex64>,
    ov: &OverlapSet,
    cfg: &StepConfig,
) -> Result<Trajectory> {
    Stepper::new(ov, cfg)?.evolve(alpha0)
}

/// a^ M a for a Hermitian observable matrix in the moment basis.
pub fn observable_from_matrix(alpha: &DVector<Complex64>, m: &DMatrix<Complex64>) -> f64 {
    alpha.dotc(&(m * alpha)).re
}

/// Observable expectation in the ansatz state, with the basis matrix of
/// `h_obs` computed through the overlap machinery.
pub fn observable(
    alpha: &DVector<Complex64>,
    basis: &MomentBasis,
    h_obs: &Hamiltonian,
    psi: &StateVector,
) -> Result<f64> {
    let m = overlaps::observable_matrix(basis, h_obs, psi, Mode::Exact)?;
    let val = alpha.dotc(&(&m * alpha));
    if val.im.abs() > 1e-8 {
        return Err(TqsError::Inconsistent(format!(
            "observable expectation has imaginary part {}",
            val.im
        )));
    }
    Ok(val.re)
}
