//! The linear differential-equation route: integrate E da/dt = -i D a over
//! the same overlap matrices, recovered from the TQS step in the small-dt
//! limit.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::RegularizedE;
use crate::overlaps::OverlapSet;
use crate::stepper::Trajectory;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Integrator {
    Euler,
    Rk4,
}

impl Integrator {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Integrator::Euler),
            "rk4" => Ok(Integrator::Rk4),
            other => Err(crate::error::TqsError::parse_nl(format!(
                "unknown integrator '{other}'"
            ))),
        }
    }
}

/// da/dt = -i E^+ D a with the same regularized inverse as the stepper.
pub fn qas_rhs(
    alpha: &DVector<Complex64>,
    ov: &OverlapSet,
    reg: &RegularizedE,
) -> DVector<Complex64> {
    reg.pinv_apply(&(ov.d() * alpha)) * Complex64::new(0.0, -1.0)
}

pub fn qas_rhs_with_cutoff(
    alpha: &DVector<Complex64>,
    ov: &OverlapSet,
    pinv_cutoff: f64,
) -> Result<DVector<Complex64>> {
    let reg = RegularizedE::new(ov.e(), pinv_cutoff)?;
    Ok(qas_rhs(alpha, ov, &reg))
}

/// Fixed-step integration of the QAS flow. With `renormalize` (the default
/// in the harness) each step is rescaled back onto a^ E a = 1, since the
/// discrete flow only conserves the E-norm in the continuous limit. The
/// objective column records a^ E a before rescaling.
pub fn integrate(
    alpha0: &DVector<Complex64>,
    ov: &OverlapSet,
    dt: f64,
    n_steps: usize,
    method: Integrator,
    pinv_cutoff: f64,
    renormalize: bool,
) -> Result<Trajectory> {
    let reg = RegularizedE::new(ov.e(), pinv_cutoff)?;
    let e_norm_sq = |v: &DVector<Complex64>| v.dotc(&(ov.e() * v)).re;

    let mut alphas = vec![alpha0.clone()];
    let mut objectives = vec![e_norm_sq(alpha0)];
    let mut times = vec![0.0];
    let mut alpha = alpha0.clone();
    let cdt = Complex64::new(dt, 0.0);
    for i in 1..=n_steps {
        let mut next = match method {
            Integrator::Euler => &alpha + qas_rhs(&alpha, ov, &reg) * cdt,
            Integrator::Rk4 => {
                let k1 = qas_rhs(&alpha, ov, &reg);
                let k2 = qas_rhs(&(&alpha + &k1 * (cdt / 2.0)), ov, &reg);
                let k3 = qas_rhs(&(&alpha + &k2 * (cdt / 2.0)), ov, &reg);
                let k4 = qas_rhs(&(&alpha + &k3 * cdt), ov, &reg);
                let two = Complex64::new(2.0, 0.0);
                &alpha + (k1 + k2 * two + k3 * two + k4) * (cdt / 6.0)
            }
        };
        let n = e_norm_sq(&next);
        if renormalize && n > 0.0 {
            next /= Complex64::new(n.sqrt(), 0.0);
        }
        times.push(i as f64 * dt);
        objectives.push(n);
        alphas.push(next.clone());
        alpha = next;
    }
    Ok(Trajectory {
        method: format!(
            "qas-{}",
            match method {
                Integrator::Euler => "euler",
                Integrator::Rk4 => "rk4",
            }
        ),
        dt,
        times,
        alphas,
        objectives,
    })
}
