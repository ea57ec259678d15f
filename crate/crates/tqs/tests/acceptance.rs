//! Acceptance suite: one test per top-level criterion, each printing a
//! single pass/fail line (visible with --nocapture).

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use tqs::linalg::{align_phase, fit_loglog_slope};
use tqs::models;
use tqs::moments::{build_cumulative_moments, closure_reached};
use tqs::oracle::{self, ExactEvolver};
use tqs::overlaps::{circuit_count, compute_overlaps, compute_r, observable_matrix, Mode};
use tqs::pauli::{Hamiltonian, PauliString};
use tqs::qas::{self, Integrator};
use tqs::statevec::{CircuitSpec, Entangler, StateVector};
use tqs::stepper::{self, observable_from_matrix, Order, StepConfig, Stepper};

fn report(name: &str, ok: bool, detail: &str) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn random_state(seed: u64, n: usize) -> StateVector {
    StateVector::prepare(&CircuitSpec::random_layers(n, 5, seed, Entangler::Cz)).unwrap()
}

fn unit_alpha(m: usize) -> DVector<Complex64> {
    let mut a = DVector::zeros(m);
    a[0] = Complex64::new(1.0, 0.0);
    a
}

#[test]
fn basis_counts() {
    let cases: [(&str, Hamiltonian, Vec<usize>, f64); 3] = [
        ("2-spin Heisenberg", models::heisenberg2(), vec![1, 4], 1.0),
        ("4-spin XX chain", models::xx_chain4(), vec![1, 4, 7, 8], 1.0),
        ("8-spin Ising ring", models::tfi8(), vec![1, 17, 137], 10.0),
    ];
    let mut detail = String::new();
    let mut ok = true;
    for (name, h, expected, budget) in &cases {
        let t0 = Instant::now();
        let counts: Vec<usize> = (0..expected.len())
            .map(|k| build_cumulative_moments(h, k).len())
            .collect();
        let dt = t0.elapsed().as_secs_f64();
        ok &= counts == *expected && dt < *budget;
        detail.push_str(&format!("{name} {counts:?} in {dt:.2}s; "));
    }
    report("basis-counts", ok, &detail);
}

#[test]
fn closed_basis_exactness() {
    let h = models::xx_chain4();
    let basis = build_cumulative_moments(&h, 3);
    assert_eq!(basis.len(), 8);
    assert!(closure_reached(&basis, &h));
    let psi = random_state(17, 4);
    let ov = compute_overlaps(&basis, &h, &psi, Mode::Exact, false).unwrap();
    let cfg = StepConfig {
        dt: 1e-3,
        n_steps: 3000,
        ..Default::default()
    };
    let traj = stepper::evolve(&unit_alpha(8), &ov, &cfg).unwrap();
    let fids = oracle::trajectory_fidelity(&traj, &basis, &psi, &h).unwrap();
    let min_fid = fids.iter().cloned().fold(f64::INFINITY, f64::min);

    let z0 = Hamiltonian::parse("1.0 Z0", 4).unwrap();
    let m = observable_matrix(&basis, &z0, &psi, Mode::Exact).unwrap();
    let evolver = ExactEvolver::new(&h).unwrap();
    let z_op = PauliString::parse_sparse("Z0", 4).unwrap();
    let mut max_err = 0.0f64;
    for (i, t) in traj.times.iter().enumerate() {
        let approx = observable_from_matrix(&traj.alphas[i], &m);
        let exact = evolver.evolve(&psi, *t).unwrap().expectation(&z_op).unwrap();
        max_err = max_err.max((approx - exact).abs());
    }
    let ok = min_fid >= 0.999 && max_err < 0.01;
    report(
        "closed-basis-exactness",
        ok,
        &format!("min fidelity {min_fid:.6}, max <Z0> error {max_err:.4}"),
    );
}

#[test]
fn order_of_accuracy() {
    let h = models::heisenberg2();
    let basis = build_cumulative_moments(&h, 1);
    let psi = random_state(19, 2);
    let ov = compute_overlaps(&basis, &h, &psi, Mode::Exact, true).unwrap();
    let alpha = unit_alpha(basis.len());

    // Per-step self-consistency: one full step vs two half steps.
    let mut slopes = Vec::new();
    for (order, want) in [(Order::First, 2.0), (Order::Second, 3.0)] {
        let dts = [1e-1, 3e-2, 1e-2, 3e-3];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let full_cfg = StepConfig {
                    dt,
                    order,
                    ..Default::default()
                };
                let (full, _) = stepper::step(&alpha, &ov, &full_cfg).unwrap();
                let half_cfg = StepConfig {
                    dt: dt / 2.0,
                    ..full_cfg
                };
                let half = Stepper::new(&ov, &half_cfg).unwrap();
                let (mid, _) = half.step(&alpha).unwrap();
                let (twice, _) = half.step(&mid).unwrap();
                (&full - align_phase(&full, &twice)).norm()
            })
            .collect();
        let slope = fit_loglog_slope(&dts, &errs);
        slopes.push((order, slope, want));
    }
    let slopes_ok = slopes.iter().all(|(_, s, w)| (s - w).abs() < 0.2);

    // Second order strictly beats first order in terminal fidelity.
    let mut terminal = Vec::new();
    for order in [Order::First, Order::Second] {
        let cfg = StepConfig {
            dt: 1e-2,
            order,
            n_steps: 200,
            ..Default::default()
        };
        let traj = stepper::evolve(&alpha, &ov, &cfg).unwrap();
        let fids = oracle::trajectory_fidelity(&traj, &basis, &psi, &h).unwrap();
        terminal.push(*fids.last().unwrap());
    }
    let beats = terminal[1] > terminal[0];
    report(
        "order-of-accuracy",
        slopes_ok && beats,
        &format!(
            "slopes {:?}, terminal fidelities order1 {:.8} order2 {:.8}",
            slopes
                .iter()
                .map(|(o, s, _)| format!("{o:?}:{s:.2}"))
                .collect::<Vec<_>>(),
            terminal[0],
            terminal[1]
        ),
    );
}

#[test]
fn qas_equivalence() {
    // TQS first-order step vs one raw Euler step of the linear flow, on
    // random Pauli-sum Hamiltonians and random states.
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let mut detail = String::new();
    let mut ok = true;
    for trial in 0..4u64 {
        let n = 2 + (trial % 2) as usize;
        let n_terms = 3 + (rng.random::<u64>() % 3) as usize;
        let terms: Vec<(f64, PauliString)> = (0..n_terms)
            .map(|_| {
                let x = rng.random::<u64>() & ((1 << n) - 1);
                let z = rng.random::<u64>() & ((1 << n) - 1);
                (
                    rng.random_range(-1.0..1.0),
                    PauliString::new(n, x, z, 0),
                )
            })
            .collect();
        let h = match Hamiltonian::new(n, terms) {
            Ok(h) => h,
            Err(_) => continue, // all terms cancelled; skip this draw
        };
        let basis = build_cumulative_moments(&h, 1);
        let psi = random_state(100 + trial, n);
        let ov = compute_overlaps(&basis, &h, &psi, Mode::Exact, false).unwrap();
        let alpha = unit_alpha(basis.len());
        let dts = [1e-1, 1e-2, 1e-3, 1e-4];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let cfg = StepConfig {
                    dt,
                    ..Default::default()
                };
                let (tqs_step, _) = stepper::step(&alpha, &ov, &cfg).unwrap();
                let euler = qas::integrate(
                    &alpha,
                    &ov,
                    dt,
                    1,
                    Integrator::Euler,
                    1e-10,
                    false,
                )
                .unwrap()
                .alphas
                .last()
                .unwrap()
                .clone();
                (&tqs_step - align_phase(&tqs_step, &euler)).norm()
            })
            .collect();
        let slope = fit_loglog_slope(&dts, &errs);
        ok &= (slope - 2.0).abs() < 0.2;
        detail.push_str(&format!("n={n} slope {slope:.2}; "));
    }
    report("qas-equivalence", ok, &detail);
}

#[test]
fn exact_unitary_mode() {
    let h = models::xx_chain4();
    let basis = build_cumulative_moments(&h, 3);
    assert!(closure_reached(&basis, &h));
    let psi = random_state(23, 4);
    let mut ok = true;
    let mut worst = 1.0f64;
    for &dt in &[1e-3, 1e-2, 0.1, 0.25, 0.5] {
        let mut ov = compute_overlaps(&basis, &h, &psi, Mode::Exact, false).unwrap();
        ov.insert_named("R".into(), compute_r(&basis, &h, &psi, dt).unwrap());
        let cfg = StepConfig {
            dt,
            order: Order::ExactUnitary,
            n_steps: 6,
            ..Default::default()
        };
        let traj = stepper::evolve(&unit_alpha(basis.len()), &ov, &cfg).unwrap();
        let fids = oracle::trajectory_fidelity(&traj, &basis, &psi, &h).unwrap();
        for f in fids {
            worst = worst.min(f);
            ok &= f >= 1.0 - 1e-8;
        }
    }
    report(
        "exact-unitary-mode",
        ok,
        &format!("worst fidelity {worst:.12}"),
    );
}

#[test]
fn norm_identity() {
    // phi = (I - i dt H - dt^2/2 H^2) psi, dense. Its coefficient vector in
    // the moment basis satisfies a^ E a = <phi|phi> identically, and
    // <phi|phi> - 1 = dt^4/4 <H^4> shrinks at fourth order.
    let h = models::heisenberg2();
    let basis = build_cumulative_moments(&h, 2);
    let psi = random_state(29, 2);
    let ov = compute_overlaps(&basis, &h, &psi, Mode::Exact, false).unwrap();
    let hd = h.dense_matrix().unwrap();
    let dim = hd.nrows();

    let index_of = |p: &PauliString| -> usize {
        let key = p.canonical().key();
        basis
            .reps()
            .iter()
            .position(|r| r.key() == key)
            .expect("product representable in basis")
    };

    let dts = [0.3, 0.2, 0.1, 0.05];
    let mut identity_gap = 0.0f64;
    let mut deviations = Vec::new();
    for &dt in &dts {
        let v2 = DMatrix::identity(dim, dim)
            - &hd * Complex64::new(0.0, dt)
            - &hd * &hd * Complex64::new(dt * dt / 2.0, 0.0);
        let phi = &v2 * psi.amplitudes();
        let phi_norm_sq = phi.dotc(&phi).re;

        let mut alpha: DVector<Complex64> = DVector::zeros(basis.len());
        alpha[0] += Complex64::new(1.0, 0.0);
        for (c, p) in h.terms() {
            let (_, phase) = p.canonicalize();
            alpha[index_of(p)] += Complex64::new(0.0, -dt) * c * phase;
        }
        for (ci, pi) in h.terms() {
            for (cj, pj) in h.terms() {
                let prod = pi.multiply(pj).unwrap();
                let (_, phase) = prod.canonicalize();
                alpha[index_of(&prod)] +=
                    Complex64::new(-dt * dt / 2.0, 0.0) * ci * cj * phase;
            }
        }
        let quad = alpha.dotc(&(ov.e() * &alpha)).re;
        identity_gap = identity_gap.max((quad - phi_norm_sq).abs());
        deviations.push((phi_norm_sq - 1.0).abs());
    }
    let slope = fit_loglog_slope(&dts, &deviations);
    let ok = identity_gap < 1e-10 && slope >= 3.8;
    report(
        "norm-identity",
        ok,
        &format!("identity gap {identity_gap:.2e}, deviation slope {slope:.2}"),
    );
}

#[test]
fn circuit_economy() {
    let h = models::tfi2();
    let basis = build_cumulative_moments(&h, 4);
    let closed = closure_reached(&basis, &h);
    let count = circuit_count(&basis, &h, false);
    // Regression constant: the closed basis is the full 32-element group, and
    // E+D need one circuit per non-identity element.
    let ok = closed && basis.len() == 32 && count == 31 && count <= 40;
    report(
        "circuit-economy",
        ok,
        &format!("closed basis size {}, circuit count {count}", basis.len()),
    );
}

#[test]
fn shot_noise() {
    let h = models::heisenberg2();
    let basis = build_cumulative_moments(&h, 1);
    let psi = random_state(31, 2);
    let exact = compute_overlaps(&basis, &h, &psi, Mode::Exact, false).unwrap();

    let mut total = 0usize;
    let mut within = 0usize;
    for seed in 0..100 {
        let sampled = compute_overlaps(
            &basis,
            &h,
            &psi,
            Mode::Sampled { shots: 8192, seed },
            false,
        )
        .unwrap();
        for (mat, ref_mat) in [(sampled.e(), exact.e()), (sampled.d(), exact.d())] {
            for (a, b) in mat.iter().zip(ref_mat.iter()) {
                total += 1;
                if (a - b).norm() < 0.05 {
                    within += 1;
                }
            }
        }
    }
    let frac = within as f64 / total as f64;

    let shot_grid = [512u64, 2048, 8192, 32768];
    let stds: Vec<f64> = shot_grid
        .iter()
        .map(|&shots| {
            let mut sum2 = 0.0;
            let mut n = 0usize;
            for seed in 0..40 {
                let sampled =
                    compute_overlaps(&basis, &h, &psi, Mode::Sampled { shots, seed }, false)
                        .unwrap();
                for (a, b) in sampled.e().iter().zip(exact.e().iter()) {
                    sum2 += (a - b).norm_sqr();
                    n += 1;
                }
            }
            (sum2 / n as f64).sqrt()
        })
        .collect();
    let shots_f: Vec<f64> = shot_grid.iter().map(|&s| s as f64).collect();
    let slope = fit_loglog_slope(&shots_f, &stds);

    let ok = frac >= 0.99 && (slope + 0.5).abs() < 0.1;
    report(
        "shot-noise",
        ok,
        &format!("within-tolerance fraction {frac:.4}, std slope {slope:.3}"),
    );
}

#[test]
fn invariant_suite() {
    let mut ok = true;
    let mut detail = String::new();

    // Overlap matrix structure on a non-closed basis.
    let h = models::tfi2();
    let basis = build_cumulative_moments(&h, 1);
    let psi = random_state(37, 3);
    let ov = compute_overlaps(&basis, &h, &psi, Mode::Exact, true).unwrap();
    for (name, m) in [("E", ov.e()), ("D", ov.d()), ("J", ov.j().unwrap())] {
        let herm = (m - m.adjoint()).norm();
        if herm > 1e-12 {
            ok = false;
            detail.push_str(&format!("{name} not Hermitian ({herm:.2e}); "));
        }
    }
    let unit_diag = (0..ov.dim()).all(|i| (ov.e()[(i, i)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    ok &= unit_diag;
    let min_eig = ov
        .e()
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    ok &= min_eig >= -1e-8;

    // Normalization after every exact-mode step, and reconstruction norm.
    let cfg = StepConfig {
        dt: 5e-3,
        n_steps: 100,
        ..Default::default()
    };
    let traj = stepper::evolve(&unit_alpha(ov.dim()), &ov, &cfg).unwrap();
    for alpha in &traj.alphas {
        let n = alpha.dotc(&(ov.e() * alpha)).re;
        ok &= (n - 1.0).abs() <= 1e-8;
        let raw = oracle::reconstruct_raw(alpha, &basis, &psi).unwrap();
        ok &= (raw.dotc(&raw).re - n).abs() <= 1e-8;
    }

    // Pauli multiplication vs dense Kronecker products, 1000 random pairs.
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let mut algebra_ok = true;
    for _ in 0..1000 {
        let n = 1 + (rng.random::<u64>() % 3) as usize;
        let mask = (1u64 << n) - 1;
        let p = PauliString::new(
            n,
            rng.random::<u64>() & mask,
            rng.random::<u64>() & mask,
            (rng.random::<u64>() % 4) as u8,
        );
        let q = PauliString::new(
            n,
            rng.random::<u64>() & mask,
            rng.random::<u64>() & mask,
            (rng.random::<u64>() % 4) as u8,
        );
        let prod = p.multiply(&q).unwrap();
        let dense = p.dense_matrix().unwrap() * q.dense_matrix().unwrap();
        algebra_ok &= (prod.dense_matrix().unwrap() - dense).norm() < 1e-12;
    }
    ok &= algebra_ok;
    detail.push_str(&format!(
        "E min eig {min_eig:.2e}, unit diagonal {unit_diag}, algebra {algebra_ok}"
    ));
    report("invariant-suite", ok, &detail);
}
