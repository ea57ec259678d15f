//! Overlap matrices over a moment basis: the Gram matrix E, the Hamiltonian
//! matrix D, the squared-Hamiltonian matrix J and the exact-unitary matrix R.
//!
//! Every E/D/J entry reduces to a real expectation value of one canonical
//! Pauli string in the reference state; the complex phases from
//! canonicalization are applied classically. In sampled mode each distinct
//! string is estimated once with the full shot budget and the estimate is
//! reused wherever the string appears, which models one measured circuit per
//! string.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Result, TqsError};
use crate::linalg::hermitize;
use crate::moments::MomentBasis;
use crate::oracle::ExactEvolver;
use crate::pauli::{Hamiltonian, PauliString};
use crate::statevec::StateVector;

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum Mode {
    Exact,
    Sampled { shots: u64, seed: u64 },
}

impl Mode {
    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }
}

#[derive(Clone, Debug)]
pub struct OverlapSet {
    dim: usize,
    mode: Mode,
    basis_id: String,
    e: DMatrix<Complex64>,
    d: DMatrix<Complex64>,
    j: Option<DMatrix<Complex64>>,
    /// Extra named matrices: observable matrices ("OBS:<pauli>") and the
    /// exact-unitary overlap matrix ("R").
    named: Vec<(String, DMatrix<Complex64>)>,
}

impl OverlapSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn basis_id(&self) -> &str {
        &self.basis_id
    }

    pub fn e(&self) -> &DMatrix<Complex64> {
        &self.e
    }

    pub fn d(&self) -> &DMatrix<Complex64> {
        &self.d
    }

    pub fn j(&self) -> Option<&DMatrix<Complex64>> {
        self.j.as_ref()
    }

    pub fn named(&self, name: &str) -> Option<&DMatrix<Complex64>> {
        self.named
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }

    pub fn named_entries(&self) -> &[(String, DMatrix<Complex64>)] {
        &self.named
    }

    pub fn insert_named(&mut self, name: String, m: DMatrix<Complex64>) {
        self.named.retain(|(n, _)| *n != name);
        self.named.push((name, m));
    }

    /// Self-describing text serialization; round-trips bit-exactly through
    /// [`OverlapSet::parse`].
    pub fn serialize(&self) -> String {
        let mut s = String::from("# tqs overlap set v1\n");
        s.push_str(&format!("dimension {}\n", self.dim));
        match self.mode {
            Mode::Exact => s.push_str("mode exact\n"),
            Mode::Sampled { shots, seed } => {
                s.push_str(&format!("mode sampled {shots} {seed}\n"))
            }
        }
        s.push_str(&format!("basis {}\n", self.basis_id));
        let mut write = |name: &str, m: &DMatrix<Complex64>| {
            s.push_str(&format!("matrix {name}\n"));
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols())
                    .map(|c| format!("{:.17e} {:.17e}", m[(r, c)].re, m[(r, c)].im))
                    .collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
        };
        write("E", &self.e);
        write("D", &self.d);
        if let Some(j) = &self.j {
            write("J", j);
        }
        for (name, m) in &self.named {
            write(name, m);
        }
        s.push_str("end\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut mode = None;
        let mut basis_id = String::new();
        let mut matrices: Vec<(String, DMatrix<Complex64>)> = Vec::new();
        let mut current: Option<(String, Vec<Complex64>)> = None;

        let mut finish =
            |current: &mut Option<(String, Vec<Complex64>)>, dim: usize| -> Result<()> {
                if let Some((name, vals)) = current.take() {
                    if vals.len() != dim * dim {
                        return Err(TqsError::parse_nl(format!(
                            "matrix {name} has {} entries, expected {}",
                            vals.len(),
                            dim * dim
                        )));
                    }
                    matrices.push((name, DMatrix::from_row_iterator(dim, dim, vals)));
                }
                Ok(())
            };

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap();
            match head {
                "dimension" => {
                    dim = Some(
                        toks.next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| TqsError::parse(idx + 1, "bad dimension"))?,
                    )
                }
                "mode" => {
                    mode = Some(match toks.next() {
                        Some("exact") => Mode::Exact,
                        Some("sampled") => {
                            let shots = toks
                                .next()
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| TqsError::parse(idx + 1, "bad shot count"))?;
                            let seed = toks
                                .next()
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| TqsError::parse(idx + 1, "bad seed"))?;
                            Mode::Sampled { shots, seed }
                        }
                        _ => return Err(TqsError::parse(idx + 1, "bad mode")),
                    })
                }
                "basis" => basis_id = toks.collect::<Vec<_>>().join(" "),
                "matrix" => {
                    let d = dim.ok_or_else(|| {
                        TqsError::parse(idx + 1, "'dimension' must precede 'matrix'")
                    })?;
                    finish(&mut current, d)?;
                    let name = toks
                        .next()
                        .ok_or_else(|| TqsError::parse(idx + 1, "missing matrix name"))?;
                    current = Some((name.to_string(), Vec::new()));
                }
                "end" => {
                    let d = dim.ok_or_else(|| TqsError::parse(idx + 1, "missing dimension"))?;
                    finish(&mut current, d)?;
                }
                _ => {
                    let (_, vals) = current
                        .as_mut()
                        .ok_or_else(|| TqsError::parse(idx + 1, "numbers outside a matrix"))?;
                    let nums: Vec<f64> = line
                        .split_whitespace()
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| TqsError::parse(idx + 1, "bad number"))?;
                    if !nums.len().is_multiple_of(2) {
                        return Err(TqsError::parse(idx + 1, "odd number of reals in row"));
                    }
                    vals.extend(nums.chunks(2).map(|c| Complex64::new(c[0], c[1])));
                }
            }
        }

        let dim = dim.ok_or_else(|| TqsError::parse_nl("missing dimension"))?;
        let mode = mode.ok_or_else(|| TqsError::parse_nl("missing mode"))?;
        let pos = |name: &str| matrices.iter().position(|(n, _)| n == name);
        let e_idx = pos("E").ok_or_else(|| TqsError::parse_nl("missing matrix E"))?;
        let d_idx = pos("D").ok_or_else(|| TqsError::parse_nl("missing matrix D"))?;
        let e = matrices[e_idx].1.clone();
        let d = matrices[d_idx].1.clone();
        let j = pos("J").map(|i| matrices[i].1.clone());
        let named = matrices
            .into_iter()
            .filter(|(n, _)| n != "E" && n != "D" && n != "J")
            .collect();
        Ok(OverlapSet {
            dim,
            mode,
            basis_id,
            e,
            d,
            j,
            named,
        })
    }
}

/// Expectation cache keyed by canonical (z, x) masks. Identity is pinned to
/// exactly 1 and never measured.
struct ExpectationCache {
    values: BTreeMap<(u64, u64), f64>,
}

impl ExpectationCache {
    fn build(
        keys: &BTreeMap<(u64, u64), PauliString>,
        psi: &StateVector,
        mode: Mode,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut rng = match mode {
            Mode::Sampled { seed, .. } => Some(ChaCha12Rng::seed_from_u64(seed)),
            Mode::Exact => None,
        };
        for (key, p) in keys {
            let v = if p.is_identity_op() {
                1.0
            } else {
                match mode {
                    Mode::Exact => psi.expectation(p)?,
                    Mode::Sampled { shots, .. } => {
                        psi.sample_expectation(p, shots, rng.as_mut().unwrap())?
                    }
                }
            };
            values.insert(*key, v);
        }
        Ok(ExpectationCache { values })
    }

    /// Phase-corrected value of an arbitrary-phase Pauli string.
    fn value(&self, p: &PauliString) -> Complex64 {
        let (rep, phase) = p.canonicalize();
        phase * self.values[&rep.key()]
    }
}

/// Distinct canonical strings needed for E, D (and J), identity included.
fn required_strings(
    basis: &MomentBasis,
    h: &Hamiltonian,
    square: Option<&[(Complex64, PauliString)]>,
) -> BTreeMap<(u64, u64), PauliString> {
    let mut keys = BTreeMap::new();
    let reps = basis.reps();
    for m in 0..reps.len() {
        for n in m..reps.len() {
            let prod = reps[m].multiply(&reps[n]).unwrap();
            keys.insert(prod.canonical().key(), prod.canonical());
            for (_, p) in h.terms() {
                let triple = reps[m].multiply(p).unwrap().multiply(&reps[n]).unwrap();
                keys.insert(triple.canonical().key(), triple.canonical());
            }
            if let Some(terms) = square {
                for (_, q) in terms {
                    let triple = reps[m].multiply(q).unwrap().multiply(&reps[n]).unwrap();
                    keys.insert(triple.canonical().key(), triple.canonical());
                }
            }
        }
    }
    keys
}

/// Number of distinct measurement circuits (one per distinct non-identity
/// canonical Pauli string) needed for E and D, plus J when requested.
pub fn circuit_count(basis: &MomentBasis, h: &Hamiltonian, include_j: bool) -> usize {
    let square = include_j.then(|| h.square_terms());
    required_strings(basis, h, square.as_deref())
        .values()
        .filter(|p| !p.is_identity_op())
        .count()
}

fn pauli_sum_matrix(
    basis: &MomentBasis,
    terms: &[(Complex64, PauliString)],
    cache: &ExpectationCache,
) -> DMatrix<Complex64> {
    let reps = basis.reps();
    let m = reps.len();
    let mut out = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let mut sum = Complex64::ZERO;
            for (c, p) in terms {
                let triple = reps[a].multiply(p).unwrap().multiply(&reps[b]).unwrap();
                sum += c * cache.value(&triple);
            }
            out[(a, b)] = sum;
            if a != b {
                // Hermitian fill; valid because the collected sum is Hermitian.
                out[(b, a)] = sum.conj();
            }
        }
    }
    out
}

/// Basis matrix of a single Hermitian Pauli-sum observable, with its own
/// expectation cache.
pub fn observable_matrix(
    basis: &MomentBasis,
    obs: &Hamiltonian,
    psi: &StateVector,
    mode: Mode,
) -> Result<DMatrix<Complex64>> {
    if basis.n_qubits() != psi.n_qubits() || obs.n_qubits() != basis.n_qubits() {
        return Err(TqsError::DimensionMismatch(
            basis.n_qubits(),
            psi.n_qubits(),
        ));
    }
    let reps = basis.reps();
    let mut keys = BTreeMap::new();
    for a in 0..reps.len() {
        for b in a..reps.len() {
            for (_, p) in obs.terms() {
                let triple = reps[a].multiply(p).unwrap().multiply(&reps[b]).unwrap();
                keys.insert(triple.canonical().key(), triple.canonical());
            }
        }
    }
    let cache = ExpectationCache::build(&keys, psi, mode)?;
    let terms: Vec<(Complex64, PauliString)> = obs
        .terms()
        .iter()
        .map(|(c, p)| (Complex64::new(*c, 0.0), *p))
        .collect();
    let mut m = pauli_sum_matrix(basis, &terms, &cache);
    if !mode.is_exact() {
        hermitize(&mut m);
    }
    Ok(m)
}

pub fn compute_overlaps(
    basis: &MomentBasis,
    h: &Hamiltonian,
    psi: &StateVector,
    mode: Mode,
    include_j: bool,
) -> Result<OverlapSet> {
    compute_overlaps_full(basis, h, psi, mode, include_j, &[])
}

/// Full overlap computation. `observables` are extra Hermitian Pauli sums
/// whose basis matrices are computed from the same expectation cache and
/// stored under "OBS:<name>", so the classical evolution phase never touches
/// the statevector.
pub fn compute_overlaps_full(
    basis: &MomentBasis,
    h: &Hamiltonian,
    psi: &StateVector,
    mode: Mode,
    include_j: bool,
    observables: &[(String, Hamiltonian)],
) -> Result<OverlapSet> {
    if basis.n_qubits() != psi.n_qubits() {
        return Err(TqsError::DimensionMismatch(
            basis.n_qubits(),
            psi.n_qubits(),
        ));
    }
    let square = include_j.then(|| h.square_terms());
    let mut keys = required_strings(basis, h, square.as_deref());
    for (_, obs) in observables {
        if obs.n_qubits() != basis.n_qubits() {
            return Err(TqsError::DimensionMismatch(
                obs.n_qubits(),
                basis.n_qubits(),
            ));
        }
        let reps = basis.reps();
        for a in 0..reps.len() {
            for b in a..reps.len() {
                for (_, p) in obs.terms() {
                    let triple = reps[a].multiply(p).unwrap().multiply(&reps[b]).unwrap();
                    keys.insert(triple.canonical().key(), triple.canonical());
                }
            }
        }
    }
    let cache = ExpectationCache::build(&keys, psi, mode)?;

    let reps = basis.reps();
    let m = reps.len();
    let mut e = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let v = cache.value(&reps[a].multiply(&reps[b]).unwrap());
            e[(a, b)] = v;
            if a != b {
                e[(b, a)] = v.conj();
            }
        }
    }
    let h_terms: Vec<(Complex64, PauliString)> = h
        .terms()
        .iter()
        .map(|(c, p)| (Complex64::new(*c, 0.0), *p))
        .collect();
    let mut d = pauli_sum_matrix(basis, &h_terms, &cache);
    let mut j = square.map(|terms| pauli_sum_matrix(basis, &terms, &cache));

    if !mode.is_exact() {
        hermitize(&mut e);
        hermitize(&mut d);
        if let Some(j) = j.as_mut() {
            hermitize(j);
        }
    }

    let mut named = Vec::new();
    for (name, obs) in observables {
        let terms: Vec<(Complex64, PauliString)> = obs
            .terms()
            .iter()
            .map(|(c, p)| (Complex64::new(*c, 0.0), *p))
            .collect();
        let mut m_obs = pauli_sum_matrix(basis, &terms, &cache);
        if !mode.is_exact() {
            hermitize(&mut m_obs);
        }
        named.push((format!("OBS:{name}"), m_obs));
    }

    Ok(OverlapSet {
        dim: m,
        mode,
        basis_id: format!("k={} m={}", basis.order(), m),
        e,
        d,
        j,
        named,
    })
}

/// Exact-unitary overlap matrix R_{mn} = <chi_m| exp(-iH dt) |chi_n>,
/// computed with the dense oracle.
pub fn compute_r(
    basis: &MomentBasis,
    h: &Hamiltonian,
    psi: &StateVector,
    dt: f64,
) -> Result<DMatrix<Complex64>> {
    let evolver = ExactEvolver::new(h)?;
    let chis: Vec<StateVector> = basis
        .reps()
        .iter()
        .map(|rep| psi.apply_pauli(rep))
        .collect::<Result<_>>()?;
    let m = chis.len();
    let mut r = DMatrix::zeros(m, m);
    for n in 0..m {
        let evolved = evolver.evolve_raw(chis[n].amplitudes(), dt);
        for a in 0..m {
            r[(a, n)] = chis[a].amplitudes().dotc(&evolved);
        }
    }
    Ok(r)
}
