//! Cumulative moment-state bases: breadth-first generation of all distinct
//! canonical products of up to k Hamiltonian term strings, which label the
//! ansatz states |chi_i> = R_i |psi>.

use std::collections::{BTreeMap, HashSet};

use crate::pauli::{Hamiltonian, PauliString};

/// Deduplicated cumulative moment basis of order k. Deduplication is up to
/// global phase: a phase on a basis state is absorbed by its complex ansatz
/// coefficient.
#[derive(Clone, Debug)]
pub struct MomentBasis {
    n_qubits: usize,
    order: usize,
    reps: Vec<PauliString>,
    /// Generation level of each rep (length of the shortest producing word).
    levels: Vec<usize>,
    /// Term-index word that produced each rep, outermost factor first.
    provenance: Vec<Vec<usize>>,
}

impl MomentBasis {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[PauliString] {
        &self.reps
    }

    pub fn level(&self, i: usize) -> usize {
        self.levels[i]
    }

    pub fn provenance(&self, i: usize) -> &[usize] {
        &self.provenance[i]
    }

    /// One line per rep: "level <k>: <sparse-pauli> <provenance word>".
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for i in 0..self.reps.len() {
            let word = if self.provenance[i].is_empty() {
                "-".to_string()
            } else {
                self.provenance[i]
                    .iter()
                    .map(|j| j.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            s.push_str(&format!(
                "level {}: {} {}\n",
                self.levels[i],
                self.reps[i].to_sparse_string(),
                word
            ));
        }
        s
    }
}

/// All canonical representatives of products of at most `k` Hamiltonian term
/// strings, by breadth-first search over left multiplication. The identity
/// sits at index 0; each level is appended in lexicographic (z, x) order.
pub fn build_cumulative_moments(h: &Hamiltonian, k: usize) -> MomentBasis {
    let n = h.n_qubits();
    let identity = PauliString::identity(n);
    let mut reps = vec![identity];
    let mut levels = vec![0usize];
    let mut provenance: Vec<Vec<usize>> = vec![Vec::new()];
    let mut seen: HashSet<(u64, u64)> = HashSet::new();
    seen.insert(identity.key());

    let mut frontier: Vec<usize> = vec![0];
    for level in 1..=k {
        let mut found: BTreeMap<(u64, u64), (PauliString, Vec<usize>)> = BTreeMap::new();
        for &idx in &frontier {
            let parent = reps[idx];
            for (j, (_, term)) in h.terms().iter().enumerate() {
                let rep = term.multiply(&parent).expect("equal qubit counts").canonical();
                if seen.contains(&rep.key()) || found.contains_key(&rep.key()) {
                    continue;
                }
                let mut word = vec![j];
                word.extend_from_slice(&provenance[idx]);
                found.insert(rep.key(), (rep, word));
            }
        }
        if found.is_empty() {
            break;
        }
        frontier = Vec::with_capacity(found.len());
        for (key, (rep, word)) in found {
            seen.insert(key);
            frontier.push(reps.len());
            reps.push(rep);
            levels.push(level);
            provenance.push(word);
        }
    }

    MomentBasis {
        n_qubits: n,
        order: k,
        reps,
        levels,
        provenance,
    }
}

/// True iff left-multiplying every rep by every Hamiltonian term stays in
/// the basis (up to phase): evolution on such a basis is exact in the
/// spanned subspace.
pub fn closure_reached(basis: &MomentBasis, h: &Hamiltonian) -> bool {
    let seen: HashSet<(u64, u64)> = basis.reps().iter().map(|r| r.key()).collect();
    basis.reps().iter().all(|rep| {
        h.terms().iter().all(|(_, term)| {
            let prod = term.multiply(rep).expect("equal qubit counts").canonical();
            seen.contains(&prod.key())
        })
    })
}
