//! Symplectic algebra for n-qubit Pauli strings and Pauli-sum Hamiltonians.
//!
//! A string is stored as an X bit-mask, a Z bit-mask and a global phase
//! exponent `e` with the operator equal to `i^e` times the tensor product of
//! the per-qubit letters. The letter on qubit q is I, X, Z or Y according to
//! the (x, z) bits, with the convention Y = i * X * Z fixed project-wide.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, TqsError};

/// Largest system for which dense matrices and statevectors are allowed.
pub const ORACLE_QUBIT_LIMIT: usize = 12;

/// Coefficients with magnitude below this are dropped when collecting terms.
pub const TERM_TOLERANCE: f64 = 1e-12;

const MAX_QUBITS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
    /// Global factor i^phase_exp, phase_exp in 0..4.
    phase_exp: u8,
}

/// i^k as a complex unit.
pub fn i_pow(k: u8) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl PauliString {
    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64, phase_exp: u8) -> Self {
        assert!((1..=MAX_QUBITS).contains(&n_qubits));
        let live = if n_qubits == MAX_QUBITS {
            u64::MAX
        } else {
            (1u64 << n_qubits) - 1
        };
        PauliString {
            n_qubits,
            x_mask: x_mask & live,
            z_mask: z_mask & live,
            phase_exp: phase_exp % 4,
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(n_qubits, 0, 0, 0)
    }

    /// Canonical single-letter string: `letter` in {'I','X','Y','Z'} on `qubit`.
    pub fn single(n_qubits: usize, qubit: usize, letter: char) -> Result<Self> {
        assert!(qubit < n_qubits);
        let bit = 1u64 << qubit;
        let (x, z) = match letter {
            'I' => (0, 0),
            'X' => (bit, 0),
            'Y' => (bit, bit),
            'Z' => (0, bit),
            other => {
                return Err(TqsError::parse_nl(format!("unknown Pauli letter '{other}'")));
            }
        };
        Ok(Self::new(n_qubits, x, z, 0))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase_exp
    }

    /// The tracked global factor i^phase_exp.
    pub fn phase_factor(&self) -> Complex64 {
        i_pow(self.phase_exp)
    }

    pub fn is_canonical(&self) -> bool {
        self.phase_exp == 0
    }

    /// True when both masks are zero, regardless of phase.
    pub fn is_identity_op(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Ordering key: lexicographic on (z_mask, x_mask).
    pub fn key(&self) -> (u64, u64) {
        (self.z_mask, self.x_mask)
    }

    /// Letter on `qubit`.
    pub fn letter(&self, qubit: usize) -> char {
        let x = self.x_mask >> qubit & 1;
        let z = self.z_mask >> qubit & 1;
        match (x, z) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (1, 1) => 'Y',
            _ => 'Z',
        }
    }

    /// Exact product: dense(result) = dense(self) * dense(rhs).
    pub fn multiply(&self, rhs: &PauliString) -> Result<PauliString> {
        if self.n_qubits != rhs.n_qubits {
            return Err(TqsError::DimensionMismatch(self.n_qubits, rhs.n_qubits));
        }
        let x = self.x_mask ^ rhs.x_mask;
        let z = self.z_mask ^ rhs.z_mask;
        // Convert both factors to X^x Z^z form (each letter contributes i^{xz}),
        // commute Z past X (sign per crossing), convert back to letter form.
        let e = self.phase_exp as i64
            + rhs.phase_exp as i64
            + (self.x_mask & self.z_mask).count_ones() as i64
            + (rhs.x_mask & rhs.z_mask).count_ones() as i64
            + 2 * (self.z_mask & rhs.x_mask).count_ones() as i64
            - (x & z).count_ones() as i64;
        Ok(PauliString::new(
            self.n_qubits,
            x,
            z,
            e.rem_euclid(4) as u8,
        ))
    }

    /// Phase-free representative plus the stripped unit phase:
    /// phase * dense(rep) == dense(self).
    pub fn canonicalize(&self) -> (PauliString, Complex64) {
        (
            PauliString::new(self.n_qubits, self.x_mask, self.z_mask, 0),
            self.phase_factor(),
        )
    }

    pub fn canonical(&self) -> PauliString {
        PauliString::new(self.n_qubits, self.x_mask, self.z_mask, 0)
    }

    /// Hermitian conjugate. The canonical part is Hermitian, so only the
    /// phase flips.
    pub fn dagger(&self) -> PauliString {
        PauliString::new(self.n_qubits, self.x_mask, self.z_mask, (4 - self.phase_exp) % 4)
    }

    /// Action on a computational basis state: |b> maps to factor * |b ^ x_mask>.
    /// Returns (target index, i-exponent of the unit factor).
    pub fn basis_action(&self, b: u64) -> (u64, u8) {
        let e = self.phase_exp as u32
            + (self.x_mask & self.z_mask).count_ones()
            + 2 * (self.z_mask & b).count_ones();
        (b ^ self.x_mask, (e % 4) as u8)
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > ORACLE_QUBIT_LIMIT {
            return Err(TqsError::QubitLimit {
                n: self.n_qubits,
                limit: ORACLE_QUBIT_LIMIT,
            });
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim as u64 {
            let (t, e) = self.basis_action(b);
            m[(t as usize, b as usize)] = i_pow(e);
        }
        Ok(m)
    }

    /// Dense letter form, qubit 0 leftmost, e.g. "XZIY".
    pub fn to_dense_string(&self) -> String {
        (0..self.n_qubits).map(|q| self.letter(q)).collect()
    }

    /// Sparse form, e.g. "X0 Z1 Y3"; the identity is written "I".
    pub fn to_sparse_string(&self) -> String {
        let parts: Vec<String> = (0..self.n_qubits)
            .filter(|&q| self.letter(q) != 'I')
            .map(|q| format!("{}{}", self.letter(q), q))
            .collect();
        if parts.is_empty() {
            "I".to_string()
        } else {
            parts.join(" ")
        }
    }

    /// Parse the dense letter form; the qubit count is the string length.
    pub fn parse_dense(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() > MAX_QUBITS {
            return Err(TqsError::parse_nl(format!("bad Pauli string '{s}'")));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, c) in s.chars().enumerate() {
            match c {
                'I' => {}
                'X' => x |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                'Z' => z |= 1 << q,
                other => {
                    return Err(TqsError::parse_nl(format!("unknown Pauli letter '{other}'")));
                }
            }
        }
        Ok(PauliString::new(s.len(), x, z, 0))
    }

    /// Parse the sparse form "X0 Z1 Y3" (or "I") on a fixed qubit count.
    pub fn parse_sparse(s: &str, n_qubits: usize) -> Result<Self> {
        let s = s.trim();
        if s == "I" || s.is_empty() {
            return Ok(PauliString::identity(n_qubits));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for tok in s.split_whitespace() {
            let mut chars = tok.chars();
            let letter = chars.next().unwrap();
            let q: usize = chars
                .as_str()
                .parse()
                .map_err(|_| TqsError::parse_nl(format!("bad Pauli factor '{tok}'")))?;
            if q >= n_qubits {
                return Err(TqsError::parse_nl(format!(
                    "qubit index {q} out of range for {n_qubits} qubits"
                )));
            }
            let bit = 1u64 << q;
            if (x | z) & bit != 0 {
                return Err(TqsError::parse_nl(format!("qubit {q} listed twice")));
            }
            match letter {
                'X' => x |= bit,
                'Y' => {
                    x |= bit;
                    z |= bit;
                }
                'Z' => z |= bit,
                other => {
                    return Err(TqsError::parse_nl(format!("unknown Pauli letter '{other}'")));
                }
            }
        }
        Ok(PauliString::new(n_qubits, x, z, 0))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase_exp {
            0 => "",
            1 => "i*",
            2 => "-",
            _ => "-i*",
        };
        write!(f, "{}{}", prefix, self.to_dense_string())
    }
}

/// Weighted sum of canonical Pauli strings with real coefficients; Hermitian
/// by construction.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        Self::with_options(n_qubits, terms, false)
    }

    pub fn with_options(
        n_qubits: usize,
        terms: Vec<(f64, PauliString)>,
        allow_identity: bool,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for (_, p) in &terms {
            if p.n_qubits() != n_qubits {
                return Err(TqsError::DimensionMismatch(n_qubits, p.n_qubits()));
            }
            if !p.is_canonical() {
                return Err(TqsError::NonCanonical);
            }
            if p.is_identity_op() && !allow_identity {
                return Err(TqsError::parse_nl(
                    "identity term not allowed in a Hamiltonian",
                ));
            }
            if !seen.insert(p.key()) {
                return Err(TqsError::parse_nl(format!(
                    "duplicate Hamiltonian term {}",
                    p.to_sparse_string()
                )));
            }
        }
        Ok(Hamiltonian { n_qubits, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// The squared Hamiltonian as a collected Pauli sum: like terms merged,
    /// coefficients below [`TERM_TOLERANCE`] dropped, output ordered
    /// lexicographically on (z_mask, x_mask).
    pub fn square_terms(&self) -> Vec<(Complex64, PauliString)> {
        let mut acc: std::collections::HashMap<(u64, u64), Complex64> =
            std::collections::HashMap::new();
        for (ci, pi) in &self.terms {
            for (cj, pj) in &self.terms {
                let prod = pi.multiply(pj).expect("equal qubit counts");
                let (rep, phase) = prod.canonicalize();
                *acc.entry(rep.key()).or_insert(Complex64::ZERO) += phase * ci * cj;
            }
        }
        let mut out: Vec<(Complex64, PauliString)> = acc
            .into_iter()
            .filter(|(_, c)| c.norm() >= TERM_TOLERANCE)
            .map(|((z, x), c)| (c, PauliString::new(self.n_qubits, x, z, 0)))
            .collect();
        out.sort_by_key(|(_, p)| p.key());
        out
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        let dim = 1usize
            .checked_shl(self.n_qubits as u32)
            .filter(|_| self.n_qubits <= ORACLE_QUBIT_LIMIT)
            .ok_or(TqsError::QubitLimit {
                n: self.n_qubits,
                limit: ORACLE_QUBIT_LIMIT,
            })?;
        let mut m = DMatrix::zeros(dim, dim);
        for (c, p) in &self.terms {
            for b in 0..dim as u64 {
                let (t, e) = p.basis_action(b);
                m[(t as usize, b as usize)] += i_pow(e) * *c;
            }
        }
        Ok(m)
    }

    /// Parse the line format "<coefficient> <sparse-pauli>", one term per
    /// line, '#' starting a comment.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (coeff_tok, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| TqsError::parse(idx + 1, "expected '<coefficient> <pauli>'"))?;
            let coeff: f64 = coeff_tok
                .parse()
                .map_err(|_| TqsError::parse(idx + 1, format!("bad coefficient '{coeff_tok}'")))?;
            let p = PauliString::parse_sparse(rest, n_qubits).map_err(|e| match e {
                TqsError::Parse { msg, .. } => TqsError::parse(idx + 1, msg),
                other => other,
            })?;
            terms.push((coeff, p));
        }
        Hamiltonian::new(n_qubits, terms)
    }

    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for (c, p) in &self.terms {
            s.push_str(&format!("{} {}\n", c, p.to_sparse_string()));
        }
        s
    }
}
