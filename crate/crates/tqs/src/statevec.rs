//! Dense statevector backend: layered preparation circuits, Pauli
//! application, exact and shot-sampled expectation values. This module plays
//! the role of the quantum computer; everything downstream of the overlap
//! matrices is classical.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Result, TqsError};
use crate::pauli::{i_pow, PauliString, ORACLE_QUBIT_LIMIT};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Entangler {
    Cz,
    Cnot,
}

impl Entangler {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cz" => Ok(Entangler::Cz),
            "cnot" => Ok(Entangler::Cnot),
            other => Err(TqsError::parse_nl(format!("unknown entangler '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Entangler::Cz => "cz",
            Entangler::Cnot => "cnot",
        }
    }
}

/// One circuit layer: a rotation triple per qubit (applied Rx, then Ry, then
/// Rz), followed by two-qubit entanglers.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// One (theta_x, theta_y, theta_z) triple per qubit, in radians.
    pub rotations: Vec<[f64; 3]>,
    pub entanglers: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub layers: Vec<Layer>,
    pub entangler: Entangler,
    /// Seed the angles were drawn from, when the spec was randomized.
    pub seed: Option<u64>,
}

impl CircuitSpec {
    /// Randomized layered circuit in the style of the hardware-run initial
    /// states: per layer, a random rotation triple on every qubit (angles
    /// uniform in [0, 2pi), drawn from ChaCha12 seeded with `seed`), then a
    /// chain of entanglers (q, q+1).
    pub fn random_layers(
        n_qubits: usize,
        n_layers: usize,
        seed: u64,
        entangler: Entangler,
    ) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let chain: Vec<(usize, usize)> = (0..n_qubits.saturating_sub(1))
            .map(|q| (q, q + 1))
            .collect();
        let layers = (0..n_layers)
            .map(|_| Layer {
                rotations: (0..n_qubits)
                    .map(|_| {
                        [
                            rng.random_range(0.0..std::f64::consts::TAU),
                            rng.random_range(0.0..std::f64::consts::TAU),
                            rng.random_range(0.0..std::f64::consts::TAU),
                        ]
                    })
                    .collect(),
                entanglers: chain.clone(),
            })
            .collect();
        CircuitSpec {
            n_qubits,
            layers,
            entangler,
            seed: Some(seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for layer in &self.layers {
            if layer.rotations.len() != self.n_qubits {
                return Err(TqsError::parse_nl(
                    "layer must carry one rotation triple per qubit",
                ));
            }
            for &(c, t) in &layer.entanglers {
                if c == t || c >= self.n_qubits || t >= self.n_qubits {
                    return Err(TqsError::parse_nl(format!(
                        "bad entangler pair ({c}, {t})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_file_string(&self) -> String {
        let mut s = format!("qubits {}\nentangler {}\n", self.n_qubits, self.entangler.name());
        if let Some(seed) = self.seed {
            s.push_str(&format!("seed {seed}\n"));
        }
        for layer in &self.layers {
            s.push_str("layer\n");
            for (q, r) in layer.rotations.iter().enumerate() {
                s.push_str(&format!("rot {q} {:.17e} {:.17e} {:.17e}\n", r[0], r[1], r[2]));
            }
            for &(c, t) in &layer.entanglers {
                s.push_str(&format!("ent {c} {t}\n"));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut entangler = Entangler::Cz;
        let mut seed = None;
        let mut layers: Vec<Layer> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap();
            let rest: Vec<&str> = toks.collect();
            let bad = |msg: &str| TqsError::parse(idx + 1, msg.to_string());
            match head {
                "qubits" => {
                    n_qubits = Some(
                        rest.first()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| bad("bad qubit count"))?,
                    )
                }
                "entangler" => {
                    entangler =
                        Entangler::parse(rest.first().ok_or_else(|| bad("missing entangler"))?)?
                }
                "seed" => {
                    seed = Some(
                        rest.first()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| bad("bad seed"))?,
                    )
                }
                "layer" => {
                    let n = n_qubits.ok_or_else(|| bad("'qubits' must come before 'layer'"))?;
                    layers.push(Layer {
                        rotations: vec![[0.0; 3]; n],
                        entanglers: Vec::new(),
                    });
                }
                "rot" => {
                    let layer = layers.last_mut().ok_or_else(|| bad("'rot' outside a layer"))?;
                    if rest.len() != 4 {
                        return Err(bad("expected 'rot <qubit> <tx> <ty> <tz>'"));
                    }
                    let q: usize = rest[0].parse().map_err(|_| bad("bad qubit index"))?;
                    if q >= layer.rotations.len() {
                        return Err(bad("rotation qubit out of range"));
                    }
                    for k in 0..3 {
                        layer.rotations[q][k] =
                            rest[k + 1].parse().map_err(|_| bad("bad angle"))?;
                    }
                }
                "ent" => {
                    let layer = layers.last_mut().ok_or_else(|| bad("'ent' outside a layer"))?;
                    if rest.len() != 2 {
                        return Err(bad("expected 'ent <control> <target>'"));
                    }
                    let c = rest[0].parse().map_err(|_| bad("bad control index"))?;
                    let t = rest[1].parse().map_err(|_| bad("bad target index"))?;
                    layer.entanglers.push((c, t));
                }
                other => return Err(bad(&format!("unknown directive '{other}'"))),
            }
        }
        let spec = CircuitSpec {
            n_qubits: n_qubits.ok_or_else(|| TqsError::parse_nl("missing 'qubits' line"))?,
            layers,
            entangler,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Normalized pure state on n qubits; qubit 0 is the least significant bit
/// of the basis-state index.
#[derive(Clone, Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: DVector<Complex64>,
}

impl StateVector {
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let mut amps = DVector::zeros(1 << n_qubits);
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Computational basis state from a bit string, qubit 0 leftmost
    /// (so "10" is qubit 0 in |1>, qubit 1 in |0>).
    pub fn basis_state(bits: &str) -> Result<Self> {
        let n = bits.len();
        check_size(n)?;
        let mut index = 0u64;
        for (q, c) in bits.chars().enumerate() {
            match c {
                '0' => {}
                '1' => index |= 1 << q,
                other => {
                    return Err(TqsError::parse_nl(format!("bad basis bit '{other}'")));
                }
            }
        }
        let mut amps = DVector::zeros(1 << n);
        amps[index as usize] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: DVector<Complex64>) -> Result<Self> {
        check_size(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(TqsError::DimensionMismatch(amps.len(), 1 << n_qubits));
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(TqsError::Inconsistent(format!(
                "statevector norm {norm} is not 1"
            )));
        }
        Ok(StateVector { n_qubits, amps })
    }

    /// Run a layered circuit on |0...0>. Pure function of the spec.
    pub fn prepare(spec: &CircuitSpec) -> Result<Self> {
        spec.validate()?;
        let mut state = StateVector::zero_state(spec.n_qubits)?;
        for layer in &spec.layers {
            for (q, [tx, ty, tz]) in layer.rotations.iter().enumerate() {
                state.apply_rx(q, *tx);
                state.apply_ry(q, *ty);
                state.apply_rz(q, *tz);
            }
            for &(c, t) in &layer.entanglers {
                match spec.entangler {
                    Entangler::Cz => state.apply_cz(c, t),
                    Entangler::Cnot => state.apply_cnot(c, t),
                }
            }
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// dense(p) applied to the state: an amplitude permutation with unit
    /// phase factors, so the norm is preserved exactly.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<StateVector> {
        if p.n_qubits() != self.n_qubits {
            return Err(TqsError::DimensionMismatch(p.n_qubits(), self.n_qubits));
        }
        let mut amps = DVector::zeros(self.amps.len());
        for b in 0..self.amps.len() as u64 {
            let (t, e) = p.basis_action(b);
            amps[t as usize] = i_pow(e) * self.amps[b as usize];
        }
        Ok(StateVector {
            n_qubits: self.n_qubits,
            amps,
        })
    }

    /// <psi| p |psi> for a canonical (Hermitian) string.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        if !p.is_canonical() {
            return Err(TqsError::NonCanonical);
        }
        let applied = self.apply_pauli(p)?;
        Ok(self.amps.dotc(&applied.amps).re)
    }

    /// Shot-sampled estimate of <p>: draws k ~ Binomial(shots, (1 + <p>)/2)
    /// and returns 2k/shots - 1.
    pub fn sample_expectation<R: Rng>(
        &self,
        p: &PauliString,
        shots: u64,
        rng: &mut R,
    ) -> Result<f64> {
        if shots == 0 {
            return Err(TqsError::ZeroShots);
        }
        let exact = self.expectation(p)?;
        let p_success = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
        let dist = Binomial::new(shots, p_success)
            .map_err(|e| TqsError::Inconsistent(format!("binomial setup: {e}")))?;
        let k = dist.sample(rng);
        Ok(2.0 * k as f64 / shots as f64 - 1.0)
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(TqsError::DimensionMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,re,im\n");
        for (i, a) in self.amps.iter().enumerate() {
            s.push_str(&format!("{i},{:.17e},{:.17e}\n", a.re, a.im));
        }
        s
    }

    fn apply_single_qubit(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << qubit;
        for b in 0..self.amps.len() {
            if b & bit != 0 {
                continue;
            }
            let a0 = self.amps[b];
            let a1 = self.amps[b | bit];
            self.amps[b] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[b | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// Rx(theta) = exp(-i theta X / 2).
    pub fn apply_rx(&mut self, qubit: usize, theta: f64) {
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(theta / 2.0).sin());
        self.apply_single_qubit(qubit, [[c, s], [s, c]]);
    }

    /// Ry(theta) = exp(-i theta Y / 2).
    pub fn apply_ry(&mut self, qubit: usize, theta: f64) {
        let c = Complex64::new((theta / 2.0).cos(), 0.0);
        let s = Complex64::new((theta / 2.0).sin(), 0.0);
        self.apply_single_qubit(qubit, [[c, -s], [s, c]]);
    }

    /// Rz(theta) = exp(-i theta Z / 2).
    pub fn apply_rz(&mut self, qubit: usize, theta: f64) {
        let e0 = Complex64::from_polar(1.0, -theta / 2.0);
        let e1 = Complex64::from_polar(1.0, theta / 2.0);
        self.apply_single_qubit(qubit, [[e0, Complex64::ZERO], [Complex64::ZERO, e1]]);
    }

    pub fn apply_cz(&mut self, control: usize, target: usize) {
        let mask = (1usize << control) | (1usize << target);
        for b in 0..self.amps.len() {
            if b & mask == mask {
                self.amps[b] = -self.amps[b];
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for b in 0..self.amps.len() {
            if b & cbit != 0 && b & tbit == 0 {
                self.amps.swap_rows(b, b | tbit);
            }
        }
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > ORACLE_QUBIT_LIMIT {
        return Err(TqsError::QubitLimit {
            n: n_qubits,
            limit: ORACLE_QUBIT_LIMIT,
        });
    }
    Ok(())
}
