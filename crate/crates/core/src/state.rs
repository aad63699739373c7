//! Dense n-qubit states and the operations every measure is built from.
//!
//! Conventions used throughout the crate:
//!
//! * Basis states are indexed by unsigned integers; **qubit 0 is the most
//!   significant bit** of the index. `|01⟩` on two qubits is index 1.
//! * `|0⟩` is spin-up: `σ_z |0⟩ = +|0⟩`, and spin operators are `S = σ/2`.
//! * Pure states are validated to unit norm on construction; density
//!   matrices to Hermiticity, unit trace and positivity.
//!
//! Dense storage is intended for up to 14 qubits; constructors reject more
//! than 16 outright.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{c, cr, hermitian_eigenvalues, CMat, CVec, C64};

/// Hard cap on qubit count for dense amplitude storage.
pub const MAX_QUBITS: usize = 16;
/// Dense density matrices are kept at or below this dimension (2^12).
pub const MAX_DENSE_DIM: usize = 1 << 12;
/// Tolerance for normalization / trace / hermiticity validation.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Single-qubit Pauli operator label. Index order (I, X, Y, Z) matches the
/// four-vector index μ = 0..3 used by the invariant contractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_index(mu: usize) -> Result<Self> {
        match mu {
            0 => Ok(Pauli::I),
            1 => Ok(Pauli::X),
            2 => Ok(Pauli::Y),
            3 => Ok(Pauli::Z),
            _ => Err(Error::invalid(format!("pauli index {mu} out of range"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    /// Dense 2x2 matrix.
    pub fn matrix(self) -> CMat {
        let mut m = CMat::zeros(2, 2);
        match self {
            Pauli::I => {
                m[(0, 0)] = cr(1.0);
                m[(1, 1)] = cr(1.0);
            }
            Pauli::X => {
                m[(0, 1)] = cr(1.0);
                m[(1, 0)] = cr(1.0);
            }
            Pauli::Y => {
                m[(0, 1)] = c(0.0, -1.0);
                m[(1, 0)] = c(0.0, 1.0);
            }
            Pauli::Z => {
                m[(0, 0)] = cr(1.0);
                m[(1, 1)] = cr(-1.0);
            }
        }
        m
    }
}

/// A tensor product of single-qubit Paulis, one per qubit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliWord {
    ops: Vec<Pauli>,
}

impl PauliWord {
    pub fn new(ops: Vec<Pauli>) -> Self {
        PauliWord { ops }
    }

    /// Word from μ-indices 0..3.
    pub fn from_indices(mu: &[usize]) -> Result<Self> {
        Ok(PauliWord {
            ops: mu
                .iter()
                .map(|&m| Pauli::from_index(m))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    /// Identity on every qubit except `q`, which carries `p`.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut ops = vec![Pauli::I; n];
        ops[q] = p;
        PauliWord { ops }
    }

    /// Identity except Paulis `p` at `q1` and `q2`.
    pub fn two_site(n: usize, q1: usize, p1: Pauli, q2: usize, p2: Pauli) -> Self {
        let mut ops = vec![Pauli::I; n];
        ops[q1] = p1;
        ops[q2] = p2;
        PauliWord { ops }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    /// Dense matrix of the word (use only for small n).
    pub fn matrix(&self) -> CMat {
        let mut m = CMat::identity(1, 1);
        for p in &self.ops {
            m = crate::linalg::kron(&m, &p.matrix());
        }
        m
    }

    /// Bit mask of qubits whose basis bit the word flips (X and Y positions),
    /// in index-space (qubit 0 = MSB).
    fn flip_mask(&self, n: usize) -> usize {
        let mut mask = 0usize;
        for (q, p) in self.ops.iter().enumerate() {
            if matches!(p, Pauli::X | Pauli::Y) {
                mask |= 1 << (n - 1 - q);
            }
        }
        mask
    }

    /// Phase contributed when the word acts on basis state `b` (the source
    /// index): `P |b⟩ = phase · |b ^ flip_mask⟩`.
    fn phase_on(&self, b: usize, n: usize) -> C64 {
        let mut phase = cr(1.0);
        for (q, p) in self.ops.iter().enumerate() {
            let bit = (b >> (n - 1 - q)) & 1;
            match p {
                Pauli::I => {}
                Pauli::X => {}
                Pauli::Y => {
                    // σ_y |0⟩ = i |1⟩,  σ_y |1⟩ = -i |0⟩
                    phase *= if bit == 0 { c(0.0, 1.0) } else { c(0.0, -1.0) };
                }
                Pauli::Z => {
                    if bit == 1 {
                        phase = -phase;
                    }
                }
            }
        }
        phase
    }
}

/// An ordered subset of qubits, used to address reductions and cuts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    qubits: Vec<usize>,
}

impl Subsystem {
    /// Validates against a register of `n_total` qubits: indices must be in
    /// range and distinct; they are kept in ascending order.
    pub fn new(qubits: impl IntoIterator<Item = usize>, n_total: usize) -> Result<Self> {
        let mut q: Vec<usize> = qubits.into_iter().collect();
        q.sort_unstable();
        if q.is_empty() {
            return Err(Error::invalid("subsystem must be nonempty"));
        }
        if q.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("subsystem indices must be distinct"));
        }
        if *q.last().unwrap() >= n_total {
            return Err(Error::invalid(format!(
                "subsystem index {} out of range for {n_total} qubits",
                q.last().unwrap()
            )));
        }
        Ok(Subsystem { qubits: q })
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn complement(&self, n_total: usize) -> Subsystem {
        let set: std::collections::HashSet<usize> = self.qubits.iter().copied().collect();
        Subsystem {
            qubits: (0..n_total).filter(|q| !set.contains(q)).collect(),
        }
    }
}

/// Dense pure state of `n` qubits.
#[derive(Debug, Clone)]
pub struct PureState {
    n: usize,
    amps: CVec,
}

impl PureState {
    /// Build from amplitudes; checks the dimension is 2^n and the norm is 1.
    pub fn new(n: usize, amps: Vec<C64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("state must have at least one qubit"));
        }
        if n > MAX_QUBITS {
            return Err(Error::capacity(format!(
                "{n} qubits exceeds the {MAX_QUBITS}-qubit dense-storage cap"
            )));
        }
        if amps.len() != 1 << n {
            return Err(Error::invalid(format!(
                "expected {} amplitudes for {n} qubits, got {}",
                1usize << n,
                amps.len()
            )));
        }
        let v = CVec::from_vec(amps);
        let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::validation(format!(
                "state norm² = {norm2}, expected 1"
            )));
        }
        Ok(PureState { n, amps: v })
    }

    /// Build and normalize (for internal constructions with known-good data).
    pub fn normalized(n: usize, amps: Vec<C64>) -> Result<Self> {
        let norm2: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::validation("cannot normalize the zero vector"));
        }
        let s = norm2.sqrt();
        PureState::new(n, amps.into_iter().map(|z| z / s).collect())
    }

    /// Computational basis state |b⟩.
    pub fn basis_state(n: usize, b: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::capacity(format!("{n} qubits exceeds cap")));
        }
        if b >= 1 << n {
            return Err(Error::invalid(format!("basis index {b} out of range")));
        }
        let mut amps = vec![cr(0.0); 1 << n];
        amps[b] = cr(1.0);
        PureState::new(n, amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn amp(&self, b: usize) -> C64 {
        self.amps[b]
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Tensor product; qubits of `self` come first (most significant).
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let n = self.n + other.n;
        if n > MAX_QUBITS {
            return Err(Error::capacity(format!(
                "tensor product would need {n} qubits"
            )));
        }
        let d2 = other.dim();
        let mut amps = vec![cr(0.0); self.dim() * d2];
        for (b1, a1) in self.amps.iter().enumerate() {
            if a1.norm_sqr() == 0.0 {
                continue;
            }
            for (b2, a2) in other.amps.iter().enumerate() {
                amps[b1 * d2 + b2] = a1 * a2;
            }
        }
        PureState::new(n, amps)
    }

    /// Apply a Pauli word, returning the (still normalized) image state.
    pub fn apply_pauli(&self, word: &PauliWord) -> Result<PureState> {
        if word.len() != self.n {
            return Err(Error::invalid(format!(
                "word length {} does not match {} qubits",
                word.len(),
                self.n
            )));
        }
        let flip = word.flip_mask(self.n);
        let mut out = vec![cr(0.0); self.dim()];
        for b in 0..self.dim() {
            let a = self.amps[b];
            if a.norm_sqr() == 0.0 {
                continue;
            }
            out[b ^ flip] = word.phase_on(b, self.n) * a;
        }
        Ok(PureState {
            n: self.n,
            amps: CVec::from_vec(out),
        })
    }

    /// Ordinary expectation ⟨ψ|P|ψ⟩ of a Pauli word (real for Hermitian words).
    pub fn pauli_expectation(&self, word: &PauliWord) -> Result<f64> {
        let image = self.apply_pauli(word)?;
        let v: C64 = self.inner(&image);
        Ok(v.re)
    }

    /// Antilinear expectation ⟨ψ*|P|ψ⟩ — the bilinear form without complex
    /// conjugation of the bra. Complex-valued in general.
    pub fn antilinear_expectation(&self, word: &PauliWord) -> Result<C64> {
        let image = self.apply_pauli(word)?;
        Ok(self
            .amps
            .iter()
            .zip(image.amps.iter())
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Reduced density matrix on `keep`, tracing out the rest.
    pub fn partial_trace(&self, keep: &Subsystem) -> Result<DensityMatrix> {
        partial_trace_pure(self, keep)
    }

    pub fn to_density(&self) -> Result<DensityMatrix> {
        if self.dim() > MAX_DENSE_DIM {
            return Err(Error::capacity(format!(
                "dense density matrix of dim {} exceeds cap {}",
                self.dim(),
                MAX_DENSE_DIM
            )));
        }
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.amps[i] * self.amps[j].conj();
            }
        }
        DensityMatrix::new(m)
    }

    /// Haar-random state, deterministic in the seed.
    pub fn random(n: usize, seed: u64) -> Result<PureState> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::capacity(format!("{n} qubits out of range")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let amps: Vec<C64> = (0..1usize << n)
            .map(|_| c(normal.sample(&mut rng), normal.sample(&mut rng)))
            .collect();
        PureState::normalized(n, amps)
    }

    /// Global-phase-insensitive distance: min over phase of ‖ψ − e^{iφ}χ‖.
    pub fn distance_up_to_phase(&self, other: &PureState) -> f64 {
        let ov = self.inner(other);
        (2.0 - 2.0 * ov.norm()).max(0.0).sqrt()
    }

    /// Write to the JSON state-file format.
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = StateFile {
            n: self.n,
            amplitudes: self.amps.iter().map(|z| [z.re, z.im]).collect(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    /// Read from the JSON state-file format (validates normalization).
    pub fn load_json(path: &Path) -> Result<PureState> {
        let text = std::fs::read_to_string(path)?;
        let file: StateFile = serde_json::from_str(&text)?;
        PureState::new(
            file.n,
            file.amplitudes
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    n: usize,
    amplitudes: Vec<[f64; 2]>,
}

fn spread_bits(value: usize, positions: &[usize]) -> usize {
    // positions[t] is the index-space bit for subsystem bit t (t = 0 is the
    // most significant subsystem bit).
    let k = positions.len();
    let mut out = 0usize;
    for t in 0..k {
        if (value >> (k - 1 - t)) & 1 == 1 {
            out |= 1 << positions[t];
        }
    }
    out
}

fn index_positions(qubits: &[usize], n: usize) -> Vec<usize> {
    qubits.iter().map(|&q| n - 1 - q).collect()
}

fn partial_trace_pure(state: &PureState, keep: &Subsystem) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    if keep.qubits().last().copied().unwrap_or(0) >= n {
        return Err(Error::invalid("subsystem exceeds state size"));
    }
    let k = keep.len();
    if k == n {
        return state.to_density();
    }
    let dim_k = 1usize << k;
    if dim_k > MAX_DENSE_DIM {
        return Err(Error::capacity("reduced density matrix too large"));
    }
    let env = keep.complement(n);
    let keep_pos = index_positions(keep.qubits(), n);
    let env_pos = index_positions(env.qubits(), n);
    let dim_e = 1usize << env.len();

    let keep_base: Vec<usize> = (0..dim_k).map(|i| spread_bits(i, &keep_pos)).collect();
    let env_base: Vec<usize> = (0..dim_e).map(|e| spread_bits(e, &env_pos)).collect();

    let mut rho = CMat::zeros(dim_k, dim_k);
    for i in 0..dim_k {
        for j in 0..=i {
            let mut acc = cr(0.0);
            for e in 0..dim_e {
                let bi = keep_base[i] | env_base[e];
                let bj = keep_base[j] | env_base[e];
                acc += state.amp(bi) * state.amp(bj).conj();
            }
            rho[(i, j)] = acc;
            rho[(j, i)] = acc.conj();
        }
    }
    DensityMatrix::from_trusted(rho)
}

/// Dense density matrix; dimension need not be a power of two (fermionic
/// two-particle blocks use dim 6).
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace, and (for dimensions up to 256)
    /// positivity down to -1e-10.
    pub fn new(mat: CMat) -> Result<Self> {
        let d = mat.nrows();
        if d == 0 || mat.ncols() != d {
            return Err(Error::invalid("density matrix must be square"));
        }
        if d > MAX_DENSE_DIM {
            return Err(Error::capacity(format!(
                "density matrix dim {d} exceeds cap {MAX_DENSE_DIM}"
            )));
        }
        let mut herm_err = 0.0_f64;
        for i in 0..d {
            for j in 0..=i {
                herm_err = herm_err.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
            }
        }
        if herm_err > VALIDATION_TOL {
            return Err(Error::validation(format!(
                "matrix is not Hermitian (max deviation {herm_err:.2e})"
            )));
        }
        let tr: C64 = (0..d).map(|i| mat[(i, i)]).sum();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > VALIDATION_TOL {
            return Err(Error::validation(format!("trace = {tr}, expected 1")));
        }
        let dm = DensityMatrix { mat };
        if d <= 256 {
            dm.check_positive()?;
        }
        Ok(dm)
    }

    /// For matrices produced by internal constructions that guarantee the
    /// invariants structurally (partial traces of normalized states).
    pub(crate) fn from_trusted(mat: CMat) -> Result<Self> {
        Ok(DensityMatrix { mat })
    }

    pub fn check_positive(&self) -> Result<()> {
        let min = self
            .eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -1e-10 {
            return Err(Error::validation(format!(
                "matrix is not positive semidefinite (min eigenvalue {min:.2e})"
            )));
        }
        Ok(())
    }

    pub fn from_pure(state: &PureState) -> Result<Self> {
        state.to_density()
    }

    /// Convex mixture Σ w_i |ψ_i⟩⟨ψ_i| of same-size pure states.
    pub fn mixture(terms: &[(f64, PureState)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("mixture needs at least one term"));
        }
        let d = terms[0].1.dim();
        if d > MAX_DENSE_DIM {
            return Err(Error::capacity("mixture dimension too large"));
        }
        let wsum: f64 = terms.iter().map(|(w, _)| *w).sum();
        if terms.iter().any(|(w, _)| *w < -1e-12) || (wsum - 1.0).abs() > 1e-10 {
            return Err(Error::validation("mixture weights must be a distribution"));
        }
        let mut m = CMat::zeros(d, d);
        for (w, psi) in terms {
            if psi.dim() != d {
                return Err(Error::invalid("mixture terms differ in size"));
            }
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += cr(*w) * psi.amp(i) * psi.amp(j).conj();
                }
            }
        }
        DensityMatrix::new(m)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Number of qubits if the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        let d = self.dim();
        if d.is_power_of_two() {
            Some(d.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }

    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += (self.mat[(i, j)] * self.mat[(j, i)]).re;
            }
        }
        acc
    }

    /// tr(ρ O) for a dense operator of matching dimension.
    pub fn expectation(&self, op: &CMat) -> Result<C64> {
        let d = self.dim();
        if op.nrows() != d || op.ncols() != d {
            return Err(Error::invalid("operator dimension mismatch"));
        }
        let mut acc = cr(0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.mat[(i, j)] * op[(j, i)];
            }
        }
        Ok(acc)
    }

    /// Reduced density matrix on `keep` for a multi-qubit ρ.
    pub fn partial_trace(&self, keep: &Subsystem) -> Result<DensityMatrix> {
        let n = self
            .n_qubits()
            .ok_or_else(|| Error::invalid("partial trace requires a qubit register"))?;
        if keep.qubits().last().copied().unwrap_or(0) >= n {
            return Err(Error::invalid("subsystem exceeds register size"));
        }
        let k = keep.len();
        if k == n {
            return Ok(self.clone());
        }
        let env = keep.complement(n);
        let keep_pos = index_positions(keep.qubits(), n);
        let env_pos = index_positions(env.qubits(), n);
        let dim_k = 1usize << k;
        let dim_e = 1usize << env.len();
        let keep_base: Vec<usize> = (0..dim_k).map(|i| spread_bits(i, &keep_pos)).collect();
        let env_base: Vec<usize> = (0..dim_e).map(|e| spread_bits(e, &env_pos)).collect();
        let mut out = CMat::zeros(dim_k, dim_k);
        for i in 0..dim_k {
            for j in 0..dim_k {
                let mut acc = cr(0.0);
                for e in 0..dim_e {
                    acc += self.mat[(keep_base[i] | env_base[e], keep_base[j] | env_base[e])];
                }
                out[(i, j)] = acc;
            }
        }
        DensityMatrix::from_trusted(out)
    }
}

/// Common named states used across tests and examples.
pub mod states {
    use super::*;

    /// (|0…0⟩ + |1…1⟩)/√2.
    pub fn ghz(n: usize) -> PureState {
        let d = 1usize << n;
        let mut amps = vec![cr(0.0); d];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        amps[0] = cr(s);
        amps[d - 1] = cr(s);
        PureState::new(n, amps).expect("ghz construction")
    }

    /// Symmetric single-excitation state (|10…0⟩ + |01…0⟩ + …)/√n.
    pub fn w_state(n: usize) -> PureState {
        let d = 1usize << n;
        let mut amps = vec![cr(0.0); d];
        let s = 1.0 / (n as f64).sqrt();
        for q in 0..n {
            amps[1 << (n - 1 - q)] = cr(s);
        }
        PureState::new(n, amps).expect("w construction")
    }

    /// Bell state (|00⟩ + |11⟩)/√2.
    pub fn bell_phi_plus() -> PureState {
        ghz(2)
    }

    /// Bell state (|01⟩ − |10⟩)/√2.
    pub fn bell_singlet() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        PureState::new(2, vec![cr(0.0), cr(s), cr(-s), cr(0.0)]).expect("singlet")
    }

    /// Four-qubit cluster-class state (|1111⟩ + |1100⟩ + |0010⟩ + |0001⟩)/2.
    pub fn cluster_phi4() -> PureState {
        let mut amps = vec![cr(0.0); 16];
        amps[0b1111] = cr(0.5);
        amps[0b1100] = cr(0.5);
        amps[0b0010] = cr(0.5);
        amps[0b0001] = cr(0.5);
        PureState::new(4, amps).expect("phi4")
    }

    /// (√2|1111⟩ + |1000⟩ + |0100⟩ + |0010⟩ + |0001⟩)/√6.
    pub fn phi5() -> PureState {
        let mut amps = vec![cr(0.0); 16];
        let s = 1.0 / 6.0_f64.sqrt();
        amps[0b1111] = cr(std::f64::consts::SQRT_2 * s);
        amps[0b1000] = cr(s);
        amps[0b0100] = cr(s);
        amps[0b0010] = cr(s);
        amps[0b0001] = cr(s);
        PureState::new(4, amps).expect("phi5")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_unnormalized_and_oversized() {
        assert!(matches!(
            PureState::new(1, vec![cr(1.0), cr(1.0)]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            PureState::random(17, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        // |01⟩: qubit 0 in |0⟩, qubit 1 in |1⟩ — index 1.
        let psi = PureState::basis_state(2, 1).unwrap();
        let z0 = psi
            .pauli_expectation(&PauliWord::single(2, 0, Pauli::Z))
            .unwrap();
        let z1 = psi
            .pauli_expectation(&PauliWord::single(2, 1, Pauli::Z))
            .unwrap();
        assert_abs_diff_eq!(z0, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(z1, -1.0, epsilon = 1e-14);
    }

    #[test]
    fn pauli_word_matches_dense_matrix() {
        let psi = PureState::random(3, 42).unwrap();
        let word = PauliWord::new(vec![Pauli::Y, Pauli::X, Pauli::Z]);
        let dense = word.matrix();
        let image = psi.apply_pauli(&word).unwrap();
        let direct = &dense * psi.amplitudes();
        for b in 0..8 {
            assert_abs_diff_eq!(image.amp(b).re, direct[b].re, epsilon = 1e-12);
            assert_abs_diff_eq!(image.amp(b).im, direct[b].im, epsilon = 1e-12);
        }
    }

    #[test]
    fn partial_trace_of_ghz_is_maximally_mixed_pairwise_classical() {
        let ghz = states::ghz(3);
        let sub = Subsystem::new([0], 3).unwrap();
        let rho = ghz.partial_trace(&sub).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-12);

        let pair = Subsystem::new([0, 2], 3).unwrap();
        let rho2 = ghz.partial_trace(&pair).unwrap();
        // diagonal mixture of |00⟩ and |11⟩
        assert_abs_diff_eq!(rho2.matrix()[(0, 0)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho2.matrix()[(3, 3)].re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho2.matrix()[(0, 3)].norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho2.purity(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_tensor_consistency() {
        let a = PureState::random(2, 7).unwrap();
        let b = PureState::random(1, 8).unwrap();
        let ab = a.tensor(&b).unwrap();
        let sub = Subsystem::new([0, 1], 3).unwrap();
        let rho_a = ab.partial_trace(&sub).unwrap();
        let direct = a.to_density().unwrap();
        assert!(crate::linalg::frobenius_distance(rho_a.matrix(), direct.matrix()) < 1e-12);
    }

    #[test]
    fn random_state_is_seed_deterministic() {
        let a = PureState::random(4, 123).unwrap();
        let b = PureState::random(4, 123).unwrap();
        let c_ = PureState::random(4, 124).unwrap();
        assert_eq!(a.amplitudes(), b.amplitudes());
        assert!(a.distance_up_to_phase(&c_) > 1e-3);
    }

    #[test]
    fn json_roundtrip() {
        let dir = std::env::temp_dir().join("entangle_kit_state_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("state.json");
        let psi = PureState::random(3, 5).unwrap();
        psi.save_json(&path).unwrap();
        let back = PureState::load_json(&path).unwrap();
        assert_eq!(back.n_qubits(), 3);
        for b in 0..8 {
            assert_abs_diff_eq!(psi.amp(b).re, back.amp(b).re, epsilon = 1e-15);
            assert_abs_diff_eq!(psi.amp(b).im, back.amp(b).im, epsilon = 1e-15);
        }
    }

    #[test]
    fn density_matrix_validation() {
        let mut bad = CMat::zeros(2, 2);
        bad[(0, 0)] = cr(0.7);
        bad[(1, 1)] = cr(0.7);
        assert!(DensityMatrix::new(bad).is_err());

        let mut neg = CMat::zeros(2, 2);
        neg[(0, 0)] = cr(1.5);
        neg[(1, 1)] = cr(-0.5);
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn mixture_matches_manual_sum() {
        let a = PureState::basis_state(1, 0).unwrap();
        let b = PureState::basis_state(1, 1).unwrap();
        let rho = DensityMatrix::mixture(&[(0.25, a), (0.75, b)]).unwrap();
        assert_abs_diff_eq!(rho.matrix()[(0, 0)].re, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.matrix()[(1, 1)].re, 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.purity(), 0.625, epsilon = 1e-14);
    }
}
