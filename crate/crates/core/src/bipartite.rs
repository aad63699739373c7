//! Bipartite entanglement measures.
//!
//! For a pure state |ψ⟩ split across a cut A|B, the Schmidt decomposition
//! |ψ⟩ = Σ α_k |k_A⟩|k_B⟩ carries everything: the entanglement entropy is
//! S = −Σ α_k² log₂ α_k², and for a single qubit A the one-tangle is
//! τ₁ = 4 det ρ_A ∈ [0, 1].
//!
//! For two qubits the workhorse is the concurrence. On pure states
//! C = |⟨ψ*|σ_y ⊗ σ_y|ψ⟩|; on mixed states it is the Wootters formula
//! C = max{0, λ₁ − λ₂ − λ₃ − λ₄} where the λ are the square roots of the
//! eigenvalues of ρ ρ̃ in decreasing order, ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y).
//! Rather than touching the non-Hermitian product ρρ̃, the λ are computed
//! here as the singular values of τ = Ψᵀ (σ_y⊗σ_y) Ψ, where the columns of
//! Ψ are the subnormalized eigenvectors of ρ: the nonzero eigenvalues of
//! ρρ̃ coincide with those of τ†τ because the kernel matrix is symmetric.
//! The same device serves any measure defined through an antiunitary
//! Θ = K ∘ conj with symmetric K, so it is exposed as
//! [`antiunitary_spectrum`] and reused by the fermionic analogue.
//!
//! The entanglement of formation follows as
//! E_F = h((1 + √(1 − C²))/2) with h the binary entropy in bits, and the
//! pure-state entropy obeys the same relation with C² replaced by τ₁.
//!
//! Spin-chain applications rarely hand us a density matrix directly.
//! With a parity-symmetric, translation-invariant state the two-site
//! reduction is fixed by four real numbers, the correlators
//! g^αα = ⟨S_i^α S_j^α⟩ and the magnetization M_z = ⟨S^z⟩ (spin operators
//! S = σ/2):
//!
//! ```text
//!         ⎛ a  0  0  c ⎞        a   = 1/4 + g^zz + M_z
//!   ρij = ⎜ 0  x  z  0 ⎟        b   = 1/4 + g^zz − M_z
//!         ⎜ 0  z* y  0 ⎟        x=y = 1/4 − g^zz
//!         ⎝ c* 0  0  b ⎠        z   = g^xx + g^yy,  c = g^xx − g^yy
//! ```
//!
//! whose concurrence reduces to C = 2 max{0, C^I, C^II} with
//! C^I = |g^xx + g^yy| − √((1/4 + g^zz)² − M_z²) and
//! C^II = |g^xx − g^yy| + g^zz − 1/4.
//!
//! Negativity rounds out the toolbox for mixed cuts:
//! N = |Σ_{λ<0} λ(ρ^{T_A})| and E_N = log₂(2N + 1).

use crate::error::{Error, Result};
use crate::linalg::{
    cr, hermitian_eigen, hermitian_eigenvalues, kron, singular_values_desc, CMat, C64, EIG_CLAMP,
};
use crate::state::{DensityMatrix, Pauli, PauliWord, PureState, Subsystem};

/// Binary entropy in bits, h(x) = −x log₂ x − (1−x) log₂(1−x).
pub fn binary_entropy(x: f64) -> f64 {
    let mut s = 0.0;
    for p in [x, 1.0 - x] {
        if p > EIG_CLAMP {
            s -= p * p.log2();
        }
    }
    s
}

/// Shannon entropy (bits) of a probability vector; entries below the clamp
/// are dropped.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > EIG_CLAMP)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Schmidt decomposition of |ψ⟩ across the cut `part` | complement.
#[derive(Debug, Clone)]
pub struct Schmidt {
    /// Schmidt coefficients α_k ≥ 0, descending. Squares sum to 1.
    pub coefficients: Vec<f64>,
    /// Orthonormal vectors on the `part` factor, one column per coefficient.
    pub part_vectors: CMat,
    /// Orthonormal vectors on the complement factor.
    pub complement_vectors: CMat,
}

/// Rearranges the amplitudes of |ψ⟩ into the matrix M with row index the
/// `part` basis and column index the complement basis, so that ψ = Σ M_{re}
/// |r⟩_part |e⟩_comp.
pub fn amplitude_matrix(state: &PureState, part: &Subsystem) -> Result<CMat> {
    let n = state.n_qubits();
    if part.qubits().last().copied().unwrap_or(0) >= n {
        return Err(Error::invalid("subsystem exceeds state size"));
    }
    if part.len() == n {
        return Err(Error::invalid("cut must leave a nonempty complement"));
    }
    let comp = part.complement(n);
    let rows = 1usize << part.len();
    let cols = 1usize << comp.len();
    let part_pos: Vec<usize> = part.qubits().iter().map(|&q| n - 1 - q).collect();
    let comp_pos: Vec<usize> = comp.qubits().iter().map(|&q| n - 1 - q).collect();
    let mut m = CMat::zeros(rows, cols);
    for b in 0..state.dim() {
        let a = state.amp(b);
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let mut r = 0usize;
        for (t, &pos) in part_pos.iter().enumerate() {
            if (b >> pos) & 1 == 1 {
                r |= 1 << (part.len() - 1 - t);
            }
        }
        let mut e = 0usize;
        for (t, &pos) in comp_pos.iter().enumerate() {
            if (b >> pos) & 1 == 1 {
                e |= 1 << (comp.len() - 1 - t);
            }
        }
        m[(r, e)] = a;
    }
    Ok(m)
}

/// Full Schmidt decomposition across `part` | complement.
pub fn schmidt(state: &PureState, part: &Subsystem) -> Result<Schmidt> {
    let m = amplitude_matrix(state, part)?;
    let (u, s, v) = crate::linalg::svd_via_gram(&m)?;
    Ok(Schmidt {
        coefficients: s,
        part_vectors: u,
        complement_vectors: v,
    })
}

/// Schmidt coefficients only (cheaper: no vectors).
pub fn schmidt_coefficients(state: &PureState, part: &Subsystem) -> Result<Vec<f64>> {
    let m = amplitude_matrix(state, part)?;
    Ok(singular_values_desc(&m))
}

/// Entanglement entropy S = −Σ α² log₂ α² across the cut.
pub fn entanglement_entropy(state: &PureState, part: &Subsystem) -> Result<f64> {
    let coeffs = schmidt_coefficients(state, part)?;
    Ok(shannon_entropy(
        &coeffs.iter().map(|a| a * a).collect::<Vec<_>>(),
    ))
}

/// Von Neumann entropy −tr ρ log₂ ρ of a density matrix.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    shannon_entropy(&rho.eigenvalues())
}

/// Rényi-2 entropy −log₂ tr ρ².
pub fn renyi2_entropy(rho: &DensityMatrix) -> f64 {
    -rho.purity().log2()
}

/// One-tangle τ₁ = 4 det ρ of a single-qubit density matrix; equals
/// 2(1 − tr ρ²) and 1 − 4(⟨S^x⟩² + ⟨S^y⟩² + ⟨S^z⟩²).
pub fn one_tangle(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 2 {
        return Err(Error::invalid("one-tangle takes a single-qubit matrix"));
    }
    let m = rho.matrix();
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    Ok((4.0 * det.re).clamp(0.0, 1.0))
}

/// One-tangle of qubit `site` inside a larger pure state.
pub fn one_tangle_of_site(state: &PureState, site: usize) -> Result<f64> {
    let sub = Subsystem::new([site], state.n_qubits())?;
    one_tangle(&state.partial_trace(&sub)?)
}

/// σ_y ⊗ σ_y as a dense matrix (real entries; the spin-flip kernel).
pub fn spin_flip_kernel() -> CMat {
    kron(&Pauli::Y.matrix(), &Pauli::Y.matrix())
}

/// Concurrence of a two-qubit pure state: C = |⟨ψ*|σ_y⊗σ_y|ψ⟩|.
pub fn concurrence_pure(state: &PureState) -> Result<f64> {
    if state.n_qubits() != 2 {
        return Err(Error::invalid("pure concurrence takes two qubits"));
    }
    let word = PauliWord::new(vec![Pauli::Y, Pauli::Y]);
    Ok(state.antilinear_expectation(&word)?.norm())
}

/// Square roots of the eigenvalues of ρ (K ρ* K), descending, for a
/// symmetric kernel K. For K = σ_y⊗σ_y these are the four Wootters λ.
///
/// Computed as the singular values of τ = Ψᵀ K Ψ with Ψ the subnormalized
/// eigenvector matrix of ρ (columns u_i √p_i): since Kᵀ = K, the nonzero
/// eigenvalues of ρ K ρ* K equal those of τ† τ.
pub fn antiunitary_spectrum(rho: &CMat, kernel: &CMat) -> Result<Vec<f64>> {
    let d = rho.nrows();
    if kernel.nrows() != d || kernel.ncols() != d {
        return Err(Error::invalid("kernel dimension mismatch"));
    }
    let asym = (kernel - kernel.transpose()).norm();
    if asym > 1e-10 * kernel.norm().max(1.0) {
        return Err(Error::invalid("kernel must be symmetric"));
    }
    let (evals, evecs) = hermitian_eigen(rho)?;
    let mut psi = CMat::zeros(d, d);
    for (i, (p, v)) in evals.iter().zip(evecs.iter()).enumerate() {
        let w = p.max(0.0).sqrt();
        for r in 0..d {
            psi[(r, i)] = v[r] * cr(w);
        }
    }
    let tau = psi.transpose() * kernel * &psi;
    let mut svals = singular_values_desc(&tau);
    svals.truncate(d);
    Ok(svals)
}

/// The four Wootters λ of a two-qubit density matrix, descending.
pub fn wootters_lambdas(rho: &DensityMatrix) -> Result<Vec<f64>> {
    if rho.dim() != 4 {
        return Err(Error::invalid("Wootters spectrum takes a 4x4 matrix"));
    }
    antiunitary_spectrum(rho.matrix(), &spin_flip_kernel())
}

/// Wootters concurrence C = max{0, λ₁ − λ₂ − λ₃ − λ₄} of a two-qubit
/// density matrix.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let l = wootters_lambdas(rho)?;
    Ok((l[0] - l[1] - l[2] - l[3]).max(0.0))
}

/// Entanglement of formation (bits) as a function of concurrence.
pub fn eof_from_concurrence(c: f64) -> Result<f64> {
    if !(0.0..=1.0 + 1e-12).contains(&c) {
        return Err(Error::invalid(format!("concurrence {c} outside [0,1]")));
    }
    let cc = c.min(1.0);
    Ok(binary_entropy(0.5 * (1.0 + (1.0 - cc * cc).max(0.0).sqrt())))
}

/// Entanglement of formation of a two-qubit density matrix.
pub fn entanglement_of_formation(rho: &DensityMatrix) -> Result<f64> {
    eof_from_concurrence(concurrence(rho)?)
}

/// Pure two-qubit entropy from the one-tangle: S = h((1 + √(1−τ₁))/2).
pub fn entropy_from_one_tangle(tau1: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&tau1) {
        return Err(Error::invalid(format!("one-tangle {tau1} outside [0,1]")));
    }
    let t = tau1.clamp(0.0, 1.0);
    Ok(binary_entropy(0.5 * (1.0 + (1.0 - t).sqrt())))
}

/// Two-site spin correlators defining a symmetric two-site reduction.
/// All in spin-1/2 units (S = σ/2): g^αα = ⟨S_i^α S_j^α⟩, M_z = ⟨S^z⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSiteCorrelators {
    pub gxx: f64,
    pub gyy: f64,
    pub gzz: f64,
    pub mz: f64,
}

impl TwoSiteCorrelators {
    /// Measure the correlators of qubits (i, j) in a pure state. The X-form
    /// reconstruction is only faithful if the state carries the assumed
    /// symmetries (fixed parity, real pair coherences, equal local ⟨S^z⟩).
    pub fn measure(state: &PureState, i: usize, j: usize) -> Result<Self> {
        let n = state.n_qubits();
        let exp2 = |p: Pauli| -> Result<f64> {
            Ok(state.pauli_expectation(&PauliWord::two_site(n, i, p, j, p))? / 4.0)
        };
        let mzi = state.pauli_expectation(&PauliWord::single(n, i, Pauli::Z))? / 2.0;
        let mzj = state.pauli_expectation(&PauliWord::single(n, j, Pauli::Z))? / 2.0;
        Ok(TwoSiteCorrelators {
            gxx: exp2(Pauli::X)?,
            gyy: exp2(Pauli::Y)?,
            gzz: exp2(Pauli::Z)?,
            mz: 0.5 * (mzi + mzj),
        })
    }
}

/// Reconstruct the X-form two-site density matrix from correlators.
pub fn two_site_density(g: &TwoSiteCorrelators) -> Result<DensityMatrix> {
    let a = 0.25 + g.gzz + g.mz;
    let b = 0.25 + g.gzz - g.mz;
    let x = 0.25 - g.gzz;
    let z = g.gxx + g.gyy;
    let cc = g.gxx - g.gyy;
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = cr(a);
    m[(3, 3)] = cr(b);
    m[(1, 1)] = cr(x);
    m[(2, 2)] = cr(x);
    m[(1, 2)] = cr(z);
    m[(2, 1)] = cr(z);
    m[(0, 3)] = cr(cc);
    m[(3, 0)] = cr(cc);
    DensityMatrix::new(m)
}

/// The two branch quantities of the closed-form concurrence:
/// C^I = |g^xx + g^yy| − √((1/4 + g^zz)² − M_z²),
/// C^II = |g^xx − g^yy| + g^zz − 1/4.
pub fn concurrence_branches(g: &TwoSiteCorrelators) -> (f64, f64) {
    let sq = (0.25 + g.gzz).powi(2) - g.mz.powi(2);
    let c1 = (g.gxx + g.gyy).abs() - sq.max(0.0).sqrt();
    let c2 = (g.gxx - g.gyy).abs() + g.gzz - 0.25;
    (c1, c2)
}

/// Concurrence of the X-form reduction, C = 2 max{0, C^I, C^II}.
pub fn concurrence_from_correlators(g: &TwoSiteCorrelators) -> f64 {
    let (c1, c2) = concurrence_branches(g);
    2.0 * c1.max(c2).max(0.0)
}

/// Partial transpose over the qubits in `part` of a qubit-register matrix.
pub fn partial_transpose(rho: &DensityMatrix, part: &Subsystem) -> Result<CMat> {
    let n = rho
        .n_qubits()
        .ok_or_else(|| Error::invalid("partial transpose requires a qubit register"))?;
    if part.qubits().last().copied().unwrap_or(0) >= n {
        return Err(Error::invalid("subsystem exceeds register size"));
    }
    let mut mask = 0usize;
    for &q in part.qubits() {
        mask |= 1 << (n - 1 - q);
    }
    let d = rho.dim();
    let src = rho.matrix();
    let mut out = CMat::zeros(d, d);
    for r in 0..d {
        for col in 0..d {
            let rr = (r & !mask) | (col & mask);
            let cc = (col & !mask) | (r & mask);
            out[(r, col)] = src[(rr, cc)];
        }
    }
    Ok(out)
}

/// Outcome of the negativity computation across a cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegativityReport {
    /// N = |Σ negative eigenvalues of ρ^{T_A}|.
    pub negativity: f64,
    /// E_N = log₂(2N + 1).
    pub log_negativity: f64,
}

/// Negativity and logarithmic negativity across the cut `part`.
pub fn negativity(rho: &DensityMatrix, part: &Subsystem) -> Result<NegativityReport> {
    let pt = partial_transpose(rho, part)?;
    let neg: f64 = hermitian_eigenvalues(&pt)
        .into_iter()
        .filter(|&e| e < 0.0)
        .map(f64::abs)
        .sum();
    Ok(NegativityReport {
        negativity: neg,
        log_negativity: (2.0 * neg + 1.0).log2(),
    })
}

/// Witness expectation tr(ρ W); negative values flag entanglement for an
/// entanglement witness W.
pub fn witness_expectation(rho: &DensityMatrix, witness: &CMat) -> Result<f64> {
    let v: C64 = rho.expectation(witness)?;
    if v.im.abs() > 1e-8 {
        return Err(Error::numerical(format!(
            "witness expectation has imaginary part {:.2e}; witness not Hermitian?",
            v.im
        )));
    }
    Ok(v.re)
}

/// Projector witness W = α·I − |φ⟩⟨φ| for a pure reference |φ⟩.
pub fn projector_witness(reference: &PureState, alpha: f64) -> CMat {
    let d = reference.dim();
    let mut w = CMat::identity(d, d) * cr(alpha);
    for i in 0..d {
        for j in 0..d {
            w[(i, j)] -= reference.amp(i) * reference.amp(j).conj();
        }
    }
    w
}

/// Werner state p|Φ+⟩⟨Φ+| + (1−p) I/4, handy as an analytic anchor.
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("Werner parameter outside [0,1]"));
    }
    let phi = crate::state::states::bell_phi_plus();
    let mut m = CMat::identity(4, 4) * cr((1.0 - p) / 4.0);
    for i in 0..4 {
        for j in 0..4 {
            m[(i, j)] += cr(p) * phi.amp(i) * phi.amp(j).conj();
        }
    }
    DensityMatrix::new(m)
}
