//! Entanglement of indistinguishable fermions (and the bosonic analogue).
//!
//! A pure state of two fermions in M modes is an antisymmetric amplitude
//! matrix ω: |ω⟩ = Σ_{ij} ω_ij c†_i c†_j |0⟩, normalized so that
//! tr(ω†ω) = 1/2. The role the Schmidt decomposition plays for
//! distinguishable parties is taken by the Slater normal form
//! ω = U Σ Uᵀ, Σ = ⊕_j [[0, z_j], [−z_j, 0]]: the number of nonzero blocks
//! is the Slater rank, and rank one means a single Slater determinant —
//! no correlations beyond antisymmetrization.
//!
//! For M = 4 (two sites × two spins) there is a concurrence in complete
//! analogy with two qubits. The dual state ω̃_ij = ½ ε_{ijkl} ω*_{kl}
//! defines C = |⟨ω̃|ω⟩| = 8 |pf ω|, computed here through the Pfaffian.
//! Mixed two-particle states live on the six-dimensional ordered-pair basis
//! {|12⟩, |13⟩, |14⟩, |23⟩, |24⟩, |34⟩}; the dual conjugation becomes the
//! anti-diagonal kernel diag-flip with signs (+,−,+,+,−,+), and the
//! concurrence is C = max{0, λ₁ − Σ_{k>1} λ_k} with λ the antiunitary
//! spectrum of ρ under that kernel.
//!
//! Pfaffians are evaluated by skew-symmetric Gaussian elimination with
//! pivoting (O(n³)); a definitional expansion along the first row serves as
//! an independent reference for testing.
//!
//! N-particle states are handled as dense antisymmetric tensors. The
//! single-determinant (Slater-rank-one) criterion is Plücker's: after
//! contracting N−2 generic vectors, every 4×4 Pfaffian minor of the
//! resulting two-index tensor vanishes.
//!
//! For bosons the normal form is the Takagi decomposition of the symmetric
//! amplitude matrix; a subtlety with no fermionic counterpart is that a
//! pair of *equal* Takagi coefficients combines into a single condensate
//! product term, so the effective rank of a cluster of g equal coefficients
//! is ⌈g/2⌉.
//!
//! Finally, entanglement of particles: for mode partitions of states with
//! fixed total particle number, superselection restricts local operations
//! to fixed local particle number, and the operationally meaningful
//! entanglement is E_p = Σ_n p_n E(Ψ_n) with Ψ_n the renormalized
//! projection onto n particles in the A modes.

use std::collections::HashMap;

use crate::bipartite::{antiunitary_spectrum, shannon_entropy};
use crate::error::{Error, Result};
use crate::linalg::{c, cr, hermitian_eigen, singular_values_desc, CMat, CVec, C64};
use crate::state::DensityMatrix;

const ANTISYM_TOL: f64 = 1e-10;

fn check_antisymmetric(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("matrix must be square"));
    }
    let scale = a.norm().max(1.0);
    let dev = (a + a.transpose()).norm();
    if dev > ANTISYM_TOL * scale {
        return Err(Error::validation(format!(
            "matrix is not antisymmetric (deviation {dev:.2e})"
        )));
    }
    Ok(())
}

/// Pfaffian of an antisymmetric matrix by skew Gaussian elimination with
/// pivoting. Odd dimension gives zero.
pub fn pfaffian(a: &CMat) -> Result<C64> {
    check_antisymmetric(a)?;
    let n = a.nrows();
    if !n.is_multiple_of(2) {
        return Ok(cr(0.0));
    }
    if n == 0 {
        return Ok(cr(1.0));
    }
    let mut m = a.clone();
    let mut pf = cr(1.0);
    let mut k = 0usize;
    while k < n {
        // Pivot: bring the largest |m[k][j]| into position (k, k+1).
        let mut piv = k + 1;
        let mut best = m[(k, k + 1)].norm();
        for j in k + 2..n {
            let v = m[(k, j)].norm();
            if v > best {
                best = v;
                piv = j;
            }
        }
        if best < 1e-300 {
            return Ok(cr(0.0));
        }
        if piv != k + 1 {
            m.swap_rows(piv, k + 1);
            m.swap_columns(piv, k + 1);
            pf = -pf;
        }
        let b = m[(k, k + 1)];
        pf *= b;
        // Schur complement onto the remaining block, keeping skew symmetry.
        for i in k + 2..n {
            for j in k + 2..n {
                let update = (m[(k, j)] * m[(k + 1, i)] - m[(k, i)] * m[(k + 1, j)]) / b;
                m[(i, j)] += update;
            }
        }
        k += 2;
    }
    Ok(pf)
}

/// Definitional Pfaffian by expansion along the first row; exponential cost,
/// intended as an independent reference for small matrices.
pub fn pfaffian_reference(a: &CMat) -> Result<C64> {
    check_antisymmetric(a)?;
    let n = a.nrows();
    if !n.is_multiple_of(2) {
        return Ok(cr(0.0));
    }
    fn expand(a: &CMat, rows: &[usize]) -> C64 {
        let n = rows.len();
        if n == 0 {
            return cr(1.0);
        }
        let mut acc = cr(0.0);
        let first = rows[0];
        for (pos, &j) in rows.iter().enumerate().skip(1) {
            let minor: Vec<usize> = rows
                .iter()
                .copied()
                .filter(|&r| r != first && r != j)
                .collect();
            let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
            acc += cr(sign) * a[(first, j)] * expand(a, &minor);
        }
        acc
    }
    let rows: Vec<usize> = (0..n).collect();
    Ok(expand(a, &rows))
}

/// Lexicographically ordered index pairs (i, j), i < j, of M modes.
pub fn pair_basis(n_modes: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_modes * (n_modes - 1) / 2);
    for i in 0..n_modes {
        for j in i + 1..n_modes {
            out.push((i, j));
        }
    }
    out
}

/// Pure state of two fermions: antisymmetric ω with tr(ω†ω) = 1/2.
#[derive(Debug, Clone)]
pub struct PairState {
    omega: CMat,
}

impl PairState {
    pub fn new(omega: CMat) -> Result<Self> {
        check_antisymmetric(&omega)?;
        let norm2: f64 = omega.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 0.5).abs() > ANTISYM_TOL {
            return Err(Error::validation(format!(
                "pair state norm tr(ω†ω) = {norm2}, expected 1/2"
            )));
        }
        Ok(PairState { omega })
    }

    /// Normalize an antisymmetric amplitude matrix to tr(ω†ω) = 1/2.
    pub fn normalized(omega: CMat) -> Result<Self> {
        check_antisymmetric(&omega)?;
        let norm2: f64 = omega.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::validation("cannot normalize the zero matrix"));
        }
        let s = (2.0 * norm2).sqrt();
        Ok(PairState {
            omega: omega.map(|z| z / s),
        })
    }

    /// Amplitudes of the ordered pairs |ij⟩, i < j; unit norm.
    pub fn to_vector(&self) -> CVec {
        let basis = pair_basis(self.omega.nrows());
        CVec::from_iterator(
            basis.len(),
            basis.iter().map(|&(i, j)| cr(2.0) * self.omega[(i, j)]),
        )
    }

    pub fn omega(&self) -> &CMat {
        &self.omega
    }

    pub fn n_modes(&self) -> usize {
        self.omega.nrows()
    }

    /// Dual state ω̃_ij = ½ ε_{ijkl} ω*_{kl} (four modes only).
    pub fn dual(&self) -> Result<PairState> {
        if self.n_modes() != 4 {
            return Err(Error::invalid("the dual is defined for four modes"));
        }
        let mut tilde = CMat::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = cr(0.0);
                for k in 0..4 {
                    for l in 0..4 {
                        let eps = levi_civita(&[i, j, k, l]);
                        if eps != 0 {
                            acc += cr(eps as f64) * self.omega[(k, l)].conj();
                        }
                    }
                }
                tilde[(i, j)] = acc * cr(0.5);
            }
        }
        PairState::new(tilde)
    }

    /// Fermionic concurrence C = 8 |pf ω| (four modes only).
    pub fn concurrence(&self) -> Result<f64> {
        if self.n_modes() != 4 {
            return Err(Error::invalid("the concurrence is defined for four modes"));
        }
        Ok(8.0 * pfaffian(&self.omega)?.norm())
    }

    /// Density matrix |ω⟩⟨ω| on the ordered-pair basis.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let v = self.to_vector();
        let d = v.len();
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        DensityMatrix::new(m)
    }
}

fn levi_civita(idx: &[usize]) -> i32 {
    let n = idx.len();
    let mut seen = vec![false; n];
    for &i in idx {
        if i >= n || seen[i] {
            return 0;
        }
        seen[i] = true;
    }
    let mut perm: Vec<usize> = idx.to_vec();
    let mut sign = 1;
    for i in 0..n {
        while perm[i] != i {
            let j = perm[i];
            perm.swap(i, j);
            sign = -sign;
        }
    }
    sign
}

/// The dual-conjugation kernel on the ordered-pair basis of four modes:
/// antidiagonal with signs (+1, −1, +1, +1, −1, +1). Real symmetric.
pub fn fermionic_flip_kernel() -> CMat {
    let mut d = CMat::zeros(6, 6);
    let signs = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
    for (i, &s) in signs.iter().enumerate() {
        d[(i, 5 - i)] = cr(s);
    }
    d
}

/// Antiunitary spectrum λ (descending) of a 6×6 two-particle density matrix
/// under the dual conjugation.
pub fn fermionic_lambdas(rho: &DensityMatrix) -> Result<Vec<f64>> {
    if rho.dim() != 6 {
        return Err(Error::invalid(
            "mixed fermionic concurrence takes the 6-dimensional pair basis",
        ));
    }
    antiunitary_spectrum(rho.matrix(), &fermionic_flip_kernel())
}

/// Mixed-state fermionic concurrence C = max{0, λ₁ − Σ_{k>1} λ_k}.
pub fn fermionic_concurrence_mixed(rho: &DensityMatrix) -> Result<f64> {
    let l = fermionic_lambdas(rho)?;
    let rest: f64 = l[1..].iter().sum();
    Ok((l[0] - rest).max(0.0))
}

/// Slater normal form ω = U Σ Uᵀ with Σ = ⊕ [[0, z_j], [−z_j, 0]] ⊕ 0.
#[derive(Debug, Clone)]
pub struct SlaterNormalForm {
    /// Unitary U; columns come in (u, v) pairs per block, kernel vectors last.
    pub unitary: CMat,
    /// Block amplitudes z_j ≥ 0, descending.
    pub values: Vec<f64>,
}

impl SlaterNormalForm {
    /// Rebuild ω from the factors (for validation).
    pub fn reconstruct(&self) -> CMat {
        let m = self.unitary.nrows();
        let mut sigma = CMat::zeros(m, m);
        for (j, &z) in self.values.iter().enumerate() {
            sigma[(2 * j, 2 * j + 1)] = cr(z);
            sigma[(2 * j + 1, 2 * j)] = cr(-z);
        }
        &self.unitary * sigma * self.unitary.transpose()
    }

    /// Number of blocks above the tolerance.
    pub fn rank(&self, tol: f64) -> usize {
        self.values.iter().filter(|&&z| z > tol).count()
    }
}

/// Compute the Slater normal form of an antisymmetric matrix.
///
/// The eigenvectors of the Hermitian product A = ω ω† come in degenerate
/// pairs per block: if A v = z² v then u = ω v* / z satisfies A u = z² u,
/// u ⊥ v, and ω restricted to span{u, v} is z (u vᵀ − v uᵀ).
pub fn slater_normal_form(omega: &CMat) -> Result<SlaterNormalForm> {
    check_antisymmetric(omega)?;
    let m = omega.nrows();
    let a = omega * omega.adjoint();
    let (evals, evecs) = hermitian_eigen(&a)?;
    let scale = omega.norm().max(1e-300);
    let tol = 1e-10 * scale * scale;

    let mut used: Vec<CVec> = Vec::new();
    let mut values = Vec::new();

    let orthogonalize = |v: &CVec, used: &[CVec]| -> CVec {
        let mut w = v.clone();
        for u in used {
            let proj: C64 = u.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            for r in 0..w.len() {
                let sub = proj * u[r];
                w[r] -= sub;
            }
        }
        w
    };

    // Largest eigenvalues first.
    for (p, v) in evals.iter().rev().zip(evecs.iter().rev()) {
        if *p <= tol {
            break;
        }
        let v_orth = orthogonalize(v, &used);
        let norm: f64 = v_orth.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 0.5 {
            // This direction already belongs to a processed block.
            continue;
        }
        let v_unit = v_orth.map(|z| z / cr(norm));
        let z = p.max(0.0).sqrt();
        let mut u = CVec::zeros(m);
        for r in 0..m {
            let mut acc = cr(0.0);
            for s in 0..m {
                acc += omega[(r, s)] * v_unit[s].conj();
            }
            u[r] = acc / cr(z);
        }
        let u_orth = orthogonalize(&u, &used);
        let un: f64 = u_orth.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        if un < 0.5 {
            return Err(Error::numerical(
                "normal-form pairing collapsed; matrix may be ill-conditioned",
            ));
        }
        let u_unit = u_orth.map(|x| x / cr(un));
        used.push(u_unit);
        used.push(v_unit);
        values.push(z);
    }

    // Complete with an orthonormal basis of the kernel.
    let mut col = 0usize;
    while used.len() < m {
        if col >= m {
            return Err(Error::numerical("failed to complete normal-form basis"));
        }
        let mut e = CVec::zeros(m);
        e[col] = cr(1.0);
        let w = orthogonalize(&e, &used);
        let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            used.push(w.map(|z| z / cr(norm)));
        }
        col += 1;
    }

    let mut unitary = CMat::zeros(m, m);
    for (j, v) in used.iter().enumerate() {
        for r in 0..m {
            unitary[(r, j)] = v[r];
        }
    }
    Ok(SlaterNormalForm { unitary, values })
}

/// Singular values of an antisymmetric matrix: each block amplitude doubled.
pub fn slater_singular_values(form: &SlaterNormalForm, n_modes: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_modes);
    for &z in &form.values {
        out.push(z);
        out.push(z);
    }
    while out.len() < n_modes {
        out.push(0.0);
    }
    out
}

fn k_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        // Advance the combination.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < m - (k - i) {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Largest |pf| over all 4×4 principal minors of an antisymmetric matrix.
/// Zero (to tolerance) exactly when the two-particle state is a single
/// Slater determinant.
pub fn max_pfaffian_minor(omega: &CMat) -> Result<f64> {
    check_antisymmetric(omega)?;
    let m = omega.nrows();
    if m < 4 {
        return Ok(0.0);
    }
    let mut best = 0.0_f64;
    for subset in k_subsets(m, 4) {
        let mut sub = CMat::zeros(4, 4);
        for (r, &i) in subset.iter().enumerate() {
            for (cc, &j) in subset.iter().enumerate() {
                sub[(r, cc)] = omega[(i, j)];
            }
        }
        best = best.max(pfaffian(&sub)?.norm());
    }
    Ok(best)
}

/// Dense fully antisymmetric N-particle amplitude tensor over M modes,
/// normalized so that the sum of |w|² over all index tuples is 1.
#[derive(Debug, Clone)]
pub struct AntisymmetricTensor {
    n_particles: usize,
    n_modes: usize,
    data: Vec<C64>,
}

impl AntisymmetricTensor {
    pub fn from_components(n_particles: usize, n_modes: usize, data: Vec<C64>) -> Result<Self> {
        if !(2..=4).contains(&n_particles) || n_modes > 8 {
            return Err(Error::capacity(
                "antisymmetric tensors supported for 2..=4 particles over at most 8 modes",
            ));
        }
        if data.len() != n_modes.pow(n_particles as u32) {
            return Err(Error::invalid("tensor component count mismatch"));
        }
        let t = AntisymmetricTensor {
            n_particles,
            n_modes,
            data,
        };
        t.check_antisymmetry()?;
        let norm2: f64 = t.data.iter().map(|z| z.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-8 {
            return Err(Error::validation(format!(
                "tensor norm² = {norm2}, expected 1"
            )));
        }
        Ok(t)
    }

    fn check_antisymmetry(&self) -> Result<()> {
        let n = self.n_particles;
        let total = self.data.len();
        let mut idx = vec![0usize; n];
        for flat in 0..total {
            let mut rest = flat;
            for t in (0..n).rev() {
                idx[t] = rest % self.n_modes;
                rest /= self.n_modes;
            }
            for swap in 0..n - 1 {
                let mut other = idx.clone();
                other.swap(swap, swap + 1);
                let a = self.data[flat];
                let b = self.data[self.flat_index(&other)];
                if (a + b).norm() > 1e-8 * (a.norm().max(b.norm()).max(1e-30)) + 1e-12 {
                    return Err(Error::validation("tensor is not antisymmetric"));
                }
            }
        }
        Ok(())
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        let mut out = 0usize;
        for &i in idx {
            out = out * self.n_modes + i;
        }
        out
    }

    /// Wedge product of N orthonormal single-particle vectors: a single
    /// Slater determinant.
    pub fn from_slater(vectors: &[CVec]) -> Result<Self> {
        let n = vectors.len();
        if n < 2 {
            return Err(Error::invalid("need at least two particles"));
        }
        let m = vectors[0].len();
        if vectors.iter().any(|v| v.len() != m) {
            return Err(Error::invalid("vectors differ in length"));
        }
        let total = m.pow(n as u32);
        let mut data = vec![cr(0.0); total];
        let mut idx = vec![0usize; n];
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let scale = 1.0 / fact.sqrt();
        for (flat, slot) in data.iter_mut().enumerate() {
            let mut rest = flat;
            for t in (0..n).rev() {
                idx[t] = rest % m;
                rest /= m;
            }
            // det of the n×n matrix v_k(idx_l)
            let mut det_m = CMat::zeros(n, n);
            for (row, v) in vectors.iter().enumerate() {
                for (col, &i) in idx.iter().enumerate() {
                    det_m[(row, col)] = v[i];
                }
            }
            *slot = det(&det_m) * cr(scale);
        }
        // Normalize (exact for orthonormal inputs, tolerant otherwise).
        let norm2: f64 = data.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::validation("wedge of dependent vectors vanishes"));
        }
        let s = norm2.sqrt();
        for z in &mut data {
            *z /= s;
        }
        AntisymmetricTensor::from_components(n, m, data)
    }

    /// Normalized superposition Σ c_k t_k of equal-shape tensors.
    pub fn superpose(terms: &[(C64, &AntisymmetricTensor)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("empty superposition"));
        }
        let n = terms[0].1.n_particles;
        let m = terms[0].1.n_modes;
        let mut data = vec![cr(0.0); terms[0].1.data.len()];
        for (coeff, t) in terms {
            if t.n_particles != n || t.n_modes != m {
                return Err(Error::invalid("superposition shape mismatch"));
            }
            for (d, &v) in data.iter_mut().zip(t.data.iter()) {
                *d += coeff * v;
            }
        }
        let norm2: f64 = data.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 1e-300 {
            return Err(Error::validation("superposition vanishes"));
        }
        let s = norm2.sqrt();
        for z in &mut data {
            *z /= s;
        }
        AntisymmetricTensor::from_components(n, m, data)
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Contract the last particle index with a vector.
    pub fn contract(&self, v: &CVec) -> Result<Vec<C64>> {
        if v.len() != self.n_modes {
            return Err(Error::invalid("contraction vector length mismatch"));
        }
        let stride = self.n_modes;
        let outer = self.data.len() / stride;
        let mut out = vec![cr(0.0); outer];
        for (o, slot) in out.iter_mut().enumerate() {
            let mut acc = cr(0.0);
            for j in 0..stride {
                acc += self.data[o * stride + j] * v[j];
            }
            *slot = acc;
        }
        Ok(out)
    }
}

fn det(m: &CMat) -> C64 {
    m.clone().lu().determinant()
}

/// Report of the single-determinant test.
#[derive(Debug, Clone, Copy)]
pub struct SlaterRankReport {
    /// Largest normalized 4×4 Pfaffian minor found over the random
    /// contractions.
    pub max_minor: f64,
    /// True when the state is a single Slater determinant (to 1e-10).
    pub rank_one: bool,
}

/// Single-determinant test for an N-particle antisymmetric state: contract
/// N−2 seeded random vectors, normalize the resulting pair amplitude, and
/// inspect its 4×4 Pfaffian minors. Several draws guard against degenerate
/// contractions.
pub fn slater_rank_one_test(tensor: &AntisymmetricTensor, seed: u64) -> Result<SlaterRankReport> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut max_minor = 0.0_f64;
    let m = tensor.n_modes();
    for draw in 0..3u64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(draw));
        let normal = StandardNormal;
        let mut data = tensor.data.clone();
        let mut particles = tensor.n_particles();
        while particles > 2 {
            let v = CVec::from_iterator(m, (0..m).map(|_| {
                c(normal.sample(&mut rng), normal.sample(&mut rng))
            }));
            let stride = m;
            let outer = data.len() / stride;
            let mut next = vec![cr(0.0); outer];
            for (o, slot) in next.iter_mut().enumerate() {
                let mut acc = cr(0.0);
                for j in 0..stride {
                    acc += data[o * stride + j] * v[j];
                }
                *slot = acc;
            }
            data = next;
            particles -= 1;
        }
        let mut omega = CMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                omega[(i, j)] = data[i * m + j];
            }
        }
        let norm = omega.norm();
        if norm < 1e-12 {
            continue;
        }
        let omega = omega.map(|z| z / cr(norm));
        max_minor = max_minor.max(max_pfaffian_minor(&omega)?);
    }
    Ok(SlaterRankReport {
        max_minor,
        rank_one: max_minor < 1e-10,
    })
}

/// Takagi values (descending) of a symmetric two-boson amplitude matrix:
/// the bosonic analogue of the Slater block amplitudes.
pub fn boson_takagi_values(omega: &CMat) -> Result<Vec<f64>> {
    if omega.nrows() != omega.ncols() {
        return Err(Error::invalid("matrix must be square"));
    }
    let dev = (omega - omega.transpose()).norm();
    if dev > ANTISYM_TOL * omega.norm().max(1.0) {
        return Err(Error::validation("matrix is not symmetric"));
    }
    Ok(singular_values_desc(omega))
}

/// Effective bosonic Schmidt rank: clusters of g equal coefficients count
/// ⌈g/2⌉, because equal pairs merge into single condensate terms.
pub fn effective_boson_rank(values: &[f64], tol: f64, cluster_tol: f64) -> usize {
    let mut kept: Vec<f64> = values.iter().copied().filter(|&v| v > tol).collect();
    kept.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut rank = 0usize;
    let mut i = 0usize;
    while i < kept.len() {
        let mut g = 1usize;
        while i + g < kept.len() && (kept[i] - kept[i + g]).abs() <= cluster_tol {
            g += 1;
        }
        rank += g.div_ceil(2);
        i += g;
    }
    rank
}

// ---------------------------------------------------------------------------
// Entanglement of particles
// ---------------------------------------------------------------------------

/// Fermionic Fock state over at most 24 modes; basis kets are occupation
/// bitmasks with creation operators applied in ascending mode order.
#[derive(Debug, Clone)]
pub struct FockState {
    n_modes: usize,
    amps: HashMap<u32, C64>,
}

impl FockState {
    pub fn new(n_modes: usize, terms: Vec<(u32, C64)>) -> Result<Self> {
        if n_modes == 0 || n_modes > 24 {
            return Err(Error::capacity("1..=24 modes supported"));
        }
        let mut amps: HashMap<u32, C64> = HashMap::new();
        for (mask, amp) in terms {
            if mask >= (1u32 << n_modes) {
                return Err(Error::invalid(format!("occupation mask {mask:#b} out of range")));
            }
            *amps.entry(mask).or_insert(cr(0.0)) += amp;
        }
        amps.retain(|_, a| a.norm_sqr() > 0.0);
        let norm2: f64 = amps.values().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > 1e-10 {
            return Err(Error::validation(format!(
                "Fock state norm² = {norm2}, expected 1"
            )));
        }
        Ok(FockState { n_modes, amps })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Fixed total particle number, if the state has one.
    pub fn particle_number(&self) -> Option<u32> {
        let mut n = None;
        for mask in self.amps.keys() {
            let count = mask.count_ones();
            match n {
                None => n = Some(count),
                Some(c) if c != count => return None,
                _ => {}
            }
        }
        n
    }
}

/// Sign from reordering ascending creation operators into the block order
/// (A modes ascending)(B modes ascending): one transposition per occupied
/// pair (a ∈ A, b ∈ B) with b < a.
fn block_reorder_sign(mask: u32, a_mask: u32) -> f64 {
    let occ_a = mask & a_mask;
    let occ_b = mask & !a_mask;
    let mut crossings = 0u32;
    let mut b_bits = occ_b;
    while b_bits != 0 {
        let b = b_bits.trailing_zeros();
        // occupied A modes above b
        crossings += (occ_a >> (b + 1)).count_ones();
        b_bits &= b_bits - 1;
    }
    if crossings.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Entanglement across a mode cut, sector by local particle number.
#[derive(Debug, Clone)]
pub struct ParticleEntanglement {
    /// E_p = Σ_n p_n S_n.
    pub entanglement_of_particles: f64,
    /// Mode entanglement without the superselection projection.
    pub mode_entanglement: f64,
    /// Per-sector (n_A, probability, entropy of the renormalized projection).
    pub sectors: Vec<(u32, f64, f64)>,
}

/// Entanglement of particles across the mode cut `a_modes` | rest.
///
/// The state is projected onto each sector of local particle number n_A,
/// renormalized, and the mode-cut entropies are averaged with the sector
/// probabilities. The unprojected mode entanglement is reported alongside.
pub fn entanglement_of_particles(
    state: &FockState,
    a_modes: &[usize],
) -> Result<ParticleEntanglement> {
    let n = state.n_modes;
    let mut a_mask = 0u32;
    for &m in a_modes {
        if m >= n {
            return Err(Error::invalid("A-mode index out of range"));
        }
        a_mask |= 1 << m;
    }
    if a_mask == 0 || a_mask == ((1u32 << n) - 1) {
        return Err(Error::invalid("cut must be a proper nonempty mode subset"));
    }

    // Collect per-sector amplitude matrices indexed by (A occupation, B
    // occupation); iteration order is made deterministic by sorting.
    let mut sector_entries: HashMap<u32, Vec<(u32, u32, C64)>> = HashMap::new();
    let mut masks: Vec<(&u32, &C64)> = state.amps.iter().collect();
    masks.sort_by_key(|(m, _)| **m);
    for (&mask, &amp) in masks {
        let ma = mask & a_mask;
        let mb = mask & !a_mask;
        let sign = block_reorder_sign(mask, a_mask);
        sector_entries
            .entry(ma.count_ones())
            .or_default()
            .push((ma, mb, cr(sign) * amp));
    }

    let mut sectors = Vec::new();
    let mut ep = 0.0;
    // The unprojected mode entropy comes from the direct-sum spectrum of all
    // sector Gram matrices: coherences between different local particle
    // numbers never survive the A-mode partial trace.
    let mut all_probs: Vec<f64> = Vec::new();
    let mut keys: Vec<u32> = sector_entries.keys().copied().collect();
    keys.sort_unstable();
    for na in keys {
        let entries = &sector_entries[&na];
        let mut a_index: HashMap<u32, usize> = HashMap::new();
        let mut b_index: HashMap<u32, usize> = HashMap::new();
        for &(ma, mb, _) in entries {
            let next = a_index.len();
            a_index.entry(ma).or_insert(next);
            let next = b_index.len();
            b_index.entry(mb).or_insert(next);
        }
        let mut m = CMat::zeros(a_index.len(), b_index.len());
        for &(ma, mb, amp) in entries {
            m[(a_index[&ma], b_index[&mb])] += amp;
        }
        let svals = singular_values_desc(&m);
        let p: f64 = svals.iter().map(|s| s * s).sum();
        if p < 1e-14 {
            continue;
        }
        let probs: Vec<f64> = svals.iter().map(|s| s * s / p).collect();
        let entropy = shannon_entropy(&probs);
        ep += p * entropy;
        for s in &svals {
            all_probs.push(s * s);
        }
        sectors.push((na, p, entropy));
    }
    let mode_entropy = shannon_entropy(&all_probs);
    Ok(ParticleEntanglement {
        entanglement_of_particles: ep,
        mode_entanglement: mode_entropy,
        sectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_antisymmetric(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = StandardNormal;
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let z = c(normal.sample(&mut rng), normal.sample(&mut rng));
                m[(i, j)] = z;
                m[(j, i)] = -z;
            }
        }
        m
    }

    fn random_pair_state(seed: u64) -> PairState {
        PairState::normalized(random_antisymmetric(4, seed)).unwrap()
    }

    #[test]
    fn pfaffian_small_anchors() {
        let mut two = CMat::zeros(2, 2);
        two[(0, 1)] = c(0.3, -0.4);
        two[(1, 0)] = -two[(0, 1)];
        assert_abs_diff_eq!((pfaffian(&two).unwrap() - c(0.3, -0.4)).norm(), 0.0, epsilon = 1e-14);

        // pf = a01 a23 − a02 a13 + a03 a12 on 4×4.
        let a = random_antisymmetric(4, 5);
        let explicit = a[(0, 1)] * a[(2, 3)] - a[(0, 2)] * a[(1, 3)] + a[(0, 3)] * a[(1, 2)];
        assert!((pfaffian(&a).unwrap() - explicit).norm() < 1e-12);

        // Odd dimension vanishes.
        assert_eq!(pfaffian(&random_antisymmetric(5, 1)).unwrap(), cr(0.0));
    }

    #[test]
    fn pfaffian_squared_is_determinant() {
        for &n in &[2usize, 4, 6, 8, 10, 12] {
            for seed in 0..5 {
                let a = random_antisymmetric(n, 100 * n as u64 + seed);
                let pf = pfaffian(&a).unwrap();
                let d = det(&a);
                let rel = (pf * pf - d).norm() / d.norm().max(1e-30);
                assert!(rel < 1e-9, "n = {n}, rel = {rel:.2e}");
            }
        }
    }

    #[test]
    fn pfaffian_matches_reference_expansion() {
        for &n in &[2usize, 4, 6, 8] {
            for seed in 0..4 {
                let a = random_antisymmetric(n, 7 * n as u64 + seed);
                let fast = pfaffian(&a).unwrap();
                let slow = pfaffian_reference(&a).unwrap();
                assert!(
                    (fast - slow).norm() < 1e-9 * slow.norm().max(1.0),
                    "n = {n}"
                );
            }
        }
    }

    #[test]
    fn pfaffian_rejects_non_antisymmetric() {
        let m = CMat::identity(4, 4);
        assert!(pfaffian(&m).is_err());
    }

    #[test]
    fn pair_concurrence_anchors() {
        // Maximally entangled: ω12 = ω34 = 1/(2√2).
        let mut omega = CMat::zeros(4, 4);
        let v = cr(1.0 / (2.0 * 2.0_f64.sqrt()));
        omega[(0, 1)] = v;
        omega[(1, 0)] = -v;
        omega[(2, 3)] = v;
        omega[(3, 2)] = -v;
        let psi = PairState::new(omega).unwrap();
        assert_abs_diff_eq!(psi.concurrence().unwrap(), 1.0, epsilon = 1e-12);

        // A single Slater determinant is unentangled.
        let mut slater = CMat::zeros(4, 4);
        slater[(0, 1)] = cr(0.5);
        slater[(1, 0)] = cr(-0.5);
        let psi = PairState::new(slater).unwrap();
        assert_abs_diff_eq!(psi.concurrence().unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn dual_inner_product_is_eight_pfaffian() {
        for seed in 0..10 {
            let psi = random_pair_state(seed);
            let dual = psi.dual().unwrap();
            let v = psi.to_vector();
            let vd = dual.to_vector();
            let inner: C64 = vd.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            let pf = pfaffian(psi.omega()).unwrap();
            assert!((inner - cr(8.0) * pf).norm() < 1e-10);
            assert_abs_diff_eq!(psi.concurrence().unwrap(), inner.norm(), epsilon = 1e-10);
        }
    }

    #[test]
    fn mixed_concurrence_reduces_to_pure() {
        for seed in 20..32 {
            let psi = random_pair_state(seed);
            let rho = psi.to_density().unwrap();
            assert_abs_diff_eq!(
                fermionic_concurrence_mixed(&rho).unwrap(),
                psi.concurrence().unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn disjoint_pair_mixture_is_unentangled() {
        // Equal mixture of |12⟩ and |34⟩.
        let mut m = CMat::zeros(6, 6);
        m[(0, 0)] = cr(0.5);
        m[(5, 5)] = cr(0.5);
        let rho = DensityMatrix::new(m).unwrap();
        let l = fermionic_lambdas(&rho).unwrap();
        assert_abs_diff_eq!(l[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(l[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(
            fermionic_concurrence_mixed(&rho).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn fermionic_moments_match_direct_product() {
        let kernel = fermionic_flip_kernel();
        for seed in 0..10 {
            // Random rank-3 mixture of pure pair states.
            let weights = [0.5, 0.3, 0.2];
            let mut m = CMat::zeros(6, 6);
            for (t, &w) in weights.iter().enumerate() {
                let v = random_pair_state(seed * 10 + t as u64).to_vector();
                for i in 0..6 {
                    for j in 0..6 {
                        m[(i, j)] += cr(w) * v[i] * v[j].conj();
                    }
                }
            }
            let rho = DensityMatrix::new(m).unwrap();
            let l = fermionic_lambdas(&rho).unwrap();
            let conj = rho.matrix().map(|z| z.conj());
            let tilde = &kernel * conj * &kernel;
            let prod = rho.matrix() * tilde;
            let mut power = CMat::identity(6, 6);
            for k in 1..=4 {
                power = &power * &prod;
                let tr: C64 = (0..6).map(|i| power[(i, i)]).sum();
                let moment: f64 = l.iter().map(|x| x.powi(2 * k)).sum();
                assert_abs_diff_eq!(tr.re, moment, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn normal_form_reconstructs() {
        for &m in &[4usize, 6, 8] {
            for seed in 0..4 {
                let omega = random_antisymmetric(m, 31 * m as u64 + seed);
                let form = slater_normal_form(&omega).unwrap();
                let err = (form.reconstruct() - &omega).norm() / omega.norm();
                assert!(err < 1e-9, "m = {m}, err = {err:.2e}");
                // U unitary
                let u = &form.unitary;
                let gram = u.adjoint() * u;
                assert!((gram - CMat::identity(m, m)).norm() < 1e-9);
                // Values descending
                assert!(form.values.windows(2).all(|w| w[0] >= w[1] - 1e-12));
                // Doubled values match singular values.
                let sv = singular_values_desc(&omega);
                let doubled = slater_singular_values(&form, m);
                for (a, b) in sv.iter().zip(doubled.iter()) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn normal_form_handles_degenerate_blocks() {
        // Two blocks with identical amplitude.
        let mut sigma = CMat::zeros(6, 6);
        for j in 0..2 {
            sigma[(2 * j, 2 * j + 1)] = cr(0.7);
            sigma[(2 * j + 1, 2 * j)] = cr(-0.7);
        }
        // Scramble with a random unitary built from Gram-Schmidt.
        let g = random_antisymmetric(6, 99) + CMat::identity(6, 6) * cr(2.0);
        let (_, vecs) = hermitian_eigen(&(&g * g.adjoint())).unwrap();
        let mut u = CMat::zeros(6, 6);
        for (j, v) in vecs.iter().enumerate() {
            for r in 0..6 {
                u[(r, j)] = v[r];
            }
        }
        let omega = &u * sigma * u.transpose();
        let form = slater_normal_form(&omega).unwrap();
        assert_eq!(form.rank(1e-8), 2);
        assert_abs_diff_eq!(form.values[0], 0.7, epsilon = 1e-9);
        assert_abs_diff_eq!(form.values[1], 0.7, epsilon = 1e-9);
        let err = (form.reconstruct() - &omega).norm() / omega.norm();
        assert!(err < 1e-9, "err = {err:.2e}");
    }

    #[test]
    fn pair_decomposability_minors() {
        // Single determinant: all minors vanish.
        let mut slater = CMat::zeros(6, 6);
        slater[(0, 1)] = cr(0.5);
        slater[(1, 0)] = cr(-0.5);
        assert!(max_pfaffian_minor(&slater).unwrap() < 1e-14);

        // Rank-two states have a nonvanishing minor.
        let omega = random_antisymmetric(6, 3);
        let omega = omega.clone() / cr(omega.norm());
        assert!(max_pfaffian_minor(&omega).unwrap() > 1e-3);
    }

    #[test]
    fn slater_rank_one_test_classifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let normal = StandardNormal;
        let mut gauss =
            |m: usize| CVec::from_iterator(m, (0..m).map(|_| c(normal.sample(&mut rng), normal.sample(&mut rng))));
        // Orthonormalize three vectors in six modes.
        let raw = [gauss(6), gauss(6), gauss(6)];
        let mut ortho: Vec<CVec> = Vec::new();
        for v in raw.iter() {
            let mut w = v.clone();
            for u in &ortho {
                let proj: C64 = u.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
                for r in 0..6 {
                    let sub = proj * u[r];
                    w[r] -= sub;
                }
            }
            let norm: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            ortho.push(w.map(|z| z / cr(norm)));
        }
        let wedge = AntisymmetricTensor::from_slater(&ortho).unwrap();
        let report = slater_rank_one_test(&wedge, 1).unwrap();
        assert!(report.rank_one, "max minor {:.2e}", report.max_minor);

        // |123⟩ + |456⟩ is not a single determinant.
        let e = |k: usize| {
            let mut v = CVec::zeros(6);
            v[k] = cr(1.0);
            v
        };
        let w1 = AntisymmetricTensor::from_slater(&[e(0), e(1), e(2)]).unwrap();
        let w2 = AntisymmetricTensor::from_slater(&[e(3), e(4), e(5)]).unwrap();
        let sum = AntisymmetricTensor::superpose(&[(cr(1.0), &w1), (cr(1.0), &w2)]).unwrap();
        let report = slater_rank_one_test(&sum, 1).unwrap();
        assert!(!report.rank_one);
        assert!(report.max_minor > 1e-3);
    }

    #[test]
    fn boson_takagi_and_effective_rank() {
        // Symmetric matrix with known singular values.
        let mut omega = CMat::zeros(4, 4);
        omega[(0, 1)] = cr(0.5);
        omega[(1, 0)] = cr(0.5);
        omega[(2, 3)] = cr(0.5);
        omega[(3, 2)] = cr(0.5);
        let vals = boson_takagi_values(&omega).unwrap();
        assert_abs_diff_eq!(vals[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[3], 0.5, epsilon = 1e-12);

        // Two equal coefficients: a condensate, rank one.
        assert_eq!(effective_boson_rank(&[0.7, 0.7], 1e-12, 1e-8), 1);
        // Three distinct coefficients: genuinely entangled.
        assert_eq!(effective_boson_rank(&[0.8, 0.5, 0.3], 1e-12, 1e-8), 3);
        // Mixed cluster structure.
        assert_eq!(effective_boson_rank(&[0.6, 0.6, 0.6, 0.2], 1e-12, 1e-8), 3);
        assert_eq!(effective_boson_rank(&[0.9, 1e-15], 1e-12, 1e-8), 1);
    }

    #[test]
    fn particle_entanglement_of_disjoint_pairs_vanishes() {
        // (|both in A⟩ + |both in B⟩)/√2 over modes {0,1 | 2,3}.
        let s = cr(std::f64::consts::FRAC_1_SQRT_2);
        let state = FockState::new(4, vec![(0b0011, s), (0b1100, s)]).unwrap();
        let rep = entanglement_of_particles(&state, &[0, 1]).unwrap();
        assert_abs_diff_eq!(rep.entanglement_of_particles, 0.0, epsilon = 1e-12);
        // The unprojected mode entropy sees one bit.
        assert_abs_diff_eq!(rep.mode_entanglement, 1.0, epsilon = 1e-12);
        assert_eq!(rep.sectors.len(), 2);
    }

    #[test]
    fn particle_entanglement_of_split_singlet_is_one_bit() {
        // Modes: 0 = L↑, 1 = L↓, 2 = R↑, 3 = R↓.
        // (c†_{L↑} c†_{R↓} − c†_{L↓} c†_{R↑})/√2.
        let s = cr(std::f64::consts::FRAC_1_SQRT_2);
        let state = FockState::new(4, vec![(0b1001, s), (0b0110, -s)]).unwrap();
        let rep = entanglement_of_particles(&state, &[0, 1]).unwrap();
        assert_abs_diff_eq!(rep.entanglement_of_particles, 1.0, epsilon = 1e-12);
        assert_eq!(rep.sectors.len(), 1);
        assert_abs_diff_eq!(rep.sectors[0].1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn particle_entanglement_of_product_vanishes() {
        let state = FockState::new(4, vec![(0b0101, cr(1.0))]).unwrap();
        let rep = entanglement_of_particles(&state, &[0, 1]).unwrap();
        assert_abs_diff_eq!(rep.entanglement_of_particles, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rep.mode_entanglement, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reorder_sign_tracks_operator_exchanges() {
        // mask 0b0110 = modes 1, 2 occupied; A = {0, 1}. Canonical order
        // c†_1 c†_2; block order c†_1 c†_2 — no crossing.
        assert_eq!(block_reorder_sign(0b0110, 0b0011), 1.0);
        // mask 0b0101: modes 0, 2. A = {1, 2}: occupied A mode 2 must move
        // before B mode 0 — one crossing.
        assert_eq!(block_reorder_sign(0b0101, 0b0110), -1.0);
    }
}
