//! Multipartite entanglement: polynomial invariants, convex roofs, the
//! geometric measure, purity distributions, and localizable entanglement.
//!
//! The polynomial invariants are built from the antilinear expectations
//! T(μ₁…μ_n) = ⟨ψ*|σ_{μ₁}⊗…⊗σ_{μ_n}|ψ⟩ — bilinear forms in the amplitudes,
//! which makes them sensitive to entanglement classes that ordinary
//! (sesquilinear) expectations cannot resolve. Contractions use the comb
//! metric g = (−1, 1, 0, 1) on the Pauli index: the σ_y component is
//! projected out and the "time-like" identity component enters with a sign,
//! which is exactly what makes every contraction vanish on product factors.
//!
//! The invariants provided here:
//!
//! * the three-tangle τ₃ = |Σ g_μ g_ν g_λ T(μνλ)²| / 3, equal on pure
//!   three-qubit states to the monogamy residual τ₁ − C₀₁² − C₀₂²;
//! * the n-tangle τ_n = |⟨ψ*|σ_y^{⊗n}|ψ⟩|² for even n;
//! * three degree-4/6 filter invariants on four qubits that separate
//!   inequivalent entanglement classes (values on the standard
//!   representatives are pinned in the tests);
//! * the translation of antilinear "combs" into polynomials in ordinary
//!   expectation values, via the Pauli expansion of ρ = |ψ⟩⟨ψ|.
//!
//! Beyond the invariants, the module carries the generic convex-roof
//! optimizer over subnormalized ensembles (used for mixed-state tangles),
//! the geometric measure by alternating single-site optimization, the
//! distribution of bipartition purities with the derived global measure,
//! and localizable entanglement by direct optimization over local
//! projective measurement bases.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bipartite::{self, one_tangle};
use crate::error::{Error, Result};
use crate::linalg::{c, cr, CMat, CVec, C64};
use crate::state::{DensityMatrix, Pauli, PauliWord, PureState, Subsystem};

/// Comb metric on the Pauli index μ = (I, X, Y, Z).
pub const COMB_METRIC: [f64; 4] = [-1.0, 1.0, 0.0, 1.0];

/// All antilinear expectations T(μ⃗) = ⟨ψ*|σ_{μ⃗}|ψ⟩ of an n-qubit state,
/// indexed by the base-4 digit string μ₁…μ_n (μ₁ belongs to qubit 0).
#[derive(Debug, Clone)]
pub struct AntilinearTensor {
    n: usize,
    values: Vec<C64>,
}

impl AntilinearTensor {
    pub fn from_state(state: &PureState) -> Result<Self> {
        let n = state.n_qubits();
        if n > 6 {
            return Err(Error::capacity(
                "antilinear tensor is limited to 6 qubits (4^n entries)",
            ));
        }
        let total = 4usize.pow(n as u32);
        let mut values = Vec::with_capacity(total);
        let mut digits = vec![0usize; n];
        for idx in 0..total {
            let mut rest = idx;
            for q in (0..n).rev() {
                digits[q] = rest & 3;
                rest >>= 2;
            }
            let word = PauliWord::from_indices(&digits)?;
            values.push(state.antilinear_expectation(&word)?);
        }
        Ok(AntilinearTensor { n, values })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn value(&self, digits: &[usize]) -> C64 {
        debug_assert_eq!(digits.len(), self.n);
        let mut idx = 0usize;
        for &d in digits {
            idx = (idx << 2) | (d & 3);
        }
        self.values[idx]
    }
}

/// Three-tangle of a three-qubit pure state.
pub fn three_tangle(state: &PureState) -> Result<f64> {
    if state.n_qubits() != 3 {
        return Err(Error::invalid("three-tangle takes three qubits"));
    }
    let t = AntilinearTensor::from_state(state)?;
    let mut acc = c(0.0, 0.0);
    for mu in 0..4 {
        let gm = COMB_METRIC[mu];
        if gm == 0.0 {
            continue;
        }
        for nu in 0..4 {
            let gn = COMB_METRIC[nu];
            if gn == 0.0 {
                continue;
            }
            for la in 0..4 {
                let gl = COMB_METRIC[la];
                if gl == 0.0 {
                    continue;
                }
                let v = t.value(&[mu, nu, la]);
                acc += cr(gm * gn * gl) * v * v;
            }
        }
    }
    Ok(acc.norm() / 3.0)
}

/// n-tangle τ_n = |⟨ψ*|σ_y^{⊗n}|ψ⟩|², defined for n = 2 and even n ≥ 4.
pub fn n_tangle(state: &PureState) -> Result<f64> {
    let n = state.n_qubits();
    if !n.is_multiple_of(2) {
        return Err(Error::invalid(
            "the n-tangle is defined for an even number of qubits",
        ));
    }
    let word = PauliWord::new(vec![Pauli::Y; n]);
    Ok(state.antilinear_expectation(&word)?.norm_sqr())
}

/// Wootters concurrence of the (i, j) reduction of a pure state.
pub fn pairwise_concurrence(state: &PureState, i: usize, j: usize) -> Result<f64> {
    let sub = Subsystem::new([i, j], state.n_qubits())?;
    bipartite::concurrence(&state.partial_trace(&sub)?)
}

/// Monogamy residual of qubit `focus`: τ₁(focus) − Σ_{j≠focus} C²(focus, j).
/// Nonnegative on every pure state; equals τ₃ when n = 3.
pub fn ckw_residual(state: &PureState, focus: usize) -> Result<f64> {
    let n = state.n_qubits();
    if focus >= n {
        return Err(Error::invalid("focus qubit out of range"));
    }
    let t1 = bipartite::one_tangle_of_site(state, focus)?;
    let mut acc = t1;
    for j in 0..n {
        if j != focus {
            let cij = pairwise_concurrence(state, focus, j)?;
            acc -= cij * cij;
        }
    }
    Ok(acc)
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::with_capacity(24);
    let mut items = [0usize, 1, 2, 3];
    // Heap's algorithm, iterative.
    let mut c = [0usize; 4];
    out.push(items);
    let mut i = 0;
    while i < 4 {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            out.push(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// The three four-qubit filter invariants (absolute values).
///
/// With Y the fixed σ_y slot and g the comb metric:
/// * F₁ = |Σ g_μ g_ν g_λ T(μν YY) T(μ Y λ Y) T(Y ν λ Y)|
/// * F₂ = |mean over qubit relabelings of
///   Σ g_μ g_ν g_λ g_τ T(μν YY) T(μ Y λ Y) T(Y ν Y τ) T(YY λ τ)|
/// * F₃ = ½ |Σ g_μ g_ν T(μν YY)² · Σ g_ρ g_τ T(ρ Y τ Y)² · Σ g_λ g_κ T(Y λ κ Y)²|
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterValues {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
}

const Y: usize = 2;

fn filter_f1_from(t: &dyn Fn(&[usize; 4]) -> C64) -> C64 {
    let mut acc = c(0.0, 0.0);
    for mu in [0usize, 1, 3] {
        for nu in [0usize, 1, 3] {
            for la in [0usize, 1, 3] {
                let g = COMB_METRIC[mu] * COMB_METRIC[nu] * COMB_METRIC[la];
                acc += cr(g) * t(&[mu, nu, Y, Y]) * t(&[mu, Y, la, Y]) * t(&[Y, nu, la, Y]);
            }
        }
    }
    acc
}

fn filter_f2_from(t: &dyn Fn(&[usize; 4]) -> C64) -> C64 {
    let mut acc = c(0.0, 0.0);
    for mu in [0usize, 1, 3] {
        for nu in [0usize, 1, 3] {
            for la in [0usize, 1, 3] {
                for ta in [0usize, 1, 3] {
                    let g = COMB_METRIC[mu] * COMB_METRIC[nu] * COMB_METRIC[la] * COMB_METRIC[ta];
                    acc += cr(g)
                        * t(&[mu, nu, Y, Y])
                        * t(&[mu, Y, la, Y])
                        * t(&[Y, nu, Y, ta])
                        * t(&[Y, Y, la, ta]);
                }
            }
        }
    }
    acc
}

fn filter_f3_from(t: &dyn Fn(&[usize; 4]) -> C64) -> C64 {
    let quad = |slots: &dyn Fn(usize, usize) -> [usize; 4]| {
        let mut acc = c(0.0, 0.0);
        for mu in [0usize, 1, 3] {
            for nu in [0usize, 1, 3] {
                let v = t(&slots(mu, nu));
                acc += cr(COMB_METRIC[mu] * COMB_METRIC[nu]) * v * v;
            }
        }
        acc
    };
    let s1 = quad(&|m, n| [m, n, Y, Y]);
    let s2 = quad(&|m, n| [m, Y, n, Y]);
    let s3 = quad(&|m, n| [Y, m, n, Y]);
    cr(0.5) * s1 * s2 * s3
}

/// Evaluate F₁, F₂, F₃ on a four-qubit pure state.
pub fn four_qubit_filters(state: &PureState) -> Result<FilterValues> {
    if state.n_qubits() != 4 {
        return Err(Error::invalid("filter invariants take four qubits"));
    }
    let tensor = AntilinearTensor::from_state(state)?;
    let base = |d: &[usize; 4]| tensor.value(d);
    let f1 = filter_f1_from(&base).norm();
    let mut f2_acc = c(0.0, 0.0);
    let perms = permutations4();
    for p in &perms {
        let permuted = |d: &[usize; 4]| {
            let mut e = [0usize; 4];
            for k in 0..4 {
                e[p[k]] = d[k];
            }
            tensor.value(&e)
        };
        f2_acc += filter_f2_from(&permuted);
    }
    let f2 = (f2_acc / cr(perms.len() as f64)).norm();
    let f3 = filter_f3_from(&base).norm();
    Ok(FilterValues { f1, f2, f3 })
}

// ---------------------------------------------------------------------------
// Geometric measure
// ---------------------------------------------------------------------------

/// Options for the alternating product-state optimization.
#[derive(Debug, Clone, Copy)]
pub struct GeometricOptions {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for GeometricOptions {
    fn default() -> Self {
        GeometricOptions {
            restarts: 32,
            max_sweeps: 600,
            tol: 1e-13,
            seed: 7,
        }
    }
}

/// Result of the geometric-measure optimization.
#[derive(Debug, Clone)]
pub struct GeometricMeasure {
    /// Λ² = max over product states of |⟨Ψ|Φ⟩|².
    pub max_overlap_sq: f64,
    /// E_g = −log₂ Λ².
    pub value: f64,
    /// The optimizing single-qubit vectors, one [c₀, c₁] pair per qubit.
    pub closest_product: Vec<[C64; 2]>,
}

fn random_qubit_vector(rng: &mut ChaCha8Rng) -> [C64; 2] {
    let normal = StandardNormal;
    let v = [
        c(normal.sample(rng), normal.sample(rng)),
        c(normal.sample(rng), normal.sample(rng)),
    ];
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / norm, v[1] / norm]
}

fn overlap_env(state: &PureState, vs: &[[C64; 2]], q: usize) -> [C64; 2] {
    let n = state.n_qubits();
    let mut w = [c(0.0, 0.0); 2];
    for b in 0..state.dim() {
        let amp = state.amp(b);
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut prod = amp.conj();
        for (r, v) in vs.iter().enumerate() {
            if r == q {
                continue;
            }
            prod *= v[(b >> (n - 1 - r)) & 1];
        }
        w[(b >> (n - 1 - q)) & 1] += prod;
    }
    w
}

fn sweep_to_convergence(state: &PureState, vs: &mut [[C64; 2]], opts: &GeometricOptions) -> f64 {
    let n = state.n_qubits();
    let mut best = 0.0_f64;
    for _ in 0..opts.max_sweeps {
        let mut current = 0.0;
        for q in 0..n {
            let w = overlap_env(state, vs, q);
            let norm = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
            if norm < 1e-300 {
                return 0.0;
            }
            vs[q] = [w[0].conj() / norm, w[1].conj() / norm];
            current = norm;
        }
        if (current - best).abs() < opts.tol {
            return current;
        }
        best = best.max(current);
    }
    best
}

/// Geometric measure E_g = −log₂ max_{product Φ} |⟨Ψ|Φ⟩|², by alternating
/// closed-form single-site updates with seeded random restarts.
pub fn geometric_measure(state: &PureState, opts: &GeometricOptions) -> Result<GeometricMeasure> {
    let n = state.n_qubits();
    if n > 12 {
        return Err(Error::capacity("geometric measure limited to 12 qubits"));
    }
    let starts: Vec<u64> = (0..opts.restarts as u64).collect();
    let candidates: Vec<(f64, Vec<[C64; 2]>)> = starts
        .par_iter()
        .map(|&r| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(r));
            let mut vs: Vec<[C64; 2]> = if r == 0 {
                // Deterministic start: the largest-amplitude basis state.
                let bmax = (0..state.dim())
                    .max_by(|&a, &b| {
                        state
                            .amp(a)
                            .norm_sqr()
                            .partial_cmp(&state.amp(b).norm_sqr())
                            .unwrap()
                    })
                    .unwrap_or(0);
                (0..n)
                    .map(|q| {
                        if (bmax >> (n - 1 - q)) & 1 == 0 {
                            [cr(1.0), cr(0.0)]
                        } else {
                            [cr(0.0), cr(1.0)]
                        }
                    })
                    .collect()
            } else {
                (0..n).map(|_| random_qubit_vector(&mut rng)).collect()
            };
            let overlap = sweep_to_convergence(state, &mut vs, opts);
            (overlap, vs)
        })
        .collect();
    let (overlap, closest) = candidates
        .into_iter()
        .fold((0.0_f64, Vec::new()), |acc, cand| {
            if cand.0 > acc.0 {
                cand
            } else {
                acc
            }
        });
    let max_overlap_sq = (overlap * overlap).min(1.0);
    Ok(GeometricMeasure {
        max_overlap_sq,
        value: -max_overlap_sq.log2(),
        closest_product: closest,
    })
}

// ---------------------------------------------------------------------------
// Purity distribution and the global measure
// ---------------------------------------------------------------------------

/// Purity of one bipartition of a pure state.
#[derive(Debug, Clone)]
pub struct BipartitionPurity {
    /// Qubits on the side of the cut containing qubit 0.
    pub part: Vec<usize>,
    /// tr ρ_part².
    pub purity: f64,
    /// Generalized bipartite tangle 2(1 − purity).
    pub tangle: f64,
}

fn cut_purity(state: &PureState, part: &Subsystem) -> Result<f64> {
    let n = state.n_qubits();
    // Work on the smaller factor; the spectrum is shared.
    let side = if part.len() * 2 > n {
        part.complement(n)
    } else {
        part.clone()
    };
    let m = bipartite::amplitude_matrix(state, &side)?;
    let g = &m * m.adjoint();
    let mut acc = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            acc += g[(i, j)].norm_sqr();
        }
    }
    Ok(acc)
}

/// Purities of all 2^{n−1} − 1 bipartitions (each cut listed once, by the
/// side containing qubit 0).
pub fn bipartition_purities(state: &PureState) -> Result<Vec<BipartitionPurity>> {
    let n = state.n_qubits();
    if n < 2 {
        return Err(Error::invalid("need at least two qubits to cut"));
    }
    if n > 14 {
        return Err(Error::capacity("purity distribution limited to 14 qubits"));
    }
    let full = (1usize << n) - 1;
    let masks: Vec<usize> = (0..1usize << (n - 1))
        .map(|m| (m << 1) | 1)
        .filter(|&m| m != full)
        .collect();
    masks
        .par_iter()
        .map(|&mask| {
            let qubits: Vec<usize> = (0..n).filter(|&q| (mask >> q) & 1 == 1).collect();
            let sub = Subsystem::new(qubits.iter().copied(), n)?;
            let purity = cut_purity(state, &sub)?;
            Ok(BipartitionPurity {
                part: qubits,
                purity,
                tangle: 2.0 * (1.0 - purity),
            })
        })
        .collect()
}

/// Global measure Q = mean over sites of the one-tangle τ₁(i).
pub fn global_entanglement(state: &PureState) -> Result<f64> {
    let n = state.n_qubits();
    let mut acc = 0.0;
    for q in 0..n {
        acc += bipartite::one_tangle_of_site(state, q)?;
    }
    Ok(acc / n as f64)
}

// ---------------------------------------------------------------------------
// Convex roof
// ---------------------------------------------------------------------------

/// Whether the roof optimization minimizes (the usual convex roof) or
/// maximizes (the concave "ceiling").
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoofMode {
    Minimize,
    Maximize,
}

/// Options for the ensemble-space random search.
#[derive(Debug, Clone, Copy)]
pub struct RoofOptions {
    /// Proposal steps per restart.
    pub iterations: usize,
    /// Independent restarts (parallelized; deterministic given the seed).
    pub restarts: usize,
    /// Ensemble size K (must be at least the rank of ρ; it is raised to the
    /// rank automatically).
    pub ensemble_size: usize,
    pub seed: u64,
    pub mode: RoofMode,
}

impl Default for RoofOptions {
    fn default() -> Self {
        RoofOptions {
            iterations: 4000,
            restarts: 24,
            ensemble_size: 4,
            seed: 11,
            mode: RoofMode::Minimize,
        }
    }
}

/// Result of a convex-roof optimization.
#[derive(Debug, Clone)]
pub struct RoofResult {
    /// Best ensemble average found.
    pub value: f64,
    /// The optimizing ensemble as (probability, state) pairs.
    pub ensemble: Vec<(f64, PureState)>,
}

fn random_gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMat {
    let normal = StandardNormal;
    CMat::from_fn(rows, cols, |_, _| c(normal.sample(rng), normal.sample(rng)))
}

/// Modified Gram-Schmidt orthonormalization of the columns; errors on rank
/// deficiency.
fn orthonormalize(m: &CMat) -> Result<CMat> {
    let mut q = m.clone();
    let cols = q.ncols();
    for j in 0..cols {
        for k in 0..j {
            let proj: C64 = (0..q.nrows()).map(|r| q[(r, k)].conj() * q[(r, j)]).sum();
            for r in 0..q.nrows() {
                let sub = proj * q[(r, k)];
                q[(r, j)] -= sub;
            }
        }
        let norm: f64 = (0..q.nrows()).map(|r| q[(r, j)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::numerical("rank-deficient proposal in roof search"));
        }
        for r in 0..q.nrows() {
            q[(r, j)] /= cr(norm);
        }
    }
    Ok(q)
}

fn subnormalized_columns(rho: &DensityMatrix) -> Result<CMat> {
    let (evals, evecs) = crate::linalg::hermitian_eigen(rho.matrix())?;
    let d = rho.dim();
    let kept: Vec<(f64, &CVec)> = evals
        .iter()
        .zip(evecs.iter())
        .filter(|(p, _)| **p > 1e-12)
        .map(|(p, v)| (*p, v))
        .collect();
    if kept.is_empty() {
        return Err(Error::numerical("density matrix has no positive weight"));
    }
    let mut psi = CMat::zeros(d, kept.len());
    for (i, (p, v)) in kept.iter().enumerate() {
        let w = p.sqrt();
        for r in 0..d {
            psi[(r, i)] = v[r] * cr(w);
        }
    }
    Ok(psi)
}

fn member_value(
    col: &CVec,
    n_qubits: usize,
    measure: &(dyn Fn(&PureState) -> Result<f64> + Sync),
) -> Result<(f64, f64)> {
    let p: f64 = col.iter().map(|z| z.norm_sqr()).sum();
    if p < 1e-14 {
        return Ok((p, 0.0));
    }
    let s = p.sqrt();
    let amps: Vec<C64> = col.iter().map(|z| z / s).collect();
    let member = PureState::new(n_qubits, amps)?;
    Ok((p, p * measure(&member)?))
}

/// Optimize Σ_k p_k m(φ_k) over decompositions ρ = Σ_k p_k |φ_k⟩⟨φ_k|.
///
/// Every decomposition of ρ into K members arises from the eigen-ensemble
/// Φ⁰ = Ψ (zero-padded to K columns) by a right unitary: Φ = Φ⁰ Uᵀ. The
/// search walks that unitary with random Givens rotations — each proposal
/// mixes two subnormalized members with a 2×2 unitary, which preserves
/// Φ Φ† = ρ exactly and touches only the two affected member values. The
/// rotation angle anneals: it grows on acceptance and shrinks on rejection,
/// so late proposals polish the optimum to high precision.
pub fn convex_roof(
    rho: &DensityMatrix,
    measure: &(dyn Fn(&PureState) -> Result<f64> + Sync),
    opts: &RoofOptions,
) -> Result<RoofResult> {
    let n_qubits = rho
        .n_qubits()
        .ok_or_else(|| Error::invalid("roof optimization expects a qubit register"))?;
    let psi = subnormalized_columns(rho)?;
    let d = psi.nrows();
    let r = psi.ncols();
    let k = opts.ensemble_size.max(r);

    let better = |a: f64, b: f64| match opts.mode {
        RoofMode::Minimize => a < b - 1e-15,
        RoofMode::Maximize => a > b + 1e-15,
    };

    let runs: Vec<Result<(f64, CMat)>> = (0..opts.restarts as u64)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&restart| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart.wrapping_mul(0x9E37)));
            // Start: eigen-ensemble, padded; later restarts scramble it by a
            // random isometry.
            let mut phi = CMat::zeros(d, k);
            if restart == 0 {
                for i in 0..r {
                    for row in 0..d {
                        phi[(row, i)] = psi[(row, i)];
                    }
                }
            } else {
                let w = orthonormalize(&random_gaussian_matrix(k, r, &mut rng))?;
                let full = &psi * w.transpose();
                phi.copy_from(&full);
            }
            let mut probs = vec![0.0_f64; k];
            let mut vals = vec![0.0_f64; k];
            for kk in 0..k {
                let (p, v) = member_value(&phi.column(kk).into_owned(), n_qubits, measure)?;
                probs[kk] = p;
                vals[kk] = v;
            }
            let mut value: f64 = vals.iter().sum();

            let rotate = |phi: &CMat, i: usize, j: usize, theta: f64, ph: f64| {
                let (s, co) = theta.sin_cos();
                let e = C64::from_polar(1.0, ph);
                let mut col_i = CVec::zeros(d);
                let mut col_j = CVec::zeros(d);
                for row in 0..d {
                    let a = phi[(row, i)];
                    let b = phi[(row, j)];
                    col_i[row] = cr(co) * a + e.conj() * cr(s) * b;
                    col_j[row] = -e * cr(s) * a + cr(co) * b;
                }
                (col_i, col_j)
            };
            let rotate_in_place = |x: &mut CVec, y: &mut CVec, theta: f64, ph: f64| {
                let (s, co) = theta.sin_cos();
                let e = C64::from_polar(1.0, ph);
                for row in 0..d {
                    let a = x[row];
                    let b = y[row];
                    x[row] = cr(co) * a + e.conj() * cr(s) * b;
                    y[row] = -e * cr(s) * a + cr(co) * b;
                }
            };

            // Phase 1: annealed random walk to find the right basin. Two-
            // member rotations alone have spurious fixed points — when all
            // but one member already score zero, no single pair rotation
            // can spread the remainder — so a third of the proposals mix
            // three members at once.
            let mut sigma = 0.5_f64;
            let normal = StandardNormal;
            for _ in 0..opts.iterations {
                let triple = k >= 3 && rng.gen_range(0..3u8) == 0;
                if triple {
                    let i = rng.gen_range(0..k);
                    let mut j = rng.gen_range(0..k - 1);
                    if j >= i {
                        j += 1;
                    }
                    let mut l = rng.gen_range(0..k - 2);
                    for taken in [i.min(j), i.max(j)] {
                        if l >= taken {
                            l += 1;
                        }
                    }
                    let mut ci = phi.column(i).into_owned();
                    let mut cj = phi.column(j).into_owned();
                    let mut cl = phi.column(l).into_owned();
                    for round in 0..3 {
                        let theta: f64 = {
                            let g: f64 = normal.sample(&mut rng);
                            g * sigma
                        };
                        let ph = rng.gen_range(0.0..std::f64::consts::TAU);
                        match round {
                            0 => rotate_in_place(&mut ci, &mut cj, theta, ph),
                            1 => rotate_in_place(&mut cj, &mut cl, theta, ph),
                            _ => rotate_in_place(&mut ci, &mut cl, theta, ph),
                        }
                    }
                    let (pi, vi) = member_value(&ci, n_qubits, measure)?;
                    let (pj, vj) = member_value(&cj, n_qubits, measure)?;
                    let (pl, vl) = member_value(&cl, n_qubits, measure)?;
                    let cand = value - vals[i] - vals[j] - vals[l] + vi + vj + vl;
                    if better(cand, value) {
                        for row in 0..d {
                            phi[(row, i)] = ci[row];
                            phi[(row, j)] = cj[row];
                            phi[(row, l)] = cl[row];
                        }
                        probs[i] = pi;
                        probs[j] = pj;
                        probs[l] = pl;
                        vals[i] = vi;
                        vals[j] = vj;
                        vals[l] = vl;
                        value = cand;
                        sigma = (sigma * 1.1).min(std::f64::consts::FRAC_PI_2);
                    } else {
                        sigma = (sigma * 0.985).max(1e-8);
                    }
                    continue;
                }
                let i = rng.gen_range(0..k);
                let mut j = rng.gen_range(0..k - 1);
                if j >= i {
                    j += 1;
                }
                let theta: f64 = {
                    let g: f64 = normal.sample(&mut rng);
                    g * sigma
                };
                let ph = rng.gen_range(0.0..std::f64::consts::TAU);
                let (col_i, col_j) = rotate(&phi, i, j, theta, ph);
                let (pi, vi) = member_value(&col_i, n_qubits, measure)?;
                let (pj, vj) = member_value(&col_j, n_qubits, measure)?;
                let cand = value - vals[i] - vals[j] + vi + vj;
                if better(cand, value) {
                    for row in 0..d {
                        phi[(row, i)] = col_i[row];
                        phi[(row, j)] = col_j[row];
                    }
                    probs[i] = pi;
                    probs[j] = pj;
                    vals[i] = vi;
                    vals[j] = vj;
                    value = cand;
                    sigma = (sigma * 1.1).min(std::f64::consts::FRAC_PI_2);
                } else {
                    sigma = (sigma * 0.985).max(1e-8);
                }
            }

            // Phase 2: deterministic block descent, with stall-breaking
            // bursts. Pairwise sweeps scan every Givens block coarsely and
            // refine the best cell by a shrinking pattern search; when no
            // pair improves, a burst of shrinking three-member rotations
            // attacks the pairwise fixed points. Descent resumes after any
            // burst success and the whole cycle repeats until neither
            // phase moves.
            const COARSE: usize = 12;
            const REFINE_ROUNDS: usize = 24;
            // Both polish budgets scale with the caller's iteration budget so
            // cheap scans stay cheap while high-accuracy runs get the full
            // treatment.
            let burst_len = (opts.iterations / 4).clamp(1_000, 8_000);
            let cycles = (opts.iterations / 10_000).clamp(4, 8);
            for _cycle in 0..cycles {
                // Pairwise sweeps until they exhaust themselves.
                for _sweep in 0..64 {
                    let mut improved = false;
                    for i in 0..k {
                        for j in i + 1..k {
                            let pair_eval = |theta: f64, ph: f64| -> Result<f64> {
                                let (ci, cj) = rotate(&phi, i, j, theta, ph);
                                let (_, vi) = member_value(&ci, n_qubits, measure)?;
                                let (_, vj) = member_value(&cj, n_qubits, measure)?;
                                Ok(vi + vj)
                            };
                            let mut t0 = 0.0;
                            let mut p0 = 0.0;
                            let mut pair_best = vals[i] + vals[j];
                            for ti in 0..COARSE {
                                let theta = std::f64::consts::PI
                                    * ((ti as f64 + 0.5) / COARSE as f64 - 0.5);
                                for pj_ in 0..COARSE {
                                    let ph =
                                        std::f64::consts::TAU * pj_ as f64 / COARSE as f64;
                                    let cand = pair_eval(theta, ph)?;
                                    if better(cand, pair_best) {
                                        pair_best = cand;
                                        t0 = theta;
                                        p0 = ph;
                                    }
                                }
                            }
                            let mut span_t = std::f64::consts::PI / COARSE as f64;
                            let mut span_p = std::f64::consts::TAU / COARSE as f64;
                            for _ in 0..REFINE_ROUNDS {
                                let mut moved = false;
                                for dt in [-1.0, 0.0, 1.0] {
                                    for dp in [-1.0, 0.0, 1.0] {
                                        if dt == 0.0 && dp == 0.0 {
                                            continue;
                                        }
                                        let cand = pair_eval(t0 + dt * span_t, p0 + dp * span_p)?;
                                        if better(cand, pair_best) {
                                            pair_best = cand;
                                            t0 += dt * span_t;
                                            p0 += dp * span_p;
                                            moved = true;
                                        }
                                    }
                                }
                                if !moved {
                                    span_t *= 0.5;
                                    span_p *= 0.5;
                                }
                            }
                            if better(value - vals[i] - vals[j] + pair_best, value) {
                                let (col_i, col_j) = rotate(&phi, i, j, t0, p0);
                                let (pi, vi) = member_value(&col_i, n_qubits, measure)?;
                                let (pj, vj) = member_value(&col_j, n_qubits, measure)?;
                                for row in 0..d {
                                    phi[(row, i)] = col_i[row];
                                    phi[(row, j)] = col_j[row];
                                }
                                probs[i] = pi;
                                probs[j] = pj;
                                vals[i] = vi;
                                vals[j] = vj;
                                value = vals.iter().sum();
                                improved = true;
                            }
                        }
                    }
                    if !improved {
                        break;
                    }
                }

                // Three-member burst; greedy, with a shrinking step.
                let mut burst_hit = false;
                if k >= 3 {
                    let mut burst_sigma = 0.4_f64;
                    for _ in 0..burst_len {
                        let i = rng.gen_range(0..k);
                        let mut j = rng.gen_range(0..k - 1);
                        if j >= i {
                            j += 1;
                        }
                        let mut l = rng.gen_range(0..k - 2);
                        for taken in [i.min(j), i.max(j)] {
                            if l >= taken {
                                l += 1;
                            }
                        }
                        let mut ci = phi.column(i).into_owned();
                        let mut cj = phi.column(j).into_owned();
                        let mut cl = phi.column(l).into_owned();
                        for round in 0..3 {
                            let theta: f64 = {
                                let g: f64 = normal.sample(&mut rng);
                                g * burst_sigma
                            };
                            let ph = rng.gen_range(0.0..std::f64::consts::TAU);
                            match round {
                                0 => rotate_in_place(&mut ci, &mut cj, theta, ph),
                                1 => rotate_in_place(&mut cj, &mut cl, theta, ph),
                                _ => rotate_in_place(&mut ci, &mut cl, theta, ph),
                            }
                        }
                        let (pi, vi) = member_value(&ci, n_qubits, measure)?;
                        let (pj, vj) = member_value(&cj, n_qubits, measure)?;
                        let (pl, vl) = member_value(&cl, n_qubits, measure)?;
                        let cand = value - vals[i] - vals[j] - vals[l] + vi + vj + vl;
                        if better(cand, value) {
                            for row in 0..d {
                                phi[(row, i)] = ci[row];
                                phi[(row, j)] = cj[row];
                                phi[(row, l)] = cl[row];
                            }
                            probs[i] = pi;
                            probs[j] = pj;
                            probs[l] = pl;
                            vals[i] = vi;
                            vals[j] = vj;
                            vals[l] = vl;
                            value = cand;
                            burst_hit = true;
                        } else {
                            burst_sigma = (burst_sigma * 0.9985).max(1e-4);
                        }
                    }
                }
                if !burst_hit {
                    break;
                }
            }
            Ok((value, phi))
        })
        .collect();

    let mut best: Option<(f64, CMat)> = None;
    for run in runs {
        let (value, phi) = run?;
        best = match best {
            None => Some((value, phi)),
            Some((bv, bphi)) => {
                if better(value, bv) {
                    Some((value, phi))
                } else {
                    Some((bv, bphi))
                }
            }
        };
    }
    let (value, phi) = best.expect("at least one restart");

    let mut ensemble = Vec::new();
    for kk in 0..phi.ncols() {
        let col = phi.column(kk);
        let p: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        if p < 1e-14 {
            continue;
        }
        let s = p.sqrt();
        let amps: Vec<C64> = col.iter().map(|z| z / s).collect();
        ensemble.push((p, PureState::new(n_qubits, amps)?));
    }
    Ok(RoofResult { value, ensemble })
}

// ---------------------------------------------------------------------------
// GHZ/W mixture scan
// ---------------------------------------------------------------------------

/// The rank-2 mixture p |GHZ⟩⟨GHZ| + (1−p) |W⟩⟨W| on three qubits.
pub fn ghz_w_mixture(p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("mixing parameter outside [0,1]"));
    }
    DensityMatrix::mixture(&[
        (p, crate::state::states::ghz(3)),
        (1.0 - p, crate::state::states::w_state(3)),
    ])
}

/// One point of the GHZ/W mixture scan.
#[derive(Debug, Clone, Copy)]
pub struct GhzWPoint {
    pub p: f64,
    /// One-tangle of a single site of the mixture (exact).
    pub tau1: f64,
    /// Wootters concurrence of a two-site reduction (exact).
    pub pairwise_concurrence: f64,
    /// Convex roof of the three-tangle (optimized).
    pub tau3_roof: f64,
}

/// Scan the GHZ/W mixture family, reporting the exact one-tangle and
/// pairwise concurrence together with the optimized three-tangle roof.
pub fn ghz_w_scan(ps: &[f64], opts: &RoofOptions) -> Result<Vec<GhzWPoint>> {
    ps.iter()
        .map(|&p| {
            let rho = ghz_w_mixture(p)?;
            let site = Subsystem::new([0], 3)?;
            let tau1 = one_tangle(&rho.partial_trace(&site)?)?;
            let pair = Subsystem::new([0, 1], 3)?;
            let cpair = bipartite::concurrence(&rho.partial_trace(&pair)?)?;
            let roof = convex_roof(&rho, &three_tangle, opts)?;
            Ok(GhzWPoint {
                p,
                tau1,
                pairwise_concurrence: cpair,
                tau3_roof: roof.value,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Localizable entanglement
// ---------------------------------------------------------------------------

/// Options for the measurement-basis optimization.
#[derive(Debug, Clone, Copy)]
pub struct LocalizableOptions {
    pub restarts: usize,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for LocalizableOptions {
    fn default() -> Self {
        LocalizableOptions {
            restarts: 12,
            max_passes: 200,
            seed: 3,
        }
    }
}

/// Average concurrence of qubits (i, j) after projective measurements with
/// the given (θ, φ) angles on every other qubit, summed over outcomes.
fn localized_average(
    state: &PureState,
    i: usize,
    j: usize,
    measured: &[usize],
    angles: &[f64],
) -> f64 {
    let n = state.n_qubits();
    // Basis vectors per measured qubit and outcome.
    let bases: Vec<[[C64; 2]; 2]> = measured
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let th = angles[2 * k];
            let ph = angles[2 * k + 1];
            let (s, co) = (0.5 * th).sin_cos();
            let e = C64::from_polar(1.0, ph);
            [
                [cr(co), e * s],
                [cr(s), -e * co],
            ]
        })
        .collect();
    let n_meas = measured.len();
    let mut total = 0.0;
    for outcome in 0..1usize << n_meas {
        // χ_s(a_i, a_j), unnormalized.
        let mut chi = [c(0.0, 0.0); 4];
        for b in 0..state.dim() {
            let amp = state.amp(b);
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let mut prod = amp;
            for (k, &q) in measured.iter().enumerate() {
                let bit = (b >> (n - 1 - q)) & 1;
                let s = (outcome >> k) & 1;
                prod *= bases[k][s][bit].conj();
            }
            let ai = (b >> (n - 1 - i)) & 1;
            let aj = (b >> (n - 1 - j)) & 1;
            chi[(ai << 1) | aj] += prod;
        }
        // p_s · C(χ_s / ‖χ_s‖) = |⟨χ_s*|σ_y⊗σ_y|χ_s⟩| for unnormalized χ_s.
        let bilinear = cr(2.0) * (chi[1] * chi[2] - chi[0] * chi[3]);
        total += bilinear.norm();
    }
    total
}

/// Localizable entanglement of (i, j): the largest average two-qubit
/// concurrence reachable by local projective measurements on all the other
/// qubits, optimized by seeded multi-start pattern search over the
/// measurement angles.
pub fn localizable_entanglement(
    state: &PureState,
    i: usize,
    j: usize,
    opts: &LocalizableOptions,
) -> Result<f64> {
    let n = state.n_qubits();
    if n > 8 {
        return Err(Error::capacity(
            "localizable entanglement limited to 8 qubits",
        ));
    }
    if i >= n || j >= n || i == j {
        return Err(Error::invalid("invalid qubit pair"));
    }
    let measured: Vec<usize> = (0..n).filter(|&q| q != i && q != j).collect();
    if measured.is_empty() {
        return bipartite::concurrence_pure(state);
    }
    let dim = 2 * measured.len();

    let starts: Vec<u64> = (0..opts.restarts as u64).collect();
    let best = starts
        .par_iter()
        .map(|&restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(restart));
            let mut angles: Vec<f64> = match restart {
                // X basis everywhere, then Z basis everywhere, then random.
                0 => (0..dim)
                    .map(|t| if t % 2 == 0 { std::f64::consts::FRAC_PI_2 } else { 0.0 })
                    .collect(),
                1 => vec![0.0; dim],
                _ => (0..dim)
                    .map(|t| {
                        if t % 2 == 0 {
                            rng.gen_range(0.0..std::f64::consts::PI)
                        } else {
                            rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)
                        }
                    })
                    .collect(),
            };
            let mut value = localized_average(state, i, j, &measured, &angles);
            let mut step = 0.6_f64;
            for _ in 0..opts.max_passes {
                let mut improved = false;
                for t in 0..dim {
                    for delta in [step, -step] {
                        let old = angles[t];
                        angles[t] = old + delta;
                        let cand = localized_average(state, i, j, &measured, &angles);
                        if cand > value + 1e-14 {
                            value = cand;
                            improved = true;
                        } else {
                            angles[t] = old;
                        }
                    }
                }
                if !improved {
                    step *= 0.5;
                    if step < 1e-7 {
                        break;
                    }
                }
            }
            value
        })
        .reduce(|| 0.0, f64::max);
    Ok(best.min(1.0))
}

/// Correlation lower bound on localizable entanglement:
/// max over α, β ∈ {x,y,z} of |⟨σ_i^α σ_j^β⟩ − ⟨σ_i^α⟩⟨σ_j^β⟩|.
pub fn le_lower_bound(state: &PureState, i: usize, j: usize) -> Result<f64> {
    let n = state.n_qubits();
    let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut best = 0.0_f64;
    for &a in &paulis {
        let ma = state.pauli_expectation(&PauliWord::single(n, i, a))?;
        for &b in &paulis {
            let mb = state.pauli_expectation(&PauliWord::single(n, j, b))?;
            let ab = state.pauli_expectation(&PauliWord::two_site(n, i, a, j, b))?;
            best = best.max((ab - ma * mb).abs());
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Antilinear combs as expectation-value polynomials
// ---------------------------------------------------------------------------

/// The two antilinear combs in use: the all-σ_y comb whose square is the
/// n-tangle, and the metric comb Σ g_μ T(μ⃗)² built from the comb metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombSpec {
    /// ⟨ψ*|σ_y^{⊗n}|ψ⟩; the translation expresses |·|².
    PauliY { n_qubits: usize },
    /// Σ_{μ⃗} (∏_q g_{μ_q}) T(μ⃗)²; the translation expresses |·|².
    Metric { n_qubits: usize },
}

impl CombSpec {
    pub fn n_qubits(&self) -> usize {
        match *self {
            CombSpec::PauliY { n_qubits } | CombSpec::Metric { n_qubits } => n_qubits,
        }
    }
}

/// One monomial in ordinary expectation values: coeff · Π_k ⟨word_k⟩.
#[derive(Debug, Clone)]
pub struct CombTerm {
    pub coeff: C64,
    pub words: Vec<PauliWord>,
}

/// An antilinear comb rewritten as a polynomial in linear expectation
/// values, via ρ = 2^{-n} Σ ⟨σ_μ⃗⟩ σ_μ⃗ applied to each bra-ket pairing.
#[derive(Debug, Clone)]
pub struct TranslatedComb {
    spec: CombSpec,
    terms: Vec<CombTerm>,
}

fn pauli_entry(p: usize, row: usize, col: usize) -> C64 {
    match p {
        0 => {
            if row == col {
                cr(1.0)
            } else {
                cr(0.0)
            }
        }
        1 => {
            if row != col {
                cr(1.0)
            } else {
                cr(0.0)
            }
        }
        2 => match (row, col) {
            (0, 1) => c(0.0, -1.0),
            (1, 0) => c(0.0, 1.0),
            _ => cr(0.0),
        },
        3 => match (row, col) {
            (0, 0) => cr(1.0),
            (1, 1) => cr(-1.0),
            _ => cr(0.0),
        },
        _ => unreachable!(),
    }
}

/// Per-qubit kernel of the σ_y comb: k2[κ][λ] with
/// |T|² = 4^{-n} Σ ⟨σ_κ⃗⟩⟨σ_λ⃗⟩ Π_q k2[κ_q][λ_q].
fn pauli_y_kernel() -> [[C64; 4]; 4] {
    let mut k = [[cr(0.0); 4]; 4];
    for (kap, row) in k.iter_mut().enumerate() {
        for (lam, out) in row.iter_mut().enumerate() {
            let mut acc = cr(0.0);
            for a in 0..2 {
                for b in 0..2 {
                    for e in 0..2 {
                        for f in 0..2 {
                            acc += pauli_entry(2, a, b)
                                * pauli_entry(2, e, f).conj()
                                * pauli_entry(kap, a, e)
                                * pauli_entry(lam, b, f);
                        }
                    }
                }
            }
            *out = acc;
        }
    }
    k
}

/// Per-qubit bilinear kernel of the metric comb:
/// A[a][b][c][d] = Σ_μ g_μ (σ_μ)_{ab} (σ_μ)_{cd}.
fn metric_bilinear() -> [[[[C64; 2]; 2]; 2]; 2] {
    let mut a4 = [[[[cr(0.0); 2]; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                for d in 0..2 {
                    let mut acc = cr(0.0);
                    for (mu, &g) in COMB_METRIC.iter().enumerate() {
                        if g == 0.0 {
                            continue;
                        }
                        acc += cr(g) * pauli_entry(mu, a, b) * pauli_entry(mu, cc, d);
                    }
                    a4[a][b][cc][d] = acc;
                }
            }
        }
    }
    a4
}

/// Per-qubit quartic kernel of the metric comb: G[κ][λ][μ][ν] with
/// |B|² = 16^{-n} Σ ⟨σ_κ⃗⟩⟨σ_λ⃗⟩⟨σ_μ⃗⟩⟨σ_ν⃗⟩ Π_q G[...].
fn metric_kernel() -> Vec<C64> {
    let a4 = metric_bilinear();
    let mut g = vec![cr(0.0); 256];
    for kap in 0..4 {
        for lam in 0..4 {
            for mu in 0..4 {
                for nu in 0..4 {
                    let mut acc = cr(0.0);
                    for a in 0..2_usize {
                        for b in 0..2_usize {
                            for cc in 0..2_usize {
                                for d in 0..2_usize {
                                    let abl = a4[a][b][cc][d];
                                    if abl.norm_sqr() == 0.0 {
                                        continue;
                                    }
                                    for e in 0..2_usize {
                                        for f in 0..2_usize {
                                            for gg in 0..2_usize {
                                                for h in 0..2_usize {
                                                    let rhs = a4[e][f][gg][h].conj();
                                                    if rhs.norm_sqr() == 0.0 {
                                                        continue;
                                                    }
                                                    acc += abl
                                                        * rhs
                                                        * pauli_entry(kap, a, e)
                                                        * pauli_entry(lam, b, f)
                                                        * pauli_entry(mu, cc, gg)
                                                        * pauli_entry(nu, d, h);
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                    g[((kap * 4 + lam) * 4 + mu) * 4 + nu] = acc;
                }
            }
        }
    }
    g
}

impl TranslatedComb {
    pub fn new(spec: CombSpec) -> Result<Self> {
        let n = spec.n_qubits();
        if n == 0 {
            return Err(Error::invalid("comb needs at least one qubit"));
        }
        let terms = match spec {
            CombSpec::PauliY { n_qubits } => {
                if n_qubits > 6 {
                    return Err(Error::capacity("σ_y comb translation limited to 6 qubits"));
                }
                let k2 = pauli_y_kernel();
                let mut per_qubit: Vec<(usize, usize, C64)> = Vec::new();
                for kap in 0..4 {
                    for lam in 0..4 {
                        if k2[kap][lam].norm() > 1e-14 {
                            per_qubit.push((kap, lam, k2[kap][lam]));
                        }
                    }
                }
                let norm = cr(1.0 / 4.0_f64.powi(n_qubits as i32));
                let mut terms = Vec::new();
                let mut stack = vec![0usize; n_qubits];
                build_terms_2(&per_qubit, n_qubits, 0, norm, &mut stack, &mut terms)?;
                terms
            }
            CombSpec::Metric { n_qubits } => {
                if n_qubits > 3 {
                    return Err(Error::capacity(
                        "metric comb translation limited to 3 qubits",
                    ));
                }
                let gk = metric_kernel();
                let mut per_qubit: Vec<([usize; 4], C64)> = Vec::new();
                for kap in 0..4 {
                    for lam in 0..4 {
                        for mu in 0..4 {
                            for nu in 0..4 {
                                let v = gk[((kap * 4 + lam) * 4 + mu) * 4 + nu];
                                if v.norm() > 1e-14 {
                                    per_qubit.push(([kap, lam, mu, nu], v));
                                }
                            }
                        }
                    }
                }
                let norm = cr(1.0 / 16.0_f64.powi(n_qubits as i32));
                let mut terms = Vec::new();
                let mut stack = vec![0usize; n_qubits];
                build_terms_4(&per_qubit, n_qubits, 0, norm, &mut stack, &mut terms)?;
                terms
            }
        };
        Ok(TranslatedComb { spec, terms })
    }

    pub fn spec(&self) -> CombSpec {
        self.spec
    }

    pub fn terms(&self) -> &[CombTerm] {
        &self.terms
    }

    /// Evaluate the polynomial in ordinary expectation values.
    pub fn evaluate(&self, state: &PureState) -> Result<f64> {
        if state.n_qubits() != self.spec.n_qubits() {
            return Err(Error::invalid("state size does not match comb"));
        }
        // Cache word expectations: many terms share words.
        let mut cache: std::collections::HashMap<Vec<u8>, f64> = std::collections::HashMap::new();
        let mut acc = cr(0.0);
        for term in &self.terms {
            let mut prod = term.coeff;
            for word in &term.words {
                let key: Vec<u8> = word.ops().iter().map(|p| p.index() as u8).collect();
                let v = match cache.get(&key) {
                    Some(&v) => v,
                    None => {
                        let v = state.pauli_expectation(word)?;
                        cache.insert(key, v);
                        v
                    }
                };
                prod *= cr(v);
            }
            acc += prod;
        }
        if acc.im.abs() > 1e-9 {
            return Err(Error::numerical(format!(
                "translated comb produced imaginary part {:.2e}",
                acc.im
            )));
        }
        Ok(acc.re)
    }

    /// The defining antilinear value |comb|², evaluated directly.
    pub fn direct(&self, state: &PureState) -> Result<f64> {
        if state.n_qubits() != self.spec.n_qubits() {
            return Err(Error::invalid("state size does not match comb"));
        }
        match self.spec {
            CombSpec::PauliY { n_qubits } => {
                let word = PauliWord::new(vec![Pauli::Y; n_qubits]);
                Ok(state.antilinear_expectation(&word)?.norm_sqr())
            }
            CombSpec::Metric { n_qubits } => {
                let t = AntilinearTensor::from_state(state)?;
                let total = 4usize.pow(n_qubits as u32);
                let mut acc = cr(0.0);
                let mut digits = vec![0usize; n_qubits];
                for idx in 0..total {
                    let mut rest = idx;
                    let mut g = 1.0;
                    for q in (0..n_qubits).rev() {
                        digits[q] = rest & 3;
                        rest >>= 2;
                        g *= COMB_METRIC[digits[q]];
                    }
                    if g == 0.0 {
                        continue;
                    }
                    let v = t.value(&digits);
                    acc += cr(g) * v * v;
                }
                Ok(acc.norm_sqr())
            }
        }
    }

    /// Evaluate both routes; they agree on every pure state.
    pub fn identity_check(&self, state: &PureState) -> Result<(f64, f64)> {
        Ok((self.direct(state)?, self.evaluate(state)?))
    }
}

fn build_terms_2(
    per_qubit: &[(usize, usize, C64)],
    n: usize,
    q: usize,
    coeff: C64,
    picks: &mut Vec<usize>,
    out: &mut Vec<CombTerm>,
) -> Result<()> {
    if q == n {
        let mut w1 = Vec::with_capacity(n);
        let mut w2 = Vec::with_capacity(n);
        for &t in picks.iter() {
            let (kap, lam, _) = per_qubit[t];
            w1.push(Pauli::from_index(kap)?);
            w2.push(Pauli::from_index(lam)?);
        }
        out.push(CombTerm {
            coeff,
            words: vec![PauliWord::new(w1), PauliWord::new(w2)],
        });
        return Ok(());
    }
    for (t, &(_, _, v)) in per_qubit.iter().enumerate() {
        picks[q] = t;
        build_terms_2(per_qubit, n, q + 1, coeff * v, picks, out)?;
    }
    Ok(())
}

fn build_terms_4(
    per_qubit: &[([usize; 4], C64)],
    n: usize,
    q: usize,
    coeff: C64,
    picks: &mut Vec<usize>,
    out: &mut Vec<CombTerm>,
) -> Result<()> {
    if q == n {
        if out.len() >= 4_000_000 {
            return Err(Error::capacity("metric comb translation too large"));
        }
        let mut words = vec![Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
        for &t in picks.iter() {
            let (idx, _) = per_qubit[t];
            for (slot, w) in words.iter_mut().enumerate() {
                w.push(Pauli::from_index(idx[slot])?);
            }
        }
        out.push(CombTerm {
            coeff,
            words: words.into_iter().map(PauliWord::new).collect(),
        });
        return Ok(());
    }
    for (t, &(_, v)) in per_qubit.iter().enumerate() {
        picks[q] = t;
        build_terms_4(per_qubit, n, q + 1, coeff * v, picks, out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::states;
    use approx::assert_abs_diff_eq;

    #[test]
    fn three_tangle_anchors() {
        assert_abs_diff_eq!(three_tangle(&states::ghz(3)).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            three_tangle(&states::w_state(3)).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn three_tangle_equals_monogamy_residual() {
        for seed in 0..12 {
            let psi = PureState::random(3, seed).unwrap();
            let t3 = three_tangle(&psi).unwrap();
            let res = ckw_residual(&psi, 0).unwrap();
            assert_abs_diff_eq!(t3, res, epsilon = 1e-8);
        }
    }

    #[test]
    fn monogamy_residual_nonnegative() {
        for n in 3..=5 {
            for seed in 0..10 {
                let psi = PureState::random(n, 1000 * n as u64 + seed).unwrap();
                for focus in 0..n {
                    assert!(ckw_residual(&psi, focus).unwrap() >= -1e-9);
                }
            }
        }
    }

    #[test]
    fn n_tangle_anchors() {
        assert_abs_diff_eq!(n_tangle(&states::ghz(4)).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            n_tangle(&states::cluster_phi4()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let bell2 = states::bell_phi_plus()
            .tensor(&states::bell_phi_plus())
            .unwrap();
        assert_abs_diff_eq!(n_tangle(&bell2).unwrap(), 1.0, epsilon = 1e-12);
        assert!(n_tangle(&states::ghz(3)).is_err());
    }

    #[test]
    fn filter_values_on_class_representatives() {
        let phi2 = states::ghz(4);
        let v = four_qubit_filters(&phi2).unwrap();
        assert_abs_diff_eq!(v.f1, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.f2, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.f3, 0.5, epsilon = 1e-9);

        let phi4 = states::cluster_phi4();
        let v = four_qubit_filters(&phi4).unwrap();
        assert_abs_diff_eq!(v.f1, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.f2, 1.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.f3, 1.0, epsilon = 1e-9);

        let phi5 = states::phi5();
        let v = four_qubit_filters(&phi5).unwrap();
        assert_abs_diff_eq!(v.f1, 8.0 / 9.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.f2, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(v.f3, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn filters_insensitive_to_global_phase() {
        let phi = states::cluster_phi4();
        let phase = C64::from_polar(1.0, 0.7331);
        let rotated = PureState::new(
            4,
            phi.amplitudes().iter().map(|z| z * phase).collect(),
        )
        .unwrap();
        let a = four_qubit_filters(&phi).unwrap();
        let b = four_qubit_filters(&rotated).unwrap();
        assert_abs_diff_eq!(a.f1, b.f1, epsilon = 1e-10);
        assert_abs_diff_eq!(a.f2, b.f2, epsilon = 1e-10);
        assert_abs_diff_eq!(a.f3, b.f3, epsilon = 1e-10);
    }

    #[test]
    fn geometric_measure_of_two_qubits_matches_schmidt() {
        let opts = GeometricOptions {
            restarts: 8,
            ..Default::default()
        };
        for seed in 0..8 {
            let psi = PureState::random(2, seed).unwrap();
            let sub = Subsystem::new([0], 2).unwrap();
            let coeffs = bipartite::schmidt_coefficients(&psi, &sub).unwrap();
            let expect = coeffs[0] * coeffs[0];
            let gm = geometric_measure(&psi, &opts).unwrap();
            assert_abs_diff_eq!(gm.max_overlap_sq, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn geometric_measure_anchors() {
        let opts = GeometricOptions::default();
        let ghz = states::ghz(3);
        let gm = geometric_measure(&ghz, &opts).unwrap();
        assert_abs_diff_eq!(gm.max_overlap_sq, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(gm.value, 1.0, epsilon = 1e-8);

        let w = states::w_state(3);
        let gm = geometric_measure(&w, &opts).unwrap();
        assert_abs_diff_eq!(gm.max_overlap_sq, 4.0 / 9.0, epsilon = 1e-7);
    }

    #[test]
    fn purity_distribution_anchors() {
        let ghz = states::ghz(5);
        let purities = bipartition_purities(&ghz).unwrap();
        assert_eq!(purities.len(), (1 << 4) - 1);
        for p in &purities {
            assert_abs_diff_eq!(p.purity, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(p.tangle, 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(global_entanglement(&ghz).unwrap(), 1.0, epsilon = 1e-12);

        let w = states::w_state(3);
        assert_abs_diff_eq!(
            global_entanglement(&w).unwrap(),
            8.0 / 9.0,
            epsilon = 1e-12
        );

        let product = PureState::basis_state(4, 5).unwrap();
        assert_abs_diff_eq!(global_entanglement(&product).unwrap(), 0.0, epsilon = 1e-12);
        for p in bipartition_purities(&product).unwrap() {
            assert_abs_diff_eq!(p.purity, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn roof_of_pure_state_is_the_pure_value() {
        let rho = states::bell_phi_plus().to_density().unwrap();
        let opts = RoofOptions {
            restarts: 4,
            iterations: 50,
            ..Default::default()
        };
        let roof = convex_roof(&rho, &bipartite::concurrence_pure, &opts).unwrap();
        assert_abs_diff_eq!(roof.value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn concurrence_roof_matches_closed_form() {
        // The optimized roof of the pure concurrence must land on the
        // Wootters value.
        let opts = RoofOptions::default();
        for seed in [2u64, 5, 9] {
            let psi = PureState::random(4, seed).unwrap();
            let sub = Subsystem::new([0, 1], 4).unwrap();
            let rho = psi.partial_trace(&sub).unwrap();
            let exact = bipartite::concurrence(&rho).unwrap();
            let roof = convex_roof(&rho, &bipartite::concurrence_pure, &opts).unwrap();
            assert_abs_diff_eq!(roof.value, exact, epsilon = 1e-4);
            // And the maximizing mode sits at or above it.
            let ceil_opts = RoofOptions {
                mode: RoofMode::Maximize,
                ..opts
            };
            let ceil = convex_roof(&rho, &bipartite::concurrence_pure, &ceil_opts).unwrap();
            assert!(ceil.value >= roof.value - 1e-9);
        }
    }

    #[test]
    fn werner_roof() {
        let opts = RoofOptions::default();
        for &(p, expect) in &[(0.2, 0.0), (0.8, 0.7)] {
            let rho = bipartite::werner_state(p).unwrap();
            let roof = convex_roof(&rho, &bipartite::concurrence_pure, &opts).unwrap();
            assert_abs_diff_eq!(roof.value, expect, epsilon = 2e-4);
        }
    }

    #[test]
    fn ghz_w_scan_endpoints() {
        let opts = RoofOptions {
            restarts: 12,
            iterations: 200,
            ..Default::default()
        };
        let points = ghz_w_scan(&[0.0, 1.0], &opts).unwrap();
        // p = 0 is the pure W state: no three-tangle, pairwise C = 2/3.
        assert!(points[0].tau3_roof < 1e-6);
        assert_abs_diff_eq!(points[0].pairwise_concurrence, 2.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(points[0].tau1, 8.0 / 9.0, epsilon = 1e-10);
        // p = 1 is the pure GHZ state: full three-tangle, no pairwise C.
        assert_abs_diff_eq!(points[1].tau3_roof, 1.0, epsilon = 1e-6);
        assert!(points[1].pairwise_concurrence < 1e-10);
        assert_abs_diff_eq!(points[1].tau1, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn localizable_entanglement_anchors() {
        let opts = LocalizableOptions::default();
        let ghz = states::ghz(3);
        let le = localizable_entanglement(&ghz, 0, 1, &opts).unwrap();
        assert_abs_diff_eq!(le, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(le_lower_bound(&ghz, 0, 1).unwrap(), 1.0, epsilon = 1e-12);

        // A Bell pair with a spectator qubit.
        let pair = states::bell_singlet()
            .tensor(&PureState::basis_state(1, 0).unwrap())
            .unwrap();
        let le = localizable_entanglement(&pair, 0, 1, &opts).unwrap();
        assert_abs_diff_eq!(le, 1.0, epsilon = 1e-6);

        let w = states::w_state(3);
        let le = localizable_entanglement(&w, 0, 1, &opts).unwrap();
        assert!(le >= 2.0 / 3.0 - 1e-6);
        assert!(le <= 1.0);

        let product = PureState::basis_state(3, 0).unwrap();
        let le = localizable_entanglement(&product, 0, 1, &opts).unwrap();
        assert!(le < 1e-8);
    }

    #[test]
    fn le_never_below_correlation_bound() {
        let opts = LocalizableOptions::default();
        for seed in 0..4 {
            let psi = PureState::random(4, 77 + seed).unwrap();
            let le = localizable_entanglement(&psi, 0, 3, &opts).unwrap();
            let bound = le_lower_bound(&psi, 0, 3).unwrap();
            assert!(
                le >= bound - 1e-6,
                "LE {le} fell below the correlation bound {bound}"
            );
        }
    }

    #[test]
    fn comb_translations_match_direct_values() {
        for n in 1..=2 {
            let y = TranslatedComb::new(CombSpec::PauliY { n_qubits: n }).unwrap();
            let m = TranslatedComb::new(CombSpec::Metric { n_qubits: n }).unwrap();
            for seed in 0..10 {
                let psi = PureState::random(n, 500 + seed).unwrap();
                let (d1, t1) = y.identity_check(&psi).unwrap();
                assert_abs_diff_eq!(d1, t1, epsilon = 1e-10);
                let (d2, t2) = m.identity_check(&psi).unwrap();
                assert_abs_diff_eq!(d2, t2, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn combs_vanish_on_single_qubits() {
        let y = TranslatedComb::new(CombSpec::PauliY { n_qubits: 1 }).unwrap();
        let m = TranslatedComb::new(CombSpec::Metric { n_qubits: 1 }).unwrap();
        for seed in 0..50 {
            let psi = PureState::random(1, seed).unwrap();
            assert!(y.direct(&psi).unwrap() < 1e-12);
            assert!(y.evaluate(&psi).unwrap().abs() < 1e-12);
            assert!(m.direct(&psi).unwrap() < 1e-12);
            assert!(m.evaluate(&psi).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn pauli_y_comb_equals_n_tangle() {
        let comb = TranslatedComb::new(CombSpec::PauliY { n_qubits: 2 }).unwrap();
        let bell = states::bell_phi_plus();
        assert_abs_diff_eq!(comb.direct(&bell).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(comb.evaluate(&bell).unwrap(), 1.0, epsilon = 1e-10);
    }
}
