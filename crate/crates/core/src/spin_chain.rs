//! Anisotropic XY / XYZ spin-1/2 rings in a transverse field.
//!
//! The Hamiltonian on N sites with periodic boundaries, spins S = σ/2:
//!
//!   H = J Σ_l [ (1+γ)/2 Sˣ_l Sˣ_{l+1} + (1−γ)/2 Sʸ_l Sʸ_{l+1}
//!               + Δ Sᶻ_l Sᶻ_{l+1} ] − h Σ_l Sᶻ_l
//!
//! γ interpolates between the XX chain (γ = 0) and the transverse Ising
//! chain (γ = 1); the dimensionless coupling is λ = J/(2h) with the quantum
//! critical point at λ = 1.
//!
//! H commutes with the spin-flip parity Π σᶻ, so diagonalization happens in
//! the two parity sectors of dimension 2^{N−1}. In a fixed sector, the bit
//! pattern of all sites but the last determines the last bit, so sector
//! vectors are indexed by b >> 1. Sectors are solved densely below
//! dimension 1025 and by Lanczos above.
//!
//! All matrix elements are real in the σᶻ product basis, so sector vectors
//! are real; the matrix-free `apply_sector` touches three couplings per
//! bond: exchange flips antiparallel neighbours with amplitude J/4,
//! the anisotropy flips parallel neighbours with amplitude Jγ/4, and the
//! diagonal collects JΔ/4 σᶻσᶻ and the field.
//!
//! For γ ∈ (0, 1) and small Δ the model has a factorizing field where the
//! ground level pair of the two parity sectors crosses exactly, at every
//! even N, and the two degenerate combinations are exact product states.
//! `locate_factorizing_field` finds the crossing by bisection; for Δ = 0
//! the closed form is h_f = (J/2)√(1−γ²).

use crate::bipartite;
use crate::error::{Error, Result};
use crate::linalg::{cr, lanczos_ground, real_symmetric_eigen, CVec, RMat, RVec};
use crate::state::{Pauli, PauliWord, PureState, Subsystem, DensityMatrix};

/// Spin-flip parity sector label: eigenvalue of Π σᶻ, equivalently the
/// number of down spins mod 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn bit(self) -> u32 {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }

    pub fn of_basis_state(b: usize) -> Parity {
        if (b.count_ones() & 1) == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Periodic XYZ ring in a transverse field.
#[derive(Debug, Clone)]
pub struct XyzChain {
    n: usize,
    j: f64,
    gamma: f64,
    delta: f64,
    h: f64,
}

const MAX_SITES: usize = 16;
const DENSE_SECTOR_LIMIT: usize = 1024;

impl XyzChain {
    pub fn new(n: usize, j: f64, gamma: f64, delta: f64, h: f64) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n) {
            return Err(Error::capacity(format!("2..={MAX_SITES} sites supported")));
        }
        for (name, v) in [("j", j), ("gamma", gamma), ("delta", delta), ("h", h)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        Ok(XyzChain { n, j, gamma, delta, h })
    }

    /// Transverse Ising ring at coupling λ = J/(2h), fixing J = 1.
    pub fn ising(n: usize, lambda: f64) -> Result<Self> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::invalid("lambda must be positive"));
        }
        XyzChain::new(n, 1.0, 1.0, 0.0, 1.0 / (2.0 * lambda))
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn coupling(&self) -> f64 {
        self.j
    }

    pub fn anisotropy(&self) -> f64 {
        self.gamma
    }

    pub fn zz_anisotropy(&self) -> f64 {
        self.delta
    }

    pub fn field(&self) -> f64 {
        self.h
    }

    /// Dimensionless coupling λ = J/(2h).
    pub fn lambda(&self) -> Result<f64> {
        if self.h == 0.0 {
            return Err(Error::invalid("lambda undefined at zero field"));
        }
        Ok(self.j / (2.0 * self.h))
    }

    /// Nearest-neighbour bonds (l, l+1 mod N); the two-site ring has a
    /// single bond, not a doubled one.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        if self.n == 2 {
            return vec![(0, 1)];
        }
        (0..self.n).map(|l| (l, (l + 1) % self.n)).collect()
    }

    pub fn sector_dim(&self) -> usize {
        1 << (self.n - 1)
    }

    /// Full basis index for a sector index: the last site's bit is fixed by
    /// parity.
    fn unpack(&self, idx: usize, parity: Parity) -> usize {
        let b = idx << 1;
        let t = (b.count_ones() ^ parity.bit()) & 1;
        b | t as usize
    }

    #[inline]
    fn spin(&self, b: usize, site: usize) -> f64 {
        // Site 0 occupies the most significant bit; bit 0 means spin up.
        if (b >> (self.n - 1 - site)) & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// y = H x within a parity sector.
    pub fn apply_sector(&self, parity: Parity, x: &RVec, y: &mut RVec) {
        let dim = self.sector_dim();
        assert_eq!(x.len(), dim);
        assert_eq!(y.len(), dim);
        y.fill(0.0);
        let bonds = self.bonds();
        let exchange = self.j / 4.0;
        let cross = self.j * self.gamma / 4.0;
        let zz = self.j * self.delta / 4.0;
        for idx in 0..dim {
            let xv = x[idx];
            if xv == 0.0 {
                // Dense vectors rarely hit this, but basis-vector probes do.
            }
            let b = self.unpack(idx, parity);
            let mut diag = 0.0;
            for site in 0..self.n {
                diag -= 0.5 * self.h * self.spin(b, site);
            }
            for &(l, lp) in &bonds {
                let sl = self.spin(b, l);
                let sp = self.spin(b, lp);
                diag += zz * sl * sp;
                let mask = (1usize << (self.n - 1 - l)) | (1usize << (self.n - 1 - lp));
                let b2 = b ^ mask;
                let coeff = if sl * sp < 0.0 { exchange } else { cross };
                if coeff != 0.0 {
                    y[b2 >> 1] += coeff * xv;
                }
            }
            y[idx] += diag * xv;
        }
    }

    /// Dense sector Hamiltonian (small sectors only).
    pub fn sector_matrix(&self, parity: Parity) -> Result<RMat> {
        let dim = self.sector_dim();
        if dim > 2 * DENSE_SECTOR_LIMIT {
            return Err(Error::capacity(format!(
                "dense sector matrix limited to dimension {}",
                2 * DENSE_SECTOR_LIMIT
            )));
        }
        let mut m = RMat::zeros(dim, dim);
        let mut x = RVec::zeros(dim);
        let mut y = RVec::zeros(dim);
        for col in 0..dim {
            x.fill(0.0);
            x[col] = 1.0;
            self.apply_sector(parity, &x, &mut y);
            m.set_column(col, &y);
        }
        Ok(m)
    }

    /// Ground energy and sector vector; dense diagonalization for small
    /// sectors, Lanczos above.
    pub fn sector_ground(&self, parity: Parity) -> Result<(f64, RVec)> {
        let dim = self.sector_dim();
        if dim <= DENSE_SECTOR_LIMIT {
            let m = self.sector_matrix(parity)?;
            let (vals, vecs) = real_symmetric_eigen(&m);
            Ok((vals[0], vecs.column(0).into_owned()))
        } else {
            lanczos_ground(
                dim,
                |x: &RVec, y: &mut RVec| self.apply_sector(parity, x, y),
                500,
                1e-12,
                17,
            )
        }
    }

    /// Complete spectrum and eigenbasis of one parity sector (dense).
    pub fn sector_eigen(&self, parity: Parity) -> Result<(Vec<f64>, RMat)> {
        let m = self.sector_matrix(parity)?;
        Ok(real_symmetric_eigen(&m))
    }

    /// Embed a real sector vector as a full ring state.
    pub fn full_state(&self, parity: Parity, sector: &RVec) -> Result<PureState> {
        let dim = self.sector_dim();
        if sector.len() != dim {
            return Err(Error::invalid("sector vector length mismatch"));
        }
        let mut amps = vec![cr(0.0); 1 << self.n];
        for idx in 0..dim {
            amps[self.unpack(idx, parity)] = cr(sector[idx]);
        }
        PureState::new(self.n, amps)
    }

    /// Embed a complex sector vector as a full ring state.
    pub fn embed_complex(&self, parity: Parity, sector: &CVec) -> Result<PureState> {
        let dim = self.sector_dim();
        if sector.len() != dim {
            return Err(Error::invalid("sector vector length mismatch"));
        }
        let mut amps = vec![cr(0.0); 1 << self.n];
        for idx in 0..dim {
            amps[self.unpack(idx, parity)] = sector[idx];
        }
        PureState::new(self.n, amps)
    }

    /// Project a full state onto a parity sector; errors when weight outside
    /// the sector exceeds 1e-10.
    pub fn project_complex(&self, parity: Parity, state: &PureState) -> Result<CVec> {
        if state.n_qubits() != self.n {
            return Err(Error::invalid("state size mismatch"));
        }
        let dim = self.sector_dim();
        let mut sector = CVec::zeros(dim);
        let mut outside = 0.0;
        for b in 0..(1usize << self.n) {
            let amp = state.amp(b);
            if Parity::of_basis_state(b) == parity {
                sector[b >> 1] = amp;
            } else {
                outside += amp.norm_sqr();
            }
        }
        if outside > 1e-10 {
            return Err(Error::validation(format!(
                "state carries weight {outside:.2e} outside the requested parity sector"
            )));
        }
        Ok(sector)
    }

    /// Ground data in both sectors plus the symmetric / broken combinations.
    pub fn ground_bundle(&self) -> Result<GroundBundle> {
        let (energy_even, ve) = self.sector_ground(Parity::Even)?;
        let (energy_odd, vo) = self.sector_ground(Parity::Odd)?;
        let even = self.full_state(Parity::Even, &ve)?;
        let mut odd = self.full_state(Parity::Odd, &vo)?;

        // Fix the relative sign through the transverse matrix element
        // ⟨even|σˣ_l|odd⟩. For J > 0 the x order is staggered, so the
        // staggered sum carries the signal; keep whichever of the uniform
        // and staggered sums is larger.
        let mut mx_uniform = 0.0;
        let mut mx_staggered = 0.0;
        for l in 0..self.n {
            let word = PauliWord::single(self.n, l, Pauli::X);
            let flipped = odd.apply_pauli(&word)?;
            let elem = even.inner(&flipped).re * 0.5;
            mx_uniform += elem;
            mx_staggered += if l % 2 == 0 { elem } else { -elem };
        }
        let mx = if mx_uniform.abs() >= mx_staggered.abs() {
            mx_uniform
        } else {
            mx_staggered
        };
        if mx < 0.0 {
            let negated: Vec<_> = odd.amplitudes().iter().map(|a| -a).collect();
            odd = PureState::new(self.n, negated)?;
        }

        let dim = 1usize << self.n;
        let s = cr(std::f64::consts::FRAC_1_SQRT_2);
        let mut plus = Vec::with_capacity(dim);
        let mut minus = Vec::with_capacity(dim);
        for b in 0..dim {
            plus.push((even.amp(b) + odd.amp(b)) * s);
            minus.push((even.amp(b) - odd.amp(b)) * s);
        }
        Ok(GroundBundle {
            energy_even,
            energy_odd,
            even,
            odd,
            symmetric: PureState::new(self.n, plus)?,
            antisymmetric: PureState::new(self.n, minus)?,
        })
    }

    /// Full-ring Hamiltonian assembled term by term from Pauli tensor
    /// products. Exponentially sized; it exists as an independent
    /// cross-check of the sector code and for small-ring spectroscopy.
    pub fn dense_hamiltonian(&self) -> Result<RMat> {
        if self.n > 10 {
            return Err(Error::capacity("dense ring Hamiltonian limited to 10 sites"));
        }
        let dim = 1usize << self.n;
        let jx = self.j * (1.0 + self.gamma) / 2.0;
        let jy = self.j * (1.0 - self.gamma) / 2.0;
        let jz = self.j * self.delta;
        let mut m = RMat::zeros(dim, dim);
        let mut add = |word: &PauliWord, scale: f64| -> Result<()> {
            let full = word.matrix();
            for i in 0..dim {
                for k in 0..dim {
                    m[(i, k)] += scale * full[(i, k)].re;
                }
            }
            Ok(())
        };
        for (l, lp) in self.bonds() {
            add(&PauliWord::two_site(self.n, l, Pauli::X, lp, Pauli::X), jx / 4.0)?;
            add(&PauliWord::two_site(self.n, l, Pauli::Y, lp, Pauli::Y), jy / 4.0)?;
            add(&PauliWord::two_site(self.n, l, Pauli::Z, lp, Pauli::Z), jz / 4.0)?;
        }
        for l in 0..self.n {
            add(&PauliWord::single(self.n, l, Pauli::Z), -self.h / 2.0)?;
        }
        Ok(m)
    }
}

/// Ground-state data of a ring: per-sector levels, the sign-fixed sector
/// states, and their equal-weight superpositions.
#[derive(Debug, Clone)]
pub struct GroundBundle {
    pub energy_even: f64,
    pub energy_odd: f64,
    pub even: PureState,
    pub odd: PureState,
    /// (even + odd)/√2; the relative sign is fixed so that the dominant
    /// transverse moment (uniform or staggered, whichever is larger) is
    /// positive.
    pub symmetric: PureState,
    /// (even − odd)/√2.
    pub antisymmetric: PureState,
}

impl GroundBundle {
    /// Two-site reduction of the equal-weight mixture of the sector ground
    /// states, the zero-temperature ensemble when the levels are degenerate.
    pub fn mixed_two_site(&self, q1: usize, q2: usize) -> Result<DensityMatrix> {
        mixed_two_site(&[(0.5, &self.even), (0.5, &self.odd)], q1, q2)
    }

    /// Mix the sector grounds with angle α: cos α |even⟩ + sin α |odd⟩.
    pub fn mixed_state(&self, alpha: f64) -> Result<PureState> {
        let n = self.even.n_qubits();
        let (ca, sa) = (cr(alpha.cos()), cr(alpha.sin()));
        let amps: Vec<_> = (0..1usize << n)
            .map(|b| ca * self.even.amp(b) + sa * self.odd.amp(b))
            .collect();
        PureState::new(n, amps)
    }

    /// Recover the two product ground states at an even/odd degeneracy.
    ///
    /// The sector grounds are the symmetric and antisymmetric combinations
    /// of two non-orthogonal product states, so the equal-weight mixtures
    /// miss factorization by the mutual overlap, which only dies off
    /// exponentially with N. Minimizing the summed single-site tangle over
    /// the mixing angle removes that correction; the minimizer and its
    /// mirror image are the two products.
    pub fn factorized_products(&self) -> Result<(PureState, PureState)> {
        let n = self.even.n_qubits();
        let tangle_sum = |alpha: f64| -> Result<f64> {
            let psi = self.mixed_state(alpha)?;
            let mut acc = 0.0;
            for site in 0..n {
                acc += bipartite::one_tangle_of_site(&psi, site)?;
            }
            Ok(acc)
        };
        // Golden-section search on (0, π/2); the objective has a single
        // interior minimum there.
        let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
        let mut lo = 1e-3;
        let mut hi = std::f64::consts::FRAC_PI_2 - 1e-3;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = tangle_sum(x1)?;
        let mut f2 = tangle_sum(x2)?;
        for _ in 0..80 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = tangle_sum(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = tangle_sum(x2)?;
            }
        }
        let alpha = 0.5 * (lo + hi);
        Ok((self.mixed_state(alpha)?, self.mixed_state(-alpha)?))
    }
}

/// Two-site reduced density matrix of a statistical mixture of pure states.
pub fn mixed_two_site(
    terms: &[(f64, &PureState)],
    q1: usize,
    q2: usize,
) -> Result<DensityMatrix> {
    if terms.is_empty() {
        return Err(Error::invalid("empty mixture"));
    }
    let weight: f64 = terms.iter().map(|(w, _)| w).sum();
    if (weight - 1.0).abs() > 1e-10 {
        return Err(Error::validation("mixture weights must sum to 1"));
    }
    let n = terms[0].1.n_qubits();
    let keep = Subsystem::new([q1, q2], n)?;
    let mut acc = nalgebra::DMatrix::zeros(4, 4);
    for (w, state) in terms {
        if state.n_qubits() != n {
            return Err(Error::invalid("mixture states differ in size"));
        }
        let rho = state.partial_trace(&keep)?;
        acc += rho.matrix() * cr(*w);
    }
    DensityMatrix::new(acc)
}

/// Pairwise concurrences of all site pairs of a ring state.
pub fn all_pairs_concurrence(state: &PureState) -> Result<Vec<(usize, usize, f64)>> {
    let n = state.n_qubits();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let rho = state.partial_trace(&Subsystem::new([i, j], n)?)?;
            out.push((i, j, bipartite::concurrence(&rho)?));
        }
    }
    Ok(out)
}

/// Nearest-neighbour concurrence of a ring state (site l with l+1 mod N).
pub fn neighbor_concurrence(state: &PureState, l: usize) -> Result<f64> {
    let n = state.n_qubits();
    let rho = state.partial_trace(&Subsystem::new([l, (l + 1) % n], n)?)?;
    bipartite::concurrence(&rho)
}

/// The mean-field product-state condition quoted for the XYZ chain with
/// coordination number z = 2: h = (z/2) J √((1+Δ)² − (γ/2)²).
pub fn factorizing_field_formula(j: f64, gamma: f64, delta: f64) -> f64 {
    j * ((1.0 + delta).powi(2) - (gamma / 2.0).powi(2)).sqrt()
}

/// Exact factorizing field of the transverse-field XY chain (Δ = 0):
/// h_f = (J/2)√(1−γ²).
pub fn xy_factorizing_field(j: f64, gamma: f64) -> f64 {
    (j / 2.0) * (1.0 - gamma * gamma).sqrt()
}

/// Locate the factorizing field as the outermost exact crossing of the even
/// and odd sector ground levels.
///
/// Finite rings show a sequence of parity crossings inside the ordered
/// phase; the states only factorize at the last one before the polarized
/// regime, so the scan keeps the sign change at the largest field and
/// bisects there.
pub fn locate_factorizing_field(
    n: usize,
    j: f64,
    gamma: f64,
    delta: f64,
    h_lo: f64,
    h_hi: f64,
) -> Result<f64> {
    // Negated form also rejects NaN bounds, which `h_lo >= h_hi` would admit.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(h_lo < h_hi) {
        return Err(Error::invalid("need h_lo < h_hi"));
    }
    let gap = |h: f64| -> Result<f64> {
        let chain = XyzChain::new(n, j, gamma, delta, h)?;
        let (ee, _) = chain.sector_ground(Parity::Even)?;
        let (eo, _) = chain.sector_ground(Parity::Odd)?;
        Ok(ee - eo)
    };
    // Scan downward from the top of the bracket; the first sign change met
    // is the outermost crossing.
    let samples = 48usize;
    let mut prev_h = h_hi;
    let mut prev_g = gap(prev_h)?;
    let mut bracket = None;
    for k in 1..=samples {
        let hq = h_hi - (h_hi - h_lo) * (k as f64) / (samples as f64);
        let g = gap(hq)?;
        if prev_g == 0.0 {
            return Ok(prev_h);
        }
        if prev_g.signum() != g.signum() {
            bracket = Some((hq, g, prev_h, prev_g));
            break;
        }
        prev_h = hq;
        prev_g = g;
    }
    let (mut lo, mut glo, mut hi, _) = bracket.ok_or_else(|| {
        Error::numerical("no parity crossing inside the bracket; widen the field range")
    })?;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-13 * mid.abs().max(1.0) {
            break;
        }
        let g = gap(mid)?;
        if g == 0.0 {
            return Ok(mid);
        }
        if g.signum() == glo.signum() {
            lo = mid;
            glo = g;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
