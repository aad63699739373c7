//! Entanglement in itinerant-fermion settings.
//!
//! Four applications. The ideal Fermi gas: the spin state of two fermions
//! picked at distance r is
//!
//!   ρ12 = (1/(4−2f²)) diag-block[1−f²; (1, −f²; −f², 1); 1−f²],
//!
//! with f(x) = d·J₁(x)/x at x = k_f·r, the ordinary Bessel J₁ in two
//! dimensions and the spherical j₁ in three. The state is entangled
//! exactly when f² ≥ 1/2, which confines spin entanglement to a finite
//! range d₀ found here by bisection.
//!
//! η-pairing: the states (η†)^N|0⟩ built from on-site pair creation
//! carry off-diagonal long-range order ⟨η†_j η_k⟩ = N(L−N)/(L(L−1)) but
//! only a vanishing rescaled two-site concurrence
//! C_R = 2𝒪(1 − √((N−1)(L−N−1)/(N(L−N)))) → 1/L. Both closed forms, and
//! for small rings the state is assembled mode by mode with exact
//! fermionic signs so its su(2) pair concurrence can be measured rather
//! than assumed.
//!
//! Extended Hubbard chain: number and spin conservation force the
//! single-site density matrix into the diagonal form
//! z|0⟩⟨0| + u⁺|↑⟩⟨↑| + u⁻|↓⟩⟨↓| + w|↑↓⟩⟨↑↓|, so the local entropy is a
//! function of four occupancies taken from a half-filling ground state
//! computed by sector diagonalization.
//!
//! Tight-binding chain: equivalent to the isotropic XX ring in a field,
//! with filling n mapped to h = (J/2)cos(πn); the nearest-neighbour
//! concurrence peaks at half filling and is symmetric around it.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bipartite;
use crate::dynamics::bessel_j;
use crate::error::{Error, Result};
use crate::free_fermion::FreeFermionChain;
use crate::linalg::{cr, real_symmetric_eigen, CMat};
use crate::state::{DensityMatrix, PureState, Subsystem};

// ---------------------------------------------------------------------------
// Ideal Fermi gas
// ---------------------------------------------------------------------------

/// Two-spin state of a fermion pair at distance r in a Fermi sea.
#[derive(Debug, Clone)]
pub struct FermiGasRdm {
    pub rho12: DensityMatrix,
    /// f = d·J₁(k_f r)/(k_f r), the exchange amplitude.
    pub f: f64,
    /// Whether ρ12 is entangled (f² ≥ 1/2).
    pub entangled: bool,
}

/// Exchange amplitude f(x) = d·J₁(x)/x with the ordinary J₁ for d = 2
/// and the spherical j₁ for d = 3. Both tend to 1 as x → 0.
pub fn fermi_gas_f(x: f64, d: u32) -> Result<f64> {
    if !(d == 2 || d == 3) {
        return Err(Error::invalid("space dimension must be 2 or 3"));
    }
    let x = x.abs();
    Ok(if d == 2 {
        if x < 1e-6 {
            1.0 - x * x / 8.0
        } else {
            2.0 * bessel_j(1, x) / x
        }
    } else if x < 0.1 {
        // 3 j₁(x)/x by series; the closed form cancels badly here.
        1.0 - x * x / 10.0 + x.powi(4) / 280.0 - x.powi(6) / 15120.0
    } else {
        3.0 * (x.sin() - x * x.cos()) / (x * x * x)
    })
}

/// Spin-reduced density matrix of two fermions at distance r in an ideal
/// Fermi gas with Fermi momentum k_f in d dimensions.
pub fn fermi_gas_two_spin_rdm(r: f64, kf: f64, d: u32) -> Result<FermiGasRdm> {
    if r < 0.0 {
        return Err(Error::invalid("distance must be nonnegative"));
    }
    if kf <= 0.0 {
        return Err(Error::invalid("Fermi momentum must be positive"));
    }
    let f = fermi_gas_f(kf * r, d)?;
    let f2 = f * f;
    let norm = 1.0 / (4.0 - 2.0 * f2);
    let mut m = CMat::zeros(4, 4);
    m[(0, 0)] = cr(1.0 - f2);
    m[(1, 1)] = cr(1.0);
    m[(2, 2)] = cr(1.0);
    m[(3, 3)] = cr(1.0 - f2);
    m[(1, 2)] = cr(-f2);
    m[(2, 1)] = cr(-f2);
    let rho12 = DensityMatrix::new(m * cr(norm))?;
    Ok(FermiGasRdm {
        rho12,
        f,
        entangled: f2 >= 0.5,
    })
}

/// Range of spin entanglement: the distance d₀ where f² first drops
/// through 1/2, found by bisection on (0, 2π/k_f) to 1e-10.
pub fn fermi_gas_entanglement_range(kf: f64, d: u32) -> Result<f64> {
    if kf <= 0.0 {
        return Err(Error::invalid("Fermi momentum must be positive"));
    }
    let g = |r: f64| -> Result<f64> { Ok(fermi_gas_f(kf * r, d)?.powi(2) - 0.5) };
    let r_hi = 2.0 * std::f64::consts::PI / kf;
    let steps = 4096;
    let mut lo = 1e-12 * r_hi;
    let mut glo = g(lo)?;
    let mut hi = lo;
    let mut found = false;
    for s in 1..=steps {
        hi = r_hi * s as f64 / steps as f64;
        let ghi = g(hi)?;
        if glo > 0.0 && ghi <= 0.0 {
            found = true;
            break;
        }
        lo = hi;
        glo = ghi;
    }
    if !found {
        return Err(Error::numerical("no entanglement boundary inside 2π/k_f"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-10 {
            break;
        }
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

// ---------------------------------------------------------------------------
// η-pairing
// ---------------------------------------------------------------------------

/// Off-diagonal long-range order and rescaled pair concurrence of the
/// state (η†)^N |0⟩ on L sites.
#[derive(Debug, Clone, Copy)]
pub struct EtaPairing {
    /// ⟨η†_j η_k⟩ = N(L−N)/(L(L−1)) for j ≠ k.
    pub o_eta: f64,
    /// C_R = 2𝒪(1 − √((N−1)(L−N−1)/(N(L−N)))).
    pub c_rescaled: f64,
}

/// Closed-form order parameter and rescaled concurrence.
pub fn eta_pairing(l: usize, n: usize) -> Result<EtaPairing> {
    if l < 2 || n == 0 || n >= l {
        return Err(Error::invalid("need 1 <= N <= L-1 pairs on L >= 2 sites"));
    }
    let (lf, nf) = (l as f64, n as f64);
    let o_eta = nf * (lf - nf) / (lf * (lf - 1.0));
    let ratio = (nf - 1.0) * (lf - nf - 1.0) / (nf * (lf - nf));
    let c_rescaled = 2.0 * o_eta * (1.0 - ratio.sqrt());
    Ok(EtaPairing { o_eta, c_rescaled })
}

/// Apply c†_mode to every term of a fermionic amplitude map, with the
/// canonical sign (−1)^(occupied modes below).
fn apply_creation(terms: &HashMap<u32, f64>, mode: u32) -> HashMap<u32, f64> {
    let bit = 1u32 << mode;
    let below = bit - 1;
    let mut out = HashMap::with_capacity(terms.len());
    for (&mask, &amp) in terms {
        if mask & bit != 0 {
            continue;
        }
        let sign = if (mask & below).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        *out.entry(mask | bit).or_insert(0.0) += sign * amp;
    }
    out
}

/// (η†)^N |0⟩ assembled in the 2L-mode Fock space (modes 2j = site-j up,
/// 2j+1 = site-j down), then mapped onto the pseudo-spin register where
/// qubit j is 1 for a doubly occupied site. Every site ends up empty or
/// paired, so the map is exact.
pub fn eta_pairing_state(l: usize, n: usize) -> Result<PureState> {
    if !(2..=6).contains(&l) {
        return Err(Error::capacity("explicit construction covers 2 <= L <= 6"));
    }
    if n == 0 || n >= l {
        return Err(Error::invalid("need 1 <= N <= L-1 pairs on L >= 2 sites"));
    }
    let mut terms: HashMap<u32, f64> = HashMap::from([(0u32, 1.0)]);
    for _ in 0..n {
        // η† = Σ_j c†_{j,down} c†_{j,up}.
        let mut next: HashMap<u32, f64> = HashMap::new();
        for j in 0..l as u32 {
            let up = apply_creation(&terms, 2 * j);
            let paired = apply_creation(&up, 2 * j + 1);
            for (mask, amp) in paired {
                *next.entry(mask).or_insert(0.0) += amp;
            }
        }
        terms = next;
    }
    let norm: f64 = terms.values().map(|a| a * a).sum::<f64>().sqrt();
    let mut amps = vec![cr(0.0); 1 << l];
    for (mask, amp) in &terms {
        let mut qubits = 0usize;
        for j in 0..l {
            let up = mask & (1 << (2 * j)) != 0;
            let dn = mask & (1 << (2 * j + 1)) != 0;
            if up != dn {
                return Err(Error::numerical("unpaired site in a pair-built state"));
            }
            if up {
                qubits |= 1 << (l - 1 - j);
            }
        }
        amps[qubits] = cr(amp / norm);
    }
    PureState::new(l, amps)
}

/// Pair concurrence of the explicit η-pairing state, measured on the
/// pseudo-spin register.
pub fn eta_pairing_concurrence_explicit(l: usize, n: usize) -> Result<f64> {
    let state = eta_pairing_state(l, n)?;
    let rho = state.partial_trace(&Subsystem::new([0, 1], l)?)?;
    bipartite::concurrence(&rho)
}

// ---------------------------------------------------------------------------
// Extended Hubbard chain
// ---------------------------------------------------------------------------

/// Occupancy weights of the single-site density matrix
/// z|0⟩⟨0| + u⁺|↑⟩⟨↑| + u⁻|↓⟩⟨↓| + w|↑↓⟩⟨↑↓|.
#[derive(Debug, Clone, Copy)]
pub struct LocalWeights {
    pub z: f64,
    pub u_plus: f64,
    pub u_minus: f64,
    pub w: f64,
}

/// Local entropy −Σ p log₂ p of the four-outcome site distribution.
pub fn hubbard_local_entropy(weights: &LocalWeights) -> Result<f64> {
    let ps = [weights.z, weights.u_plus, weights.u_minus, weights.w];
    if ps.iter().any(|&p| p < -1e-12) {
        return Err(Error::invalid("weights must be nonnegative"));
    }
    let sum: f64 = ps.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("weights must sum to one"));
    }
    let clamped: Vec<f64> = ps.iter().map(|&p| p.max(0.0)).collect();
    Ok(bipartite::shannon_entropy(&clamped))
}

/// Periodic extended Hubbard ring: hopping t, on-site U, and
/// nearest-neighbour density coupling V.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedHubbard {
    pub l: usize,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Result of a half-filling ground-state solve.
#[derive(Debug, Clone, Copy)]
pub struct HubbardGround {
    pub energy: f64,
    pub weights: LocalWeights,
    pub entropy: f64,
}

impl ExtendedHubbard {
    pub fn new(l: usize, t: f64, u: f64, v: f64) -> Result<Self> {
        if !(2..=6).contains(&l) {
            return Err(Error::capacity("sector solve covers 2 <= L <= 6"));
        }
        if !l.is_multiple_of(2) {
            return Err(Error::invalid("half filling needs an even ring"));
        }
        Ok(ExtendedHubbard { l, t, u, v })
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        if self.l == 2 {
            vec![(0, 1)]
        } else {
            (0..self.l).map(|a| (a, (a + 1) % self.l)).collect()
        }
    }

    /// Ground state of the N↑ = N↓ = L/2 sector and the site occupancy
    /// weights it induces (averaged over sites; the state is
    /// translation symmetric).
    pub fn half_filling_ground(&self) -> Result<HubbardGround> {
        let l = self.l;
        let half = l / 2;
        // Basis: masks over 2L modes (2j = up at site j, 2j+1 = down)
        // with L/2 particles of each spin.
        let mut basis = Vec::new();
        let mut index = HashMap::new();
        for mask in 0u32..(1 << (2 * l)) {
            let up = (mask & 0x5555_5555).count_ones() as usize;
            let dn = (mask & 0xAAAA_AAAA).count_ones() as usize;
            if up == half && dn == half {
                index.insert(mask, basis.len());
                basis.push(mask);
            }
        }
        let dim = basis.len();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (row, &mask) in basis.iter().enumerate() {
            // Diagonal: U doublons + V neighbour densities.
            let mut diag = 0.0;
            for j in 0..l {
                let up = mask & (1 << (2 * j)) != 0;
                let dn = mask & (1 << (2 * j + 1)) != 0;
                if up && dn {
                    diag += self.u;
                }
            }
            for &(a, b) in &self.bonds() {
                let na = site_density(mask, a);
                let nb = site_density(mask, b);
                diag += self.v * na * nb;
            }
            h[(row, row)] = diag;
            // Hopping with canonical fermionic signs.
            for &(a, b) in &self.bonds() {
                for spin in 0..2u32 {
                    let ma = 2 * a as u32 + spin;
                    let mb = 2 * b as u32 + spin;
                    for (from, to) in [(ma, mb), (mb, ma)] {
                        if mask & (1 << from) != 0 && mask & (1 << to) == 0 {
                            let (new_mask, sign) = hop(mask, from, to);
                            let col = index[&new_mask];
                            h[(col, row)] += -self.t * sign;
                        }
                    }
                }
            }
        }
        let (vals, vecs) = real_symmetric_eigen(&h);
        let ground = vecs.column(0);
        let mut z = 0.0;
        let mut u_plus = 0.0;
        let mut u_minus = 0.0;
        let mut w = 0.0;
        for (row, &mask) in basis.iter().enumerate() {
            let p = ground[row] * ground[row];
            for j in 0..l {
                let up = mask & (1 << (2 * j)) != 0;
                let dn = mask & (1 << (2 * j + 1)) != 0;
                match (up, dn) {
                    (false, false) => z += p,
                    (true, false) => u_plus += p,
                    (false, true) => u_minus += p,
                    (true, true) => w += p,
                }
            }
        }
        let lf = l as f64;
        let weights = LocalWeights {
            z: z / lf,
            u_plus: u_plus / lf,
            u_minus: u_minus / lf,
            w: w / lf,
        };
        Ok(HubbardGround {
            energy: vals[0],
            weights,
            entropy: hubbard_local_entropy(&weights)?,
        })
    }
}

fn site_density(mask: u32, site: usize) -> f64 {
    let up = (mask >> (2 * site)) & 1;
    let dn = (mask >> (2 * site + 1)) & 1;
    (up + dn) as f64
}

/// c†_to c_from on a Fock mask, with the canonical ordering sign.
fn hop(mask: u32, from: u32, to: u32) -> (u32, f64) {
    let mut sign = 1.0;
    if (mask & ((1 << from) - 1)).count_ones() % 2 == 1 {
        sign = -sign;
    }
    let cleared = mask & !(1 << from);
    if (cleared & ((1 << to) - 1)).count_ones() % 2 == 1 {
        sign = -sign;
    }
    (cleared | (1 << to), sign)
}

/// One point of the local-entropy surface.
#[derive(Debug, Clone, Copy)]
pub struct HubbardScanPoint {
    pub u: f64,
    pub v: f64,
    pub entropy: f64,
}

/// Local-entropy surface over a (U, V) grid at half filling.
pub fn extended_hubbard_scan(
    l: usize,
    t: f64,
    us: &[f64],
    vs: &[f64],
) -> Result<Vec<HubbardScanPoint>> {
    let grid: Vec<(f64, f64)> = us
        .iter()
        .flat_map(|&u| vs.iter().map(move |&v| (u, v)))
        .collect();
    grid.par_iter()
        .map(|&(u, v)| {
            let ground = ExtendedHubbard::new(l, t, u, v)?.half_filling_ground()?;
            Ok(HubbardScanPoint {
                u,
                v,
                entropy: ground.entropy,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tight-binding chain at varying filling
// ---------------------------------------------------------------------------

/// Nearest-neighbour ground-state concurrence of the tight-binding ring,
/// computed through its XX-ring equivalent with the field tuned to the
/// filling: h = (J/2) cos(πn).
pub fn tight_binding_concurrence(n_sites: usize, filling: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&filling) {
        return Err(Error::invalid("filling must lie in [0, 1]"));
    }
    let h = 0.5 * (std::f64::consts::PI * filling).cos();
    let chain = FreeFermionChain::new(n_sites, 1.0, 0.0, h)?;
    let g = chain.ring_correlators(1)?;
    Ok(bipartite::concurrence_from_correlators(&g))
}

/// Table of (filling, nearest-neighbour concurrence).
pub fn tight_binding_halffilling_check(
    n_sites: usize,
    fillings: &[f64],
) -> Result<Vec<(f64, f64)>> {
    fillings
        .iter()
        .map(|&n| Ok((n, tight_binding_concurrence(n_sites, n)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exchange_amplitude_small_distance_limit() {
        for d in [2, 3] {
            assert_abs_diff_eq!(fermi_gas_f(1e-9, d).unwrap(), 1.0, epsilon = 1e-12);
            let rdm = fermi_gas_two_spin_rdm(1e-12, 2.0, d).unwrap();
            assert!(rdm.entangled);
            // Maximal singlet weight: ρ approaches the singlet projector.
            let m = rdm.rho12.matrix();
            assert_abs_diff_eq!(m[(1, 1)].re, 0.5, epsilon = 1e-9);
            assert_abs_diff_eq!(m[(1, 2)].re, -0.5, epsilon = 1e-9);
            assert!(m[(0, 0)].re < 1e-9);
        }
        assert!(fermi_gas_f(1.0, 4).is_err());
    }

    #[test]
    fn spherical_branch_matches_series() {
        // The two evaluation branches must agree where both are accurate:
        // just above the switch point the closed form is still fine, so
        // compare it against the series evaluated at the same x.
        for x in [0.100001f64, 0.12, 0.2] {
            let series = 1.0 - x * x / 10.0 + x.powi(4) / 280.0 - x.powi(6) / 15120.0
                + x.powi(8) / 1330560.0;
            let closed = fermi_gas_f(x, 3).unwrap();
            assert!(
                (series - closed).abs() < 1e-11,
                "x = {x}: {series} vs {closed}"
            );
        }
        // d = 2: the Bessel route just above its own tiny switch point.
        let x = 2e-6;
        let series2 = 1.0 - x * x / 8.0;
        assert!((fermi_gas_f(x, 2).unwrap() - series2).abs() < 1e-12);
    }

    #[test]
    fn ppt_agrees_with_threshold_on_a_grid() {
        let kf = 1.7;
        let part = Subsystem::new([0], 2).unwrap();
        for d in [2u32, 3] {
            let d0 = fermi_gas_entanglement_range(kf, d).unwrap();
            for step in 1..=60 {
                let r = 1.2 * std::f64::consts::PI / kf * step as f64 / 60.0;
                if (r - d0).abs() < 1e-3 {
                    continue;
                }
                let rdm = fermi_gas_two_spin_rdm(r, kf, d).unwrap();
                let neg = bipartite::negativity(&rdm.rho12, &part).unwrap();
                assert_eq!(
                    rdm.entangled,
                    neg.negativity > 1e-12,
                    "d={d} r={r}: f^2={}, negativity={}",
                    rdm.f * rdm.f,
                    neg.negativity
                );
            }
        }
    }

    #[test]
    fn entanglement_range_sits_at_the_threshold() {
        for (d, lo, hi) in [(2u32, 0.45, 0.57), (3u32, 0.52, 0.62)] {
            let kf = 0.9;
            let d0 = fermi_gas_entanglement_range(kf, d).unwrap();
            let f = fermi_gas_f(kf * d0, d).unwrap();
            assert_abs_diff_eq!(f * f, 0.5, epsilon = 1e-8);
            let scaled = d0 * kf / std::f64::consts::PI;
            assert!(
                scaled > lo && scaled < hi,
                "d={d}: d0 kf/pi = {scaled:.4}"
            );
            // Scale invariance in kf.
            let d0_other = fermi_gas_entanglement_range(2.3, d).unwrap();
            assert_abs_diff_eq!(d0 * kf, d0_other * 2.3, epsilon = 1e-7);
        }
    }

    #[test]
    fn eta_pairing_closed_forms() {
        let e = eta_pairing(2, 1).unwrap();
        assert_abs_diff_eq!(e.o_eta, 0.5, epsilon = 1e-15);
        // Thermodynamic limit at half filling: O → n(1−n) = 1/4.
        let big = eta_pairing(4000, 2000).unwrap();
        assert_abs_diff_eq!(big.o_eta, 0.25, epsilon = 1e-3);
        // C_R · L → 1 along n = 1/2.
        let mut prev_gap = f64::INFINITY;
        for l in [10usize, 100, 1000] {
            let cr_l = eta_pairing(l, l / 2).unwrap().c_rescaled * l as f64;
            let gap = (cr_l - 1.0).abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        assert!(prev_gap < 2e-3);
        assert!(eta_pairing(4, 0).is_err());
        assert!(eta_pairing(4, 4).is_err());
    }

    #[test]
    fn explicit_state_matches_rescaled_concurrence() {
        // C_R = 2O(1−√…) is exactly the pair concurrence of the explicit
        // state, measured through partial trace and spin concurrence.
        for l in 2..=6usize {
            for n in 1..l {
                let measured = eta_pairing_concurrence_explicit(l, n).unwrap();
                let closed = eta_pairing(l, n).unwrap().c_rescaled;
                assert_abs_diff_eq!(measured, closed, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eta_state_is_symmetric_with_uniform_amplitudes() {
        let state = eta_pairing_state(5, 2).unwrap();
        let expect = 1.0 / 10.0f64.sqrt();
        let mut support = 0;
        for b in 0..(1usize << 5) {
            let a = state.amp(b);
            if b.count_ones() == 2 {
                support += 1;
                assert_abs_diff_eq!(a.norm(), expect, epsilon = 1e-12);
            } else {
                assert!(a.norm() < 1e-15);
            }
        }
        assert_eq!(support, 10);
    }

    #[test]
    fn local_entropy_reference_points() {
        let uniform = LocalWeights {
            z: 0.25,
            u_plus: 0.25,
            u_minus: 0.25,
            w: 0.25,
        };
        assert_abs_diff_eq!(hubbard_local_entropy(&uniform).unwrap(), 2.0, epsilon = 1e-12);
        let mott = LocalWeights {
            z: 0.0,
            u_plus: 0.5,
            u_minus: 0.5,
            w: 0.0,
        };
        assert_abs_diff_eq!(hubbard_local_entropy(&mott).unwrap(), 1.0, epsilon = 1e-12);
        let bad = LocalWeights {
            z: 0.5,
            u_plus: 0.5,
            u_minus: 0.5,
            w: 0.0,
        };
        assert!(hubbard_local_entropy(&bad).is_err());
    }

    #[test]
    fn hubbard_dimer_closed_form() {
        // Two sites, U = 3, t = 1: the half-filling ground state mixes the
        // doublon pair with the singlet through the 2x2 block
        // [[U, -2t], [-2t, 0]]; E0 = U/2 − √(U²/4 + 4t²) = −1, doublon
        // weight 1/5 → z = w = 1/10, u± = 2/5.
        let ground = ExtendedHubbard::new(2, 1.0, 3.0, 0.0)
            .unwrap()
            .half_filling_ground()
            .unwrap();
        assert_abs_diff_eq!(ground.energy, -1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ground.weights.z, 0.1, epsilon = 1e-10);
        assert_abs_diff_eq!(ground.weights.w, 0.1, epsilon = 1e-10);
        assert_abs_diff_eq!(ground.weights.u_plus, 0.4, epsilon = 1e-10);
        assert_abs_diff_eq!(ground.weights.u_minus, 0.4, epsilon = 1e-10);
    }

    #[test]
    fn large_u_ring_approaches_one_bit() {
        let ground = ExtendedHubbard::new(4, 1.0, 50.0, 0.0)
            .unwrap()
            .half_filling_ground()
            .unwrap();
        assert!(ground.weights.z < 0.01);
        assert!(ground.weights.w < 0.01);
        assert!((ground.weights.u_plus - 0.5).abs() < 0.01);
        assert!((ground.entropy - 1.0).abs() < 0.1);
    }

    #[test]
    fn entropy_crest_sits_near_the_crossover() {
        let us = [-8.0, -4.0, -2.0, 0.0, 2.0, 4.0, 8.0];
        let scan = extended_hubbard_scan(6, 1.0, &us, &[0.0]).unwrap();
        let entropies: Vec<f64> = scan.iter().map(|p| p.entropy).collect();
        let argmax = entropies
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        // Crest in the crossover region, falling off into both insulators.
        assert!((2..=4).contains(&argmax), "crest at U = {}", us[argmax]);
        assert!(entropies[0] < entropies[2]);
        assert!(entropies[2] < entropies[3]);
        assert!(entropies[6] < entropies[4]);
        assert!(entropies[4] < entropies[3] + 1e-12);
    }

    #[test]
    fn tight_binding_concurrence_peaks_at_half_filling() {
        let n = 256;
        let fillings: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let table = tight_binding_halffilling_check(n, &fillings).unwrap();
        // Band edges are separable.
        assert!(table[0].1 < 1e-8);
        assert!(table[10].1 < 1e-8);
        // Particle-hole symmetry.
        for k in 0..=10 {
            assert_abs_diff_eq!(table[k].1, table[10 - k].1, epsilon = 1e-8);
        }
        // Maximum at n = 1/2.
        let best = table
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_abs_diff_eq!(best.0, 0.5, epsilon = 1e-12);
        assert!(best.1 > 0.1);
    }

    #[test]
    fn filling_map_reproduces_fermion_density() {
        // h = (J/2) cos(πn) should put the JW-fermion density at n; the
        // chain reports ⟨σᶻ⟩, and occupied sites carry σᶻ = −1.
        for filling in [0.2, 0.35, 0.5, 0.7] {
            let h = 0.5 * (std::f64::consts::PI * filling).cos();
            let chain = FreeFermionChain::new(512, 1.0, 0.0, h).unwrap();
            let sz = chain.transverse_magnetization();
            let density = 0.5 * (1.0 - sz);
            assert!(
                (density - filling).abs() < 0.01,
                "filling {filling}: density {density}"
            );
        }
    }
}
