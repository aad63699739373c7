//! The XY ring as free fermions, for chains far beyond exact
//! diagonalization.
//!
//! The Jordan-Wigner transformation (occupied mode = down spin) turns the
//! Δ = 0 ring into the quadratic form
//!
//!   H = Σ_ij A_ij c†_i c_j + ½ Σ_ij (B_ij c†_i c†_j + h.c.) − hN/2,
//!
//! with A symmetric (A_ll = h, A_{l,l±1} = J/4) and B antisymmetric
//! (B_{l,l+1} = Jγ/4). The string attached to the wrap bond multiplies it
//! by −Π, so on the even spin-parity sector the fermions are antiperiodic
//! and on the odd sector periodic.
//!
//! Diagonalization runs through the singular value decomposition
//! A + B = Ψ Λ Φᵀ: the Λ_k are the mode energies and the ground energy of
//! the even sector is −½ Σ Λ_k. Every ground-state observable reduces to
//! the contraction matrix G_ij = ⟨B_i A_j⟩ = −(ΨΦᵀ)_ij of the Majorana
//! pairs A_i = c†_i + c_i, B_i = c†_i − c_i.
//!
//! Because the ring is translation invariant, G is also available as a
//! momentum sum: with a(k) = h + (J/2)cos k and b(k) = (γJ/2)sin k over
//! antiperiodic momenta k = (2m+1)π/N,
//!
//!   G_{l,l+d} = −(1/N) Σ_k Re[(a + ib) e^{−ikd}] / Λ(k),
//!
//! an O(N) evaluation per distance that carries the concurrence scaling
//! study to rings of several hundred sites.
//!
//! Spin-spin correlators are Wick contractions of ordered Majorana
//! strings, so each one is a Pfaffian:
//!
//!   ⟨σˣ_l σˣ_{l+r}⟩ = ⟨B_l A_{l+1} B_{l+1} ⋯ A_{l+r}⟩,
//!   ⟨σʸ_l σʸ_{l+r}⟩ = −⟨A_l A_{l+1} B_{l+1} ⋯ B_{l+r}⟩,
//!   ⟨σᶻ_l⟩ = −G_ll,
//!
//! with pair contractions ⟨A_i A_j⟩ = δ_ij, ⟨B_i B_j⟩ = −δ_ij,
//! ⟨B_i A_j⟩ = G_ij, ⟨A_i B_j⟩ = −G_ji.

use crate::bipartite::{concurrence_from_correlators, TwoSiteCorrelators};
use crate::error::{Error, Result};
use crate::fermions::pfaffian;
use crate::linalg::{cr, CMat, RMat};

/// Fermionic boundary condition, fixed by the spin parity sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Even spin parity: antiperiodic fermions.
    Antiperiodic,
    /// Odd spin parity: periodic fermions.
    Periodic,
}

const MAX_MATRIX_SITES: usize = 2048;
const MAX_RING_SITES: usize = 1 << 20;

/// Transverse-field XY ring treated through its fermionic quadratic form.
#[derive(Debug, Clone)]
pub struct FreeFermionChain {
    n: usize,
    j: f64,
    gamma: f64,
    h: f64,
}

impl FreeFermionChain {
    pub fn new(n: usize, j: f64, gamma: f64, h: f64) -> Result<Self> {
        if !(2..=MAX_RING_SITES).contains(&n) {
            return Err(Error::capacity(format!("2..={MAX_RING_SITES} sites supported")));
        }
        for (name, v) in [("j", j), ("gamma", gamma), ("h", h)] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        Ok(FreeFermionChain { n, j, gamma, h })
    }

    /// Transverse Ising ring at λ = J/(2h) with J = 1.
    pub fn ising(n: usize, lambda: f64) -> Result<Self> {
        if lambda <= 0.0 || !lambda.is_finite() {
            return Err(Error::invalid("lambda must be positive"));
        }
        FreeFermionChain::new(n, 1.0, 1.0, 1.0 / (2.0 * lambda))
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    /// The A (symmetric) and B (antisymmetric) blocks of the quadratic
    /// form, with the boundary sign on the wrap bond.
    pub fn quadratic_matrices(&self, boundary: Boundary) -> Result<(RMat, RMat)> {
        let n = self.n;
        if n > MAX_MATRIX_SITES {
            return Err(Error::capacity(format!(
                "dense quadratic form limited to {MAX_MATRIX_SITES} sites; use the momentum route"
            )));
        }
        let mut a = RMat::zeros(n, n);
        let mut b = RMat::zeros(n, n);
        let hop = self.j / 4.0;
        let pair = self.j * self.gamma / 4.0;
        for l in 0..n {
            a[(l, l)] = self.h;
        }
        let bonds: Vec<(usize, usize, f64)> = if n == 2 {
            vec![(0, 1, 1.0)]
        } else {
            (0..n)
                .map(|l| {
                    let lp = (l + 1) % n;
                    let sign = if lp == 0 {
                        // Wrap bond carries −Π: −1 on the even (antiperiodic)
                        // sector, +1 on the odd.
                        match boundary {
                            Boundary::Antiperiodic => -1.0,
                            Boundary::Periodic => 1.0,
                        }
                    } else {
                        1.0
                    };
                    (l, lp, sign)
                })
                .collect()
        };
        for (l, lp, sign) in bonds {
            a[(l, lp)] += sign * hop;
            a[(lp, l)] += sign * hop;
            b[(l, lp)] += sign * pair;
            b[(lp, l)] -= sign * pair;
        }
        Ok((a, b))
    }

    /// Mode energies and transformation of one boundary sector via the SVD
    /// of A + B.
    pub fn modes(&self, boundary: Boundary) -> Result<FermionModes> {
        let (a, b) = self.quadratic_matrices(boundary)?;
        let m = &a + &b;
        let svd = m.clone().svd(true, true);
        let u = svd
            .u
            .ok_or_else(|| Error::numerical("SVD did not return left vectors"))?;
        let vt = svd
            .v_t
            .ok_or_else(|| Error::numerical("SVD did not return right vectors"))?;
        // Ascending energies.
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&p, &q| {
            svd.singular_values[p]
                .partial_cmp(&svd.singular_values[q])
                .unwrap()
        });
        let lambdas: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
        let mut psi = RMat::zeros(self.n, self.n);
        let mut phi = RMat::zeros(self.n, self.n);
        for (col, &k) in order.iter().enumerate() {
            psi.set_column(col, &u.column(k));
            phi.set_column(col, &vt.row(k).transpose());
        }
        let spin_ground_energy = -0.5 * lambdas.iter().sum::<f64>();
        Ok(FermionModes {
            lambdas,
            psi,
            phi,
            spin_ground_energy,
        })
    }

    /// Majorana contraction matrix G_ij = ⟨B_i A_j⟩ = −(Ψ Φᵀ)_ij of the
    /// Bogoliubov vacuum.
    pub fn g_matrix(&self, boundary: Boundary) -> Result<RMat> {
        let modes = self.modes(boundary)?;
        Ok(-(&modes.psi * modes.phi.transpose()))
    }

    fn dispersion(&self, k: f64) -> (f64, f64, f64) {
        let a = self.h + 0.5 * self.j * k.cos();
        let b = 0.5 * self.j * self.gamma * k.sin();
        (a, b, (a * a + b * b).sqrt())
    }

    /// G_{l,l+d} on the even (antiperiodic) sector via the momentum sum;
    /// O(N) per distance and valid for any ring size.
    pub fn g_ring(&self, d: i64) -> f64 {
        let n = self.n as f64;
        let mut acc = 0.0;
        for m in 0..self.n {
            let k = std::f64::consts::PI * (2.0 * m as f64 + 1.0) / n;
            let (a, b, lam) = self.dispersion(k);
            if lam == 0.0 {
                continue;
            }
            let phase = -k * d as f64;
            acc += (a * phase.cos() - b * phase.sin()) / lam;
        }
        -acc / n
    }

    /// Even-sector ground energy from the dispersion, −½ Σ_k Λ(k).
    pub fn even_ground_energy(&self) -> f64 {
        let n = self.n as f64;
        let mut acc = 0.0;
        for m in 0..self.n {
            let k = std::f64::consts::PI * (2.0 * m as f64 + 1.0) / n;
            acc += self.dispersion(k).2;
        }
        -0.5 * acc
    }

    /// ⟨σᶻ⟩ on the even-sector ground state.
    pub fn transverse_magnetization(&self) -> f64 {
        -self.g_ring(0)
    }

    /// Spin correlators of sites (0, r) on the even-sector ground state,
    /// packaged for the two-site concurrence machinery. Spins are S = σ/2.
    pub fn ring_correlators(&self, r: usize) -> Result<TwoSiteCorrelators> {
        if r == 0 || r >= self.n {
            return Err(Error::invalid("separation must satisfy 1 <= r < N"));
        }
        let g = |i: usize, j: usize| self.g_ring(j as i64 - i as i64);
        let xx = xx_correlator(&g, 0, r)?;
        let yy = yy_correlator(&g, 0, r)?;
        let zz = zz_correlator(&g, 0, r)?;
        let sz = -self.g_ring(0);
        Ok(TwoSiteCorrelators {
            gxx: xx / 4.0,
            gyy: yy / 4.0,
            gzz: zz / 4.0,
            mz: sz / 2.0,
        })
    }

    /// Concurrence between sites at separations 1..=r_max on the
    /// even-sector ground state.
    pub fn concurrence_profile(&self, r_max: usize) -> Result<Vec<f64>> {
        (1..=r_max)
            .map(|r| Ok(concurrence_from_correlators(&self.ring_correlators(r)?)))
            .collect()
    }
}

/// Mode data of one boundary sector: energies ascending, the Ψ and Φ
/// orthogonal transformations (columns are modes), and the spin-chain
/// ground energy of the corresponding vacuum.
#[derive(Debug, Clone)]
pub struct FermionModes {
    pub lambdas: Vec<f64>,
    pub psi: RMat,
    pub phi: RMat,
    pub spin_ground_energy: f64,
}

impl FermionModes {
    /// Fermion parity of the Bogoliubov vacuum: +1 lives in the even spin
    /// sector, −1 in the odd.
    pub fn vacuum_parity(&self) -> f64 {
        let det = (&self.psi * self.phi.transpose()).determinant();
        if det >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Majorana {
    A(usize),
    B(usize),
}

/// Vacuum expectation of an ordered Majorana string by Wick's theorem: the
/// Pfaffian of the pair-contraction matrix.
fn wick_pfaffian(ops: &[Majorana], g: &impl Fn(usize, usize) -> f64) -> Result<f64> {
    let m = ops.len();
    if !m.is_multiple_of(2) {
        return Ok(0.0);
    }
    let contract = |p: Majorana, q: Majorana| -> f64 {
        match (p, q) {
            (Majorana::A(i), Majorana::A(j)) => {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }
            (Majorana::B(i), Majorana::B(j)) => {
                if i == j {
                    -1.0
                } else {
                    0.0
                }
            }
            (Majorana::B(i), Majorana::A(j)) => g(i, j),
            (Majorana::A(i), Majorana::B(j)) => -g(j, i),
        }
    };
    let mut s = CMat::zeros(m, m);
    for p in 0..m {
        for q in p + 1..m {
            let v = contract(ops[p], ops[q]);
            s[(p, q)] = cr(v);
            s[(q, p)] = cr(-v);
        }
    }
    Ok(pfaffian(&s)?.re)
}

/// ⟨σˣ_l σˣ_{l+r}⟩ from the contraction matrix.
pub fn xx_correlator(g: &impl Fn(usize, usize) -> f64, l: usize, r: usize) -> Result<f64> {
    let mut ops = Vec::with_capacity(2 * r);
    ops.push(Majorana::B(l));
    for m in l + 1..l + r {
        ops.push(Majorana::A(m));
        ops.push(Majorana::B(m));
    }
    ops.push(Majorana::A(l + r));
    wick_pfaffian(&ops, g)
}

/// ⟨σʸ_l σʸ_{l+r}⟩ from the contraction matrix.
pub fn yy_correlator(g: &impl Fn(usize, usize) -> f64, l: usize, r: usize) -> Result<f64> {
    let mut ops = Vec::with_capacity(2 * r);
    ops.push(Majorana::A(l));
    for m in l + 1..l + r {
        ops.push(Majorana::A(m));
        ops.push(Majorana::B(m));
    }
    ops.push(Majorana::B(l + r));
    Ok(-wick_pfaffian(&ops, g)?)
}

/// ⟨σᶻ_l σᶻ_{l+r}⟩ from the contraction matrix.
pub fn zz_correlator(g: &impl Fn(usize, usize) -> f64, l: usize, r: usize) -> Result<f64> {
    let ops = [
        Majorana::A(l),
        Majorana::B(l),
        Majorana::A(l + r),
        Majorana::B(l + r),
    ];
    wick_pfaffian(&ops, g)
}

/// Nearest-neighbour concurrence of the transverse Ising ring at coupling
/// λ, from the momentum-route correlators.
pub fn ising_nn_concurrence(n: usize, lambda: f64) -> Result<f64> {
    let chain = FreeFermionChain::ising(n, lambda)?;
    Ok(concurrence_from_correlators(&chain.ring_correlators(1)?))
}

/// ∂C(1)/∂λ by Richardson extrapolation of central differences.
pub fn ising_nn_concurrence_derivative(n: usize, lambda: f64) -> Result<f64> {
    let eps = 1e-4;
    let c = |x: f64| ising_nn_concurrence(n, x);
    let d1 = (c(lambda + eps)? - c(lambda - eps)?) / (2.0 * eps);
    let d2 = (c(lambda + 2.0 * eps)? - c(lambda - 2.0 * eps)?) / (4.0 * eps);
    Ok((4.0 * d1 - d2) / 3.0)
}

/// Location and depth of the minimum of ∂C(1)/∂λ near the critical point.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeMinimum {
    pub lambda_m: f64,
    /// The (negative) value of the derivative at the minimum.
    pub depth: f64,
}

/// Find the minimum of ∂C(1)/∂λ by a coarse scan over [0.7, 1.3] followed
/// by golden-section refinement.
pub fn derivative_minimum(n: usize) -> Result<DerivativeMinimum> {
    let coarse = 160usize;
    let (lo_all, hi_all) = (0.7_f64, 1.3_f64);
    let mut best_k = 0usize;
    let mut best = f64::INFINITY;
    let mut values = Vec::with_capacity(coarse + 1);
    for k in 0..=coarse {
        let lam = lo_all + (hi_all - lo_all) * (k as f64) / (coarse as f64);
        let d = ising_nn_concurrence_derivative(n, lam)?;
        values.push(d);
        if d < best {
            best = d;
            best_k = k;
        }
    }
    let step = (hi_all - lo_all) / coarse as f64;
    let mut lo = lo_all + step * (best_k.saturating_sub(1)) as f64;
    let mut hi = (lo_all + step * (best_k + 1) as f64).min(hi_all);
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = ising_nn_concurrence_derivative(n, x1)?;
    let mut f2 = ising_nn_concurrence_derivative(n, x2)?;
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = ising_nn_concurrence_derivative(n, x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = ising_nn_concurrence_derivative(n, x2)?;
        }
    }
    let lambda_m = 0.5 * (lo + hi);
    Ok(DerivativeMinimum {
        lambda_m,
        depth: ising_nn_concurrence_derivative(n, lambda_m)?,
    })
}

/// Finite-size scaling summary of the derivative minimum.
#[derive(Debug, Clone)]
pub struct ScalingFit {
    /// Exponent of |λ_m − 1| ∝ N^(−θ).
    pub theta: f64,
    /// Slope of |∂C/∂λ|_min against ln N.
    pub depth_slope: f64,
    /// Correlation-length exponent assumed by the scaling ansatz; the
    /// collapse is built on ν = 1, not fitted.
    pub nu_assumed: f64,
    /// Per-size data (N, λ_m, depth).
    pub points: Vec<(usize, f64, f64)>,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (slope, intercept)
}

/// Fit the scaling of the derivative minimum over the given ring sizes:
/// ln|λ_m − 1| against ln N for θ and the depth against ln N for the
/// logarithmic-divergence slope.
pub fn scaling_fit(sizes: &[usize]) -> Result<ScalingFit> {
    if sizes.len() < 3 {
        return Err(Error::invalid("need at least three ring sizes"));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let m = derivative_minimum(n)?;
        points.push((n, m.lambda_m, m.depth));
    }
    let ln_n: Vec<f64> = points.iter().map(|(n, _, _)| (*n as f64).ln()).collect();
    let ln_dist: Vec<f64> = points
        .iter()
        .map(|(_, lam, _)| (lam - 1.0).abs().max(1e-300).ln())
        .collect();
    let (theta_slope, _) = linear_fit(&ln_n, &ln_dist);
    let depths: Vec<f64> = points.iter().map(|(_, _, d)| d.abs()).collect();
    let (depth_slope, _) = linear_fit(&ln_n, &depths);
    Ok(ScalingFit {
        theta: -theta_slope,
        depth_slope,
        nu_assumed: 1.0,
        points,
    })
}
