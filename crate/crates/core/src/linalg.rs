//! Dense complex linear algebra on top of nalgebra's real symmetric kernels.
//!
//! Every Hermitian eigenproblem in the crate funnels through
//! [`hermitian_eigen`], which embeds an n-by-n complex Hermitian matrix
//! `H = X + iY` into the 2n-by-2n real symmetric matrix `[[X, -Y], [Y, X]]`.
//! Each complex eigenpair appears twice in the embedding, as `(u, v)` and
//! `(-v, u)`; complexifying a real eigenvector gives `u + iv`, and the
//! duplicate complexifies to `i(u + iv)`, so redundant copies are filtered by
//! a Gram-Schmidt pass. This keeps the whole crate on one battle-tested
//! eigensolver and sidesteps general non-Hermitian machinery; spectra of
//! non-normal products are obtained from equivalent Hermitian forms at the
//! call sites.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

/// Eigenvalues smaller than this (relative to scale) are treated as zero
/// before square roots are taken.
pub const EIG_CLAMP: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Real symmetric embedding of a complex Hermitian matrix.
fn embed_hermitian(h: &CMat) -> RMat {
    let n = h.nrows();
    let mut e = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            e[(i, j)] = z.re;
            e[(i, j + n)] = -z.im;
            e[(i + n, j)] = z.im;
            e[(i + n, j + n)] = z.re;
        }
    }
    e
}

/// Eigenvalues of a complex Hermitian matrix, ascending, each listed once.
///
/// The embedding doubles every eigenvalue; duplicates are adjacent after
/// sorting, so every other entry of the doubled spectrum is returned.
pub fn hermitian_eigenvalues(h: &CMat) -> Vec<f64> {
    let e = embed_hermitian(h);
    let mut vals: Vec<f64> = e.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.into_iter().step_by(2).collect()
}

/// Full eigendecomposition of a complex Hermitian matrix.
///
/// Returns eigenvalues ascending with matching orthonormal eigenvectors.
pub fn hermitian_eigen(h: &CMat) -> Result<(Vec<f64>, Vec<CVec>)> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::invalid("hermitian_eigen: matrix must be square"));
    }
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let e = embed_hermitian(h);
    let se = e.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());

    let mut vals = Vec::with_capacity(n);
    let mut vecs: Vec<CVec> = Vec::with_capacity(n);
    for &k in &order {
        if vecs.len() == n {
            break;
        }
        let col = se.eigenvectors.column(k);
        let mut v = CVec::from_fn(n, |i, _| c(col[i], col[i + n]));
        // Remove components along vectors already kept; the embedded duplicate
        // of a kept eigenvector is complex-parallel to it and projects to zero.
        for u in &vecs {
            let overlap: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut()
                .zip(u.iter())
                .for_each(|(x, &uu)| *x -= overlap * uu);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            v /= cr(norm);
            vecs.push(v);
            vals.push(se.eigenvalues[k]);
        }
    }
    if vecs.len() != n {
        return Err(Error::numerical(format!(
            "hermitian_eigen recovered {} of {} eigenvectors",
            vecs.len(),
            n
        )));
    }
    Ok((vals, vecs))
}

/// Singular values of a complex matrix, descending, via the smaller Gram matrix.
pub fn singular_values_desc(m: &CMat) -> Vec<f64> {
    let gram = if m.nrows() <= m.ncols() {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    let mut vals = hermitian_eigenvalues(&gram);
    let scale = vals.iter().cloned().fold(0.0_f64, f64::max).max(1.0);
    for v in vals.iter_mut() {
        *v = if *v < EIG_CLAMP * scale { 0.0 } else { *v };
    }
    let mut s: Vec<f64> = vals.into_iter().map(f64::sqrt).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Thin SVD `m = U diag(s) V†` with `k = min(rows, cols)` columns, s descending.
///
/// Built from the Hermitian eigendecomposition of the smaller Gram matrix;
/// null-space columns are completed to an orthonormal set.
pub fn svd_via_gram(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let k = rows.min(cols);
    let left_side = rows <= cols;
    let gram = if left_side {
        m * m.adjoint()
    } else {
        m.adjoint() * m
    };
    let (vals, vecs) = hermitian_eigen(&gram)?;
    let scale = vals.iter().cloned().fold(0.0_f64, f64::max).max(1.0);
    // descending
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());

    let mut sigma = Vec::with_capacity(k);
    let mut primary = CMat::zeros(if left_side { rows } else { cols }, k);
    for (col, &i) in idx.iter().enumerate() {
        let v = vals[i].max(0.0);
        sigma.push(if v < EIG_CLAMP * scale { 0.0 } else { v.sqrt() });
        primary.set_column(col, &vecs[i]);
    }
    // Secondary factor: m† u / s  (or m v / s), completed on the null space.
    let other_dim = if left_side { cols } else { rows };
    let mut secondary = CMat::zeros(other_dim, k);
    let mut filled: Vec<CVec> = Vec::new();
    for col in 0..k {
        if sigma[col] > 0.0 {
            let p = primary.column(col).clone_owned();
            let q = if left_side {
                m.adjoint() * p
            } else {
                m * p
            } / cr(sigma[col]);
            secondary.set_column(col, &q);
            filled.push(q);
        }
    }
    let mut cursor = 0usize;
    for col in 0..k {
        if sigma[col] == 0.0 {
            // orthonormal completion from canonical basis
            'search: while cursor < other_dim {
                let mut cand = CVec::zeros(other_dim);
                cand[cursor] = cr(1.0);
                cursor += 1;
                for u in &filled {
                    let ov: C64 = u.iter().zip(cand.iter()).map(|(a, b)| a.conj() * b).sum();
                    cand.iter_mut()
                        .zip(u.iter())
                        .for_each(|(x, &uu)| *x -= ov * uu);
                }
                let norm = cand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm > 1e-6 {
                    cand /= cr(norm);
                    secondary.set_column(col, &cand);
                    filled.push(cand);
                    break 'search;
                }
            }
        }
    }
    if left_side {
        Ok((primary, sigma, secondary))
    } else {
        Ok((secondary, sigma, primary))
    }
}

/// Singular values of a complex *symmetric* matrix (Takagi values), descending.
pub fn takagi_values_desc(m: &CMat) -> Vec<f64> {
    singular_values_desc(m)
}

/// Kronecker product of complex matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Frobenius distance between complex matrices.
pub fn frobenius_distance(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a real symmetric matrix, ascending, with eigenvectors.
pub fn real_symmetric_eigen(m: &RMat) -> (Vec<f64>, RMat) {
    let se = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = RMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Ground eigenpair of a large real symmetric operator given only its
/// action, via Lanczos with full reorthogonalization.
///
/// Full reorthogonalization keeps the Krylov basis orthonormal at the cost
/// of storing it, which is fine at the dimensions used here (≤ 2^15) and
/// avoids the ghost-eigenvalue pathology of the bare three-term recurrence.
pub fn lanczos_ground<F>(
    dim: usize,
    matvec: F,
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> Result<(f64, RVec)>
where
    F: Fn(&RVec, &mut RVec),
{
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    if dim == 0 {
        return Err(Error::invalid("empty operator"));
    }
    if dim == 1 {
        let v = RVec::from_element(1, 1.0);
        let mut w = RVec::zeros(1);
        matvec(&v, &mut w);
        return Ok((w[0], v));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let mut v = RVec::from_iterator(dim, (0..dim).map(|_| normal.sample(&mut rng)));
    v /= v.norm();

    let m_max = max_iter.min(dim);
    let mut basis: Vec<RVec> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = RVec::zeros(dim);

    let ground_of_tridiag = |alphas: &[f64], betas: &[f64]| -> (f64, RVec) {
        let m = alphas.len();
        let mut t = RMat::zeros(m, m);
        for (i, &a) in alphas.iter().enumerate() {
            t[(i, i)] = a;
        }
        for (i, &b) in betas.iter().enumerate().take(m.saturating_sub(1)) {
            t[(i, i + 1)] = b;
            t[(i + 1, i)] = b;
        }
        let (vals, vecs) = real_symmetric_eigen(&t);
        (vals[0], vecs.column(0).into_owned())
    };

    let mut exhausted = false;
    for j in 0..m_max {
        matvec(&basis[j], &mut w);
        let alpha = basis[j].dot(&w);
        alphas.push(alpha);
        w.axpy(-alpha, &basis[j], 1.0);
        if j > 0 {
            let b = betas[j - 1];
            w.axpy(-b, &basis[j - 1], 1.0);
        }
        // Two reorthogonalization sweeps against the whole basis.
        for _ in 0..2 {
            for u in &basis {
                let overlap = u.dot(&w);
                w.axpy(-overlap, u, 1.0);
            }
        }
        let beta = w.norm();
        if beta < 1e-13 {
            exhausted = true;
            break;
        }
        // Convergence test on the Ritz residual bound |beta * s_last|.
        if j >= 4 && (j % 8 == 0 || j + 1 == m_max) {
            let (theta, s) = ground_of_tridiag(&alphas, &betas);
            let resid = (beta * s[s.len() - 1]).abs();
            if resid < tol * theta.abs().max(1.0) {
                let mut x = RVec::zeros(dim);
                for (si, u) in s.iter().zip(basis.iter()) {
                    x.axpy(*si, u, 1.0);
                }
                x /= x.norm();
                return Ok((theta, x));
            }
        }
        betas.push(beta);
        basis.push(&w / beta);
    }

    let (theta, s) = ground_of_tridiag(&alphas, &betas);
    let mut x = RVec::zeros(dim);
    for (si, u) in s.iter().zip(basis.iter()) {
        x.axpy(*si, u, 1.0);
    }
    x /= x.norm();
    if exhausted || alphas.len() == dim {
        // The Krylov space closed on an invariant subspace: the Ritz pair is
        // exact there.
        return Ok((theta, x));
    }
    // Final residual check against the requested tolerance.
    matvec(&x, &mut w);
    w.axpy(-theta, &x, 1.0);
    if w.norm() > tol.max(1e-9) * theta.abs().max(1.0) * 100.0 {
        return Err(Error::numerical(format!(
            "Lanczos did not converge in {m_max} iterations (residual {:.2e})",
            w.norm()
        )));
    }
    Ok((theta, x))
}

/// Clamp a nearly-real nonnegative quantity: tiny negatives from roundoff go
/// to zero, anything genuinely negative is a caller bug surfaced loudly.
pub fn clamp_nonneg(x: f64, tol: f64) -> Result<f64> {
    if x < -tol {
        return Err(Error::numerical(format!(
            "expected nonnegative value, got {x}"
        )));
    }
    Ok(x.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        &a + a.adjoint()
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        for seed in 0..4 {
            let h = random_hermitian(7, seed);
            let (vals, vecs) = hermitian_eigen(&h).unwrap();
            assert_eq!(vals.len(), 7);
            for (lam, v) in vals.iter().zip(vecs.iter()) {
                let hv = &h * v;
                let lv = v * cr(*lam);
                assert_abs_diff_eq!(frobenius_distance(
                    &CMat::from_columns(std::slice::from_ref(&hv)),
                    &CMat::from_columns(std::slice::from_ref(&lv))
                ), 0.0, epsilon = 1e-10);
            }
            // orthonormality
            for i in 0..7 {
                for j in 0..7 {
                    let ov: C64 = vecs[i]
                        .iter()
                        .zip(vecs[j].iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(ov.re, expect, epsilon = 1e-10);
                    assert_abs_diff_eq!(ov.im, 0.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn hermitian_eigen_handles_degeneracy() {
        // diag(1,1,2) in a rotated complex basis
        let mut h = CMat::zeros(3, 3);
        h[(0, 0)] = cr(1.0);
        h[(1, 1)] = cr(1.0);
        h[(2, 2)] = cr(2.0);
        let u = {
            let g = random_hermitian(3, 11);
            // cheap unitary: normalize eigenvectors of g
            let (_, vecs) = hermitian_eigen(&g).unwrap();
            CMat::from_columns(&vecs)
        };
        let hr = &u * h * u.adjoint();
        let (vals, vecs) = hermitian_eigen(&hr).unwrap();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(vals[2], 2.0, epsilon = 1e-10);
        for (lam, v) in vals.iter().zip(vecs.iter()) {
            let r = &hr * v - v * cr(*lam);
            assert!(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() < 1e-9);
        }
    }

    #[test]
    fn lanczos_matches_dense_ground_state() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 120;
        let mut a = RMat::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        a = (&a + a.transpose()) * 0.5;
        let (vals, vecs) = real_symmetric_eigen(&a);
        let (theta, x) = lanczos_ground(
            n,
            |v: &RVec, out: &mut RVec| out.copy_from(&(&a * v)),
            200,
            1e-12,
            7,
        )
        .unwrap();
        assert_abs_diff_eq!(theta, vals[0], epsilon = 1e-9);
        let overlap = x.dot(&vecs.column(0).into_owned()).abs();
        assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn svd_reconstructs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for &(r, cdim) in &[(4usize, 6usize), (6, 4), (5, 5), (3, 8)] {
            let m = CMat::from_fn(r, cdim, |_, _| {
                c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let (u, s, v) = svd_via_gram(&m).unwrap();
            let k = r.min(cdim);
            let mut rec = CMat::zeros(r, cdim);
            for i in 0..k {
                let ui = u.column(i);
                let vi = v.column(i);
                for p in 0..r {
                    for q in 0..cdim {
                        rec[(p, q)] += ui[p] * cr(s[i]) * vi[q].conj();
                    }
                }
            }
            assert!(frobenius_distance(&m, &rec) < 1e-10);
        }
    }

    #[test]
    fn svd_handles_rank_deficiency() {
        // rank-1 outer product
        let a = CVec::from_vec(vec![cr(1.0), c(0.0, 1.0), cr(-0.5)]);
        let b = CVec::from_vec(vec![cr(2.0), cr(0.0), c(0.0, -1.0), cr(1.0)]);
        let mut m = CMat::zeros(3, 4);
        for i in 0..3 {
            for j in 0..4 {
                m[(i, j)] = a[i] * b[j];
            }
        }
        let (u, s, v) = svd_via_gram(&m).unwrap();
        assert!(s[1] < 1e-10 && s[2] < 1e-10);
        // columns remain orthonormal even where sigma = 0
        for mat in [&u, &v] {
            let g = mat.adjoint() * mat;
            for i in 0..3 {
                for j in 0..3 {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(g[(i, j)].re, expect, epsilon = 1e-8);
                }
            }
        }
    }
}
