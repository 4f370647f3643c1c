//! Symmetric eigendecomposition plumbing.
//!
//! Dense decompositions are delegated to `faer` pinned to sequential
//! execution so repeated runs are bit-identical. Above the dense size cap an
//! iterative Lanczos solver with full reorthogonalization extracts the top
//! modes only.

use crate::error::{Error, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Once;

/// Largest N handled by the dense path.
pub(crate) const DENSE_EIGEN_CAP: usize = 4096;

/// Relative residual tolerance for iterative Ritz pairs.
const LANCZOS_TOL: f64 = 1e-10;

static FAER_SEQ: Once = Once::new();

fn pin_sequential() {
    FAER_SEQ.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

fn to_faer(a: &Array2<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending,
/// eigenvectors as matching columns with unit norm.
pub(crate) fn sym_eigen_desc(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    pin_sequential();
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "matrix must be square");
    let e = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let s = e.S();
    let u = e.U();
    // faer returns eigenvalues in nondecreasing order.
    let mut vals = Vec::with_capacity(n);
    let mut vecs = Array2::zeros((n, n));
    for k in 0..n {
        let src = n - 1 - k;
        vals.push(s[src]);
        for i in 0..n {
            vecs[[i, k]] = u[(i, src)];
        }
    }
    Ok((vals, vecs))
}

/// Top-`k` eigenpairs of a symmetric matrix, descending. Dispatches to the
/// dense path for small matrices and to Lanczos beyond [`DENSE_EIGEN_CAP`].
pub(crate) fn sym_eigen_topk(a: &Array2<f64>, k: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    assert!(k >= 1 && k <= n);
    if n <= DENSE_EIGEN_CAP {
        let (vals, vecs) = sym_eigen_desc(a)?;
        let mut top_vecs = Array2::zeros((n, k));
        for j in 0..k {
            top_vecs.column_mut(j).assign(&vecs.column(j));
        }
        Ok((vals[..k].to_vec(), top_vecs))
    } else {
        lanczos_topk(a, k)
    }
}

/// Lanczos iteration with full reorthogonalization. The Krylov basis grows
/// until the top-`k` Ritz residuals fall below `LANCZOS_TOL` relative to the
/// largest Ritz magnitude.
pub(crate) fn lanczos_topk(a: &Array2<f64>, k: usize) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    let max_m = (8 * k + 80).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x77AE_5EED);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nrm = norm(&v);
    v.iter_mut().for_each(|x| *x /= nrm);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    loop {
        let j = alphas.len();
        let vj = basis[j].clone();
        let mut w = matvec(a, &vj);
        let alpha = dot(&vj, &w);
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(vj.iter()) {
            *wi -= alpha * vi;
        }
        if j > 0 {
            let beta_prev = betas[j - 1];
            for (wi, vi) in w.iter_mut().zip(basis[j - 1].iter()) {
                *wi -= beta_prev * vi;
            }
        }
        // Two passes of reorthogonalization keep the basis numerically
        // orthonormal for long runs.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&w, b);
                for (wi, bi) in w.iter_mut().zip(b.iter()) {
                    *wi -= c * bi;
                }
            }
        }
        let beta = norm(&w);
        let m = alphas.len();

        let exhausted = beta < 1e-300 || m == max_m;
        if m >= (2 * k).min(n) || exhausted {
            let (ritz_vals, ritz_vecs) = tridiag_eigen(&alphas, &betas)?;
            let scale = ritz_vals.iter().fold(0.0f64, |s, v| s.max(v.abs()));
            let converged = (0..k.min(m)).all(|i| {
                let bottom = ritz_vecs[[m - 1, i]].abs();
                beta * bottom <= LANCZOS_TOL * scale.max(1e-300)
            });
            if (converged && m >= k) || exhausted {
                if m < k {
                    return Err(Error::EigenFailure(format!(
                        "Krylov space exhausted at dimension {m} < requested {k}"
                    )));
                }
                let mut vals = Vec::with_capacity(k);
                let mut vecs = Array2::zeros((n, k));
                for i in 0..k {
                    vals.push(ritz_vals[i]);
                    let mut col = vec![0.0; n];
                    for (r, b) in basis.iter().enumerate().take(m) {
                        let y = ritz_vecs[[r, i]];
                        for (c, bi) in col.iter_mut().zip(b.iter()) {
                            *c += y * bi;
                        }
                    }
                    let nn = norm(&col);
                    for (dst, c) in vecs.column_mut(i).iter_mut().zip(col.iter()) {
                        *dst = c / nn;
                    }
                }
                return Ok((vals, vecs));
            }
        }

        betas.push(beta);
        let mut next = w;
        next.iter_mut().for_each(|x| *x /= beta);
        basis.push(next);
    }
}

/// Dense eigendecomposition of the symmetric tridiagonal (alphas, betas),
/// descending.
fn tridiag_eigen(alphas: &[f64], betas: &[f64]) -> Result<(Vec<f64>, Array2<f64>)> {
    let m = alphas.len();
    let mut t = Array2::zeros((m, m));
    for i in 0..m {
        t[[i, i]] = alphas[i];
        if i + 1 < m {
            t[[i, i + 1]] = betas[i];
            t[[i + 1, i]] = betas[i];
        }
    }
    sym_eigen_desc(&t)
}

fn matvec(a: &Array2<f64>, v: &[f64]) -> Vec<f64> {
    let n = a.nrows();
    let mut out = vec![0.0; n];
    for (i, row) in a.rows().into_iter().enumerate() {
        let mut acc = 0.0;
        for (aij, vj) in row.iter().zip(v.iter()) {
            acc += aij * vj;
        }
        out[i] = acc;
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips `v` so its entry of largest magnitude is positive; ties resolve to
/// the smallest index. A zero vector is left untouched.
pub(crate) fn canonical_sign(v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if best_abs > 0.0 && v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}
