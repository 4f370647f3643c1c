//! Gaussian affinities, density normalization, the diffusion operator and
//! its truncated spectral embedding.

use ndarray::Array2;

use crate::cycles::CycleMatrix;
use crate::error::{Error, Result};
use crate::linalg;
use crate::stats;

/// How the kernel bandwidth is resolved.
#[derive(Debug, Clone)]
pub enum BandwidthRule {
    /// 25th percentile of all squared pairwise distances, diagonal included.
    /// Falls back to excluding exact zeros (with a warning) when that
    /// percentile is zero.
    QuartileAllPairs,
    /// Percentile of the squared distance to each point's k-th nearest
    /// neighbor (self excluded).
    KnnPercentile {
        k: usize,
        pct: f64,
    },
    Explicit(f64),
}

/// Kernel and embedding parameters.
#[derive(Debug, Clone)]
pub struct KernelConfig {
    pub bandwidth_rule: BandwidthRule,
    /// Density-normalization exponent in [0, 1].
    pub alpha: f64,
    /// Zero the affinity diagonal before normalization.
    pub zero_diagonal: bool,
    /// Diffusion time.
    pub t: f64,
    /// Embedding dimension.
    pub d: usize,
}

impl KernelConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) || !self.alpha.is_finite() {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !self.t.is_finite() || self.t <= 0.0 {
            return Err(Error::InvalidDiffusionTime(self.t));
        }
        if self.d < 1 || self.d + 1 > n {
            return Err(Error::InvalidEmbeddingDim { d: self.d, n });
        }
        Ok(())
    }
}

/// Outcome of bandwidth selection.
#[derive(Debug, Clone)]
pub struct BandwidthSelection {
    pub h: f64,
    pub fallback_used: bool,
    pub warnings: Vec<String>,
}

/// Squared Euclidean distances between all row pairs, each unordered pair
/// computed once so the result is symmetric bit for bit.
pub fn pairwise_sq_dists(x: &CycleMatrix) -> Result<Array2<f64>> {
    pairwise_sq_dists_rows(&x.rows)
}

/// Row-matrix variant of [`pairwise_sq_dists`].
pub fn pairwise_sq_dists_rows(rows: &Array2<f64>) -> Result<Array2<f64>> {
    let n = rows.nrows();
    if n < 2 {
        return Err(Error::TooFewCycles { got: n, min: 2 });
    }
    for ((i, j), &v) in rows.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFiniteEntry { row: i, col: j });
        }
    }
    let mut d2 = Array2::zeros((n, n));
    for i in 0..n {
        let ri = rows.row(i);
        let ri = ri.as_slice().expect("contiguous row");
        for j in i + 1..n {
            let rj = rows.row(j);
            let rj = rj.as_slice().expect("contiguous row");
            let mut acc = 0.0;
            for (a, b) in ri.iter().zip(rj) {
                let d = a - b;
                acc += d * d;
            }
            d2[[i, j]] = acc;
            d2[[j, i]] = acc;
        }
    }
    Ok(d2)
}

/// Resolves the kernel bandwidth from a squared-distance matrix.
pub fn select_bandwidth(d2: &Array2<f64>, rule: &BandwidthRule) -> Result<BandwidthSelection> {
    match rule {
        BandwidthRule::Explicit(h) => {
            if !h.is_finite() || *h <= 0.0 {
                return Err(Error::InvalidBandwidth(*h));
            }
            Ok(BandwidthSelection {
                h: *h,
                fallback_used: false,
                warnings: Vec::new(),
            })
        }
        BandwidthRule::QuartileAllPairs => {
            let all: Vec<f64> = d2.iter().cloned().collect();
            let h = stats::percentile(&all, 25.0);
            if h > 0.0 {
                return Ok(BandwidthSelection {
                    h,
                    fallback_used: false,
                    warnings: Vec::new(),
                });
            }
            let nonzero: Vec<f64> = all.into_iter().filter(|&v| v > 0.0).collect();
            if nonzero.is_empty() {
                return Err(Error::DegenerateBandwidth);
            }
            let h = stats::percentile(&nonzero, 25.0);
            if h <= 0.0 {
                return Err(Error::DegenerateBandwidth);
            }
            Ok(BandwidthSelection {
                h,
                fallback_used: true,
                warnings: vec![
                    "all-pairs quartile bandwidth was zero; recomputed over nonzero distances"
                        .to_string(),
                ],
            })
        }
        BandwidthRule::KnnPercentile { k, pct } => {
            let n = d2.nrows();
            if *k == 0 || *k >= n {
                return Err(Error::KnnOutOfRange { k: *k, n });
            }
            let mut kth = Vec::with_capacity(n);
            for i in 0..n {
                let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d2[[i, j]]).collect();
                let (_, v, _) = row.select_nth_unstable_by(k - 1, f64::total_cmp);
                kth.push(*v);
            }
            let h = stats::percentile(&kth, *pct);
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::DegenerateBandwidth);
            }
            Ok(BandwidthSelection {
                h,
                fallback_used: false,
                warnings: Vec::new(),
            })
        }
    }
}

/// Gaussian affinity `W_ij = exp(-D2_ij / h)`, optionally with a zeroed
/// diagonal.
pub fn affinity(d2: &Array2<f64>, h: f64, zero_diagonal: bool) -> Result<Array2<f64>> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidBandwidth(h));
    }
    let mut w = d2.mapv(|v| (-v / h).exp());
    if zero_diagonal {
        for i in 0..w.nrows() {
            w[[i, i]] = 0.0;
        }
    }
    Ok(w)
}

/// Kernel degrees, summed in value order so that the result is invariant
/// under row permutations.
fn degrees(w: &Array2<f64>) -> Result<Vec<f64>> {
    let mut deg = Vec::with_capacity(w.nrows());
    for (i, row) in w.rows().into_iter().enumerate() {
        let d = stats::stable_sum(row.as_slice().expect("contiguous row"));
        if !(d > 0.0) {
            return Err(Error::IsolatedPoint(i));
        }
        deg.push(d);
    }
    Ok(deg)
}

/// Density normalization `W^(a) = D^-a W D^-a`. `alpha = 0` returns the
/// input unchanged.
pub fn alpha_normalize(w: &Array2<f64>, alpha: f64) -> Result<Array2<f64>> {
    if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
        return Err(Error::InvalidAlpha(alpha));
    }
    if alpha == 0.0 {
        return Ok(w.clone());
    }
    let deg = degrees(w)?;
    let inv: Vec<f64> = if alpha == 1.0 {
        deg.iter().map(|d| 1.0 / d).collect()
    } else {
        deg.iter().map(|d| d.powf(-alpha)).collect()
    };
    let n = w.nrows();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            // Grouping the two degree factors keeps the product identical
            // under row permutations (multiplication commutes bitwise but
            // does not associate).
            let v = w[[i, j]] * (inv[i] * inv[j]);
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    Ok(out)
}

/// Row-stochastic diffusion operator `A = D^-1 W^(a)`.
pub fn diffusion_operator(w_alpha: &Array2<f64>) -> Result<Array2<f64>> {
    let deg = degrees(w_alpha)?;
    let n = w_alpha.nrows();
    let mut a = w_alpha.clone();
    for i in 0..n {
        let inv = 1.0 / deg[i];
        for j in 0..n {
            a[[i, j]] *= inv;
        }
    }
    Ok(a)
}

/// Eigenpairs of the diffusion operator, obtained through its symmetric
/// conjugate `P = D^-1/2 W^(a) D^-1/2`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Descending; `eigenvalues[0]` is the trivial unit eigenvalue.
    pub eigenvalues: Vec<f64>,
    /// Column k is the unit-norm eigenvector of A for `eigenvalues[k]`,
    /// with the canonical sign (largest-magnitude entry positive).
    pub vectors: Array2<f64>,
    /// |lambda_1 - 1|.
    pub lambda1_dev: f64,
    /// Largest relative deviation of phi_1 from a constant vector.
    pub phi1_rel_dev: f64,
    /// lambda_2 within 1e-8 of 1: the kernel graph is effectively
    /// disconnected.
    pub near_disconnected: bool,
}

/// Computes the top `d + 1` eigenpairs of the diffusion operator derived
/// from `w_alpha`.
///
/// A dense symmetric decomposition is used up to 4096 points and an
/// iterative solver above. On a connected graph the result is checked:
/// the leading eigenvalue must be 1 within 1e-8 and its eigenvector constant
/// within 1e-6 relative deviation.
pub fn spectral_decompose(w_alpha: &Array2<f64>, d: usize) -> Result<SpectralDecomposition> {
    let n = w_alpha.nrows();
    if d + 1 > n {
        return Err(Error::InvalidEmbeddingDim { d, n });
    }
    let deg = degrees(w_alpha)?;
    let s: Vec<f64> = deg.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut p = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = w_alpha[[i, j]] * (s[i] * s[j]);
            p[[i, j]] = v;
            p[[j, i]] = v;
        }
    }
    let (eigenvalues, u) = linalg::sym_eigen_topk(&p, d + 1)?;

    // Map back to eigenvectors of A, normalize, fix signs.
    let mut vectors = Array2::zeros((n, d + 1));
    for k in 0..d + 1 {
        let mut col: Vec<f64> = (0..n).map(|i| s[i] * u[[i, k]]).collect();
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::EigenFailure(format!("zero eigenvector at mode {k}")));
        }
        for v in col.iter_mut() {
            *v /= norm;
        }
        linalg::canonical_sign(&mut col);
        for (i, &v) in col.iter().enumerate() {
            vectors[[i, k]] = v;
        }
    }

    let lambda1_dev = (eigenvalues[0] - 1.0).abs();
    let phi1 = vectors.column(0);
    let mean = phi1.iter().sum::<f64>() / n as f64;
    let phi1_rel_dev = phi1.iter().map(|v| (v - mean).abs()).fold(0.0f64, f64::max)
        / mean.abs().max(f64::MIN_POSITIVE);
    let near_disconnected = eigenvalues.len() > 1 && eigenvalues[1] > 1.0 - 1e-8;
    if !near_disconnected {
        if lambda1_dev > 1e-8 {
            return Err(Error::SpectralCheck(format!(
                "leading eigenvalue {} deviates from 1 by {lambda1_dev:e}",
                eigenvalues[0]
            )));
        }
        if phi1_rel_dev > 1e-6 {
            return Err(Error::SpectralCheck(format!(
                "leading eigenvector is not constant (relative deviation {phi1_rel_dev:e})"
            )));
        }
    }
    for k in 1..eigenvalues.len() {
        if eigenvalues[k] > eigenvalues[k - 1] + 1e-10 {
            return Err(Error::SpectralCheck(format!(
                "eigenvalues not sorted at position {k}"
            )));
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
        lambda1_dev,
        phi1_rel_dev,
        near_disconnected,
    })
}

/// Truncated diffusion embedding.
#[derive(Debug, Clone)]
pub struct DiffusionEmbedding {
    /// N x d_retained; column k is `lambda_{k+2}^t * phi_{k+2}`.
    pub coords: Array2<f64>,
    /// The eigenvalues behind the retained columns (before raising to t).
    pub eigenvalues: Vec<f64>,
    pub h: f64,
    pub alpha: f64,
    pub t: f64,
    /// Number of eigenvalues within 1e-8 of 1 (connected-component
    /// estimate).
    pub component_count: usize,
    /// Negative-eigenvalue modes dropped because t is fractional.
    pub dropped_modes: usize,
    pub warnings: Vec<String>,
}

/// Builds the embedding from a decomposition: coordinate k of point j is
/// `lambda_{k+1}^t phi_{k+1}(j)`, excluding the trivial first pair.
///
/// For integer `t` the power is exact for negative eigenvalues; for
/// fractional `t` any negative-eigenvalue mode is dropped with a warning.
pub fn embed(
    dec: &SpectralDecomposition,
    t: f64,
    d: usize,
    h: f64,
    alpha: f64,
) -> Result<DiffusionEmbedding> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidDiffusionTime(t));
    }
    let n = dec.vectors.nrows();
    if d < 1 || d + 1 > dec.eigenvalues.len().max(dec.vectors.ncols()) || d + 1 > n {
        return Err(Error::InvalidEmbeddingDim { d, n });
    }
    let integer_t = t.fract() == 0.0;
    let mut warnings = Vec::new();
    let mut kept: Vec<usize> = Vec::with_capacity(d);
    for k in 1..=d {
        let lam = dec.eigenvalues[k];
        if lam < 0.0 && !integer_t {
            warnings.push(format!(
                "mode {} dropped: eigenvalue {lam:.6} is negative and t = {t} is fractional",
                k + 1
            ));
            continue;
        }
        kept.push(k);
    }
    let mut coords = Array2::zeros((n, kept.len()));
    let mut eigenvalues = Vec::with_capacity(kept.len());
    for (c, &k) in kept.iter().enumerate() {
        let lam = dec.eigenvalues[k];
        let scale = if integer_t {
            lam.powi(t as i32)
        } else {
            lam.powf(t)
        };
        for i in 0..n {
            coords[[i, c]] = scale * dec.vectors[[i, k]];
        }
        eigenvalues.push(lam);
    }
    let component_count = dec.eigenvalues.iter().filter(|&&l| l > 1.0 - 1e-8).count();
    Ok(DiffusionEmbedding {
        coords,
        eigenvalues,
        h,
        alpha,
        t,
        component_count,
        dropped_modes: d - kept.len(),
        warnings,
    })
}

/// Euclidean distance between two embedded points.
pub fn diffusion_distance(emb: &DiffusionEmbedding, i: usize, j: usize) -> f64 {
    let a = emb.coords.row(i);
    let b = emb.coords.row(j);
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Full kernel-to-embedding chain over raw row vectors.
pub fn embed_points(rows: &Array2<f64>, config: &KernelConfig) -> Result<DiffusionEmbedding> {
    config.validate(rows.nrows())?;
    let d2 = pairwise_sq_dists_rows(rows)?;
    let bw = select_bandwidth(&d2, &config.bandwidth_rule)?;
    let w = affinity(&d2, bw.h, config.zero_diagonal)?;
    let wa = alpha_normalize(&w, config.alpha)?;
    let dec = spectral_decompose(&wa, config.d)?;
    let mut emb = embed(&dec, config.t, config.d, bw.h, config.alpha)?;
    emb.warnings.extend(bw.warnings);
    Ok(emb)
}
