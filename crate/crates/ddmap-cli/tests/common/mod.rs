//! Statistics and spectral helpers shared by the integration suites. These
//! are deliberately independent of the library's own numerics so they can
//! serve as oracles.

use ndarray::{Array1, Array2};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Midrank vector: ties share the average of the ranks they cover.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite values"));
    let mut r = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with midranks.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Frequency of the largest spectral magnitude above DC, in Hz.
pub fn dominant_peak_hz(values: &[f64], fs: f64) -> f64 {
    let n = values.len();
    let m = mean(values);
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v - m, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut best_k = 1;
    let mut best = 0.0;
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1).skip(1) {
        let mag = c.norm();
        if mag > best {
            best = mag;
            best_k = k;
        }
    }
    best_k as f64 * fs / n as f64
}

/// Operator 2-norm by power iteration on `M^T M`.
pub fn operator_norm(m: &Array2<f64>, iters: usize) -> f64 {
    let n = m.ncols();
    let mut v = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
    let mut sigma_sq = 0.0;
    for _ in 0..iters {
        let w = m.dot(&v);
        let u = m.t().dot(&w);
        let norm = u.dot(&u).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = u / norm;
        sigma_sq = norm;
    }
    sigma_sq.sqrt()
}
