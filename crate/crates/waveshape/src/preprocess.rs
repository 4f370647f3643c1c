//! Signal conditioning: zero-phase lowpass, median filtering, baseline
//! removal, detrending and Fourier upsampling.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Designs digital Butterworth lowpass coefficients (b, a) via the bilinear
/// transform, normalized so the DC gain is exactly 1 in floating point.
fn butter_lowpass(order: usize, cutoff: f64, fs: f64) -> (Vec<f64>, Vec<f64>) {
    let wc = 2.0 * fs * (std::f64::consts::PI * cutoff / fs).tan();
    // Analog poles on the left-half-plane Butterworth circle.
    let mut digital_poles = Vec::with_capacity(order);
    for k in 0..order {
        let theta = std::f64::consts::PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let s = Complex::new(wc * theta.cos(), wc * theta.sin());
        let two_fs = Complex::new(2.0 * fs, 0.0);
        digital_poles.push((two_fs + s) / (two_fs - s));
    }
    // Denominator: product of (1 - p z^-1); conjugate pairs make it real.
    let mut a = vec![Complex::new(1.0, 0.0)];
    for p in &digital_poles {
        let mut next = vec![Complex::new(0.0, 0.0); a.len() + 1];
        for (i, &c) in a.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        a = next;
    }
    let a: Vec<f64> = a.iter().map(|c| c.re).collect();
    // Numerator: order zeros at z = -1, scaled for unit gain at z = 1.
    let mut b = vec![1.0f64];
    for _ in 0..order {
        let mut next = vec![0.0; b.len() + 1];
        for (i, &c) in b.iter().enumerate() {
            next[i] += c;
            next[i + 1] += c;
        }
        b = next;
    }
    let gain: f64 = a.iter().sum::<f64>() / b.iter().sum::<f64>();
    for c in b.iter_mut() {
        *c *= gain;
    }
    (b, a)
}

/// Steady-state initial filter delays for a unit-amplitude step, so that
/// filtering a constant produces that constant from the first sample.
fn lfilter_zi(b: &[f64], a: &[f64]) -> Vec<f64> {
    let n = a.len() - 1;
    // Solve (I - A^T) zi = B with the transposed direct form II companion
    // matrix, as in standard zero-phase filtering practice.
    let mut m = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.0;
            if j == 0 {
                v = -a[i + 1];
            }
            if j == i + 1 {
                v += 1.0;
            }
            m[i][j] = if i == j { 1.0 - v } else { -v };
        }
        rhs[i] = b[i + 1] - a[i + 1] * b[0];
    }
    solve_dense(&mut m, &mut rhs);
    rhs
}

/// In-place Gaussian elimination with partial pivoting for small systems.
fn solve_dense(m: &mut [Vec<f64>], rhs: &mut [f64]) {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        let d = m[col][col];
        for row in 0..n {
            if row == col || m[row][col] == 0.0 {
                continue;
            }
            let f = m[row][col] / d;
            for k in col..n {
                let v = m[col][k];
                m[row][k] -= f * v;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    for col in 0..n {
        rhs[col] /= m[col][col];
    }
}

fn lfilter(b: &[f64], a: &[f64], x: &[f64], zi: &[f64]) -> Vec<f64> {
    let n = a.len() - 1;
    let mut z = zi.to_vec();
    let mut y = Vec::with_capacity(x.len());
    for &xi in x {
        let yi = b[0] * xi + z[0];
        for j in 0..n - 1 {
            z[j] = b[j + 1] * xi + z[j + 1] - a[j + 1] * yi;
        }
        z[n - 1] = b[n] * xi - a[n] * yi;
        y.push(yi);
    }
    y
}

/// Zero-phase Butterworth lowpass: forward and backward passes over an
/// odd-reflected extension of length `3 * order` on each side.
pub fn butterworth_lowpass_bidirectional(
    x: &TimeSeries,
    order: usize,
    cutoff: f64,
) -> Result<TimeSeries> {
    if order == 0 {
        return Err(Error::InvalidFilterOrder(order));
    }
    let fs = x.fs();
    let nyquist = fs / 2.0;
    if !(cutoff > 0.0) || cutoff >= nyquist {
        return Err(Error::CutoffAboveNyquist { cutoff, nyquist });
    }
    let s = x.samples();
    let pad = 3 * order;
    if s.len() <= pad {
        return Err(Error::SeriesTooShort {
            got: s.len(),
            min: pad + 1,
        });
    }
    let (b, a) = butter_lowpass(order, cutoff, fs);
    let zi = lfilter_zi(&b, &a);

    let n = s.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * s[0] - s[i]);
    }
    ext.extend_from_slice(s);
    for i in 1..=pad {
        ext.push(2.0 * s[n - 1] - s[n - 1 - i]);
    }

    let zi0: Vec<f64> = zi.iter().map(|v| v * ext[0]).collect();
    let mut y = lfilter(&b, &a, &ext, &zi0);
    y.reverse();
    let zi1: Vec<f64> = zi.iter().map(|v| v * y[0]).collect();
    let mut y = lfilter(&b, &a, &y, &zi1);
    y.reverse();
    let out = y[pad..pad + n].to_vec();
    TimeSeries::new(out, fs, x.t0())
}

fn window_samples(window_ms: f64, fs: f64) -> usize {
    // Round half up, then force odd by rounding up.
    let w = (window_ms * fs / 1000.0 + 0.5).floor() as usize;
    if w % 2 == 0 {
        w + 1
    } else {
        w
    }
}

/// Running median with a centered window; edge windows are truncated rather
/// than padded. Even-length truncated windows take the lower middle order
/// statistic so the filter commutes with additive constants bit for bit.
pub fn median_filter(x: &TimeSeries, window_ms: f64) -> Result<TimeSeries> {
    let s = x.samples();
    let n = s.len();
    let w = window_samples(window_ms, x.fs());
    if w < 3 {
        return Err(Error::WindowTooSmall(w));
    }
    if w > n {
        return Err(Error::WindowLongerThanSignal { window: w, len: n });
    }
    let half = w / 2;
    // Sorted sliding window with binary-search insertion and removal.
    let mut sorted: Vec<f64> = Vec::with_capacity(w);
    let mut out = Vec::with_capacity(n);
    let mut right = 0usize; // exclusive
    let mut left = 0usize;
    for i in 0..n {
        let want_right = (i + half + 1).min(n);
        while right < want_right {
            let v = s[right];
            let pos = sorted.partition_point(|&u| u < v);
            sorted.insert(pos, v);
            right += 1;
        }
        let want_left = i.saturating_sub(half);
        while left < want_left {
            let v = s[left];
            let pos = sorted.partition_point(|&u| u < v);
            debug_assert!(sorted[pos] == v);
            sorted.remove(pos);
            left += 1;
        }
        let len = sorted.len();
        out.push(sorted[(len - 1) / 2]);
    }
    TimeSeries::new(out, x.fs(), x.t0())
}

/// Baseline wander removal: the baseline is a 200 ms median filter followed
/// by a 600 ms median filter, and is subtracted from the input.
pub fn remove_baseline_two_step(x: &TimeSeries) -> Result<TimeSeries> {
    let stage1 = median_filter(x, 200.0)?;
    let baseline = median_filter(&stage1, 600.0)?;
    let out: Vec<f64> = x
        .samples()
        .iter()
        .zip(baseline.samples())
        .map(|(v, b)| v - b)
        .collect();
    TimeSeries::new(out, x.fs(), x.t0())
}

/// Subtracts a running-median trend (default window 2 s). If
/// `min_period_hint` (seconds) exceeds the window, a warning is returned
/// because the trend estimate will track the oscillations themselves.
pub fn detrend_median(
    x: &TimeSeries,
    window_s: f64,
    min_period_hint: Option<f64>,
) -> Result<(TimeSeries, Vec<String>)> {
    let mut warnings = Vec::new();
    if let Some(period) = min_period_hint {
        if window_s < period {
            warnings.push(format!(
                "detrend window {window_s} s is shorter than the oscillation period {period} s; \
                 the trend estimate will track the pulses"
            ));
        }
    }
    let trend = median_filter(x, window_s * 1000.0)?;
    let out: Vec<f64> = x
        .samples()
        .iter()
        .zip(trend.samples())
        .map(|(v, t)| v - t)
        .collect();
    Ok((TimeSeries::new(out, x.fs(), x.t0())?, warnings))
}

/// Band-limited upsampling by zero-padding the Fourier transform. The output
/// length `n * target_fs / fs` must be integral.
pub fn fourier_upsample(x: &TimeSeries, target_fs: f64) -> Result<TimeSeries> {
    let fs = x.fs();
    if !target_fs.is_finite() || target_fs <= fs {
        return Err(Error::UpsampleTargetNotAbove { target_fs, fs });
    }
    let n = x.len();
    let m_f = n as f64 * target_fs / fs;
    let m = m_f.round();
    if (m_f - m).abs() > 1e-9 * m.max(1.0) {
        return Err(Error::UpsampleLengthNotIntegral(m_f));
    }
    let m = m as usize;

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let mut spec: Vec<Complex<f64>> = x.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut spec);

    let mut padded = vec![Complex::new(0.0, 0.0); m];
    let half = n / 2;
    if n % 2 == 0 {
        padded[..half].copy_from_slice(&spec[..half]);
        for k in 1..half {
            padded[m - k] = spec[n - k];
        }
        // Split the Nyquist bin between the two symmetric positions to keep
        // the output real.
        let nyq = spec[half] * 0.5;
        padded[half] = nyq;
        padded[m - half] = nyq;
    } else {
        padded[..=half].copy_from_slice(&spec[..=half]);
        for k in 1..=half {
            padded[m - k] = spec[n - k];
        }
    }

    let ifft = planner.plan_fft_inverse(m);
    ifft.process(&mut padded);
    let out: Vec<f64> = padded.iter().map(|c| c.re / n as f64).collect();
    let t0 = x.t0();
    TimeSeries::new(out, target_fs, t0)
}
