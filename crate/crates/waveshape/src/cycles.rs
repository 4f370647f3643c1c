//! Landmark detection, pulse quality rejection, cycle excision and per-cycle
//! normalization.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::stats;
use crate::timeseries::TimeSeries;

/// Strictly increasing landmark sample positions with their sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSequence {
    indices: Vec<usize>,
    fs: f64,
}

impl LandmarkSequence {
    pub fn new(indices: Vec<usize>, fs: f64) -> Result<Self> {
        if !fs.is_finite() || fs <= 0.0 {
            return Err(Error::InvalidSamplingRate(fs));
        }
        if indices.is_empty() {
            return Err(Error::NoCyclesDetected);
        }
        for i in 1..indices.len() {
            if indices[i] <= indices[i - 1] {
                return Err(Error::LandmarksNotIncreasing(i));
            }
        }
        Ok(Self { indices, fs })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Landmark times in seconds.
    pub fn times(&self) -> Vec<f64> {
        self.indices.iter().map(|&i| i as f64 / self.fs).collect()
    }

    /// Smallest gap between consecutive landmarks, in samples. `None` for a
    /// single landmark.
    pub fn min_interval_samples(&self) -> Option<usize> {
        self.indices.windows(2).map(|w| w[1] - w[0]).min()
    }
}

/// Landmark detection mode.
#[derive(Debug, Clone)]
pub enum Detector {
    /// Local maxima above a rolling `median + k_mad * MAD` threshold, with a
    /// refractory period keeping the largest peak in each conflict.
    PeakThreshold {
        k_mad: f64,
        window_s: f64,
        refractory_s: f64,
    },
    /// Median-crossing ascending segments; the landmark is the sample with
    /// the steepest forward difference in each segment.
    DerivativeMax { refractory_s: f64 },
    /// Caller-supplied indices, validated against the signal bounds.
    External(Vec<usize>),
}

impl Detector {
    /// Peak detector tuned for R-peak-like spikes.
    pub fn default_peak() -> Self {
        Detector::PeakThreshold {
            k_mad: 8.0,
            window_s: 2.0,
            refractory_s: 0.25,
        }
    }

    /// Upstroke detector for pressure-like pulses.
    pub fn default_upstroke() -> Self {
        Detector::DerivativeMax { refractory_s: 0.25 }
    }
}

/// Exact rolling median and MAD threshold, evaluated only at `center`.
fn local_threshold(x: &[f64], center: usize, half: usize, k_mad: f64) -> f64 {
    let lo = center.saturating_sub(half);
    let hi = (center + half + 1).min(x.len());
    let mut w: Vec<f64> = x[lo..hi].to_vec();
    let med = median_in_place(&mut w);
    let mut dev: Vec<f64> = w.iter().map(|v| (v - med).abs()).collect();
    let mad = median_in_place(&mut dev);
    med + k_mad * mad
}

fn median_in_place(w: &mut [f64]) -> f64 {
    let n = w.len();
    let mid = n / 2;
    let (_, m, _) = w.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if n % 2 == 1 {
        upper
    } else {
        let lower = w[..mid].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

fn apply_refractory(mut candidates: Vec<(usize, f64)>, r_samples: usize) -> Vec<usize> {
    // Greedy by amplitude: a larger peak suppresses smaller ones within the
    // refractory distance. Ties resolve to the earlier index.
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut kept: Vec<usize> = Vec::new();
    'outer: for (idx, _) in candidates {
        for &k in &kept {
            if idx.abs_diff(k) <= r_samples {
                continue 'outer;
            }
        }
        kept.push(idx);
    }
    kept.sort_unstable();
    kept
}

/// Detects cycle landmarks in a preprocessed signal.
pub fn detect_landmarks(x: &TimeSeries, mode: &Detector) -> Result<LandmarkSequence> {
    let s = x.samples();
    let n = s.len();
    let fs = x.fs();
    let indices = match mode {
        Detector::External(idx) => {
            for &i in idx {
                if i >= n {
                    return Err(Error::LandmarkOutOfBounds { index: i, len: n });
                }
            }
            idx.clone()
        }
        Detector::PeakThreshold {
            k_mad,
            window_s,
            refractory_s,
        } => {
            let w = ((window_s * fs).round() as usize).max(3) | 1;
            let half = w / 2;
            let r = (refractory_s * fs).round() as usize;
            let mut candidates = Vec::new();
            for i in 1..n - 1 {
                if s[i] > s[i - 1] && s[i] >= s[i + 1] {
                    let thr = local_threshold(s, i, half, *k_mad);
                    if s[i] > thr {
                        candidates.push((i, s[i]));
                    }
                }
            }
            apply_refractory(candidates, r)
        }
        Detector::DerivativeMax { refractory_s } => {
            let mut all: Vec<f64> = s.to_vec();
            let level = median_in_place(&mut all);
            // A segment must rise a meaningful fraction of the robust pulse
            // height above the level, otherwise ripple around the level
            // spawns spurious segments.
            let above: Vec<f64> = s.iter().map(|&v| v - level).collect();
            let floor = 0.05 * stats::percentile(&above, 95.0);
            let r = (refractory_s * fs).round() as usize;
            let mut candidates = Vec::new();
            let mut i = 1;
            while i < n {
                if s[i - 1] <= level && s[i] > level {
                    // Ascending segment: up-crossing to the next down-crossing.
                    let start = i;
                    let mut end = i;
                    let mut seg_max = f64::NEG_INFINITY;
                    while end + 1 < n && s[end] > level {
                        seg_max = seg_max.max(s[end] - level);
                        end += 1;
                    }
                    if seg_max >= floor {
                        let mut best = start.saturating_sub(1);
                        let mut best_slope = f64::NEG_INFINITY;
                        for j in start.saturating_sub(1)..end.min(n - 1) {
                            let slope = s[j + 1] - s[j];
                            if slope > best_slope {
                                best_slope = slope;
                                best = j;
                            }
                        }
                        candidates.push((best, best_slope));
                    }
                    i = end + 1;
                } else {
                    i += 1;
                }
            }
            apply_refractory(candidates, r)
        }
    };
    if indices.is_empty() {
        return Err(Error::NoCyclesDetected);
    }
    LandmarkSequence::new(indices, fs)
}

/// Quality gate configuration for [`reject_bad_pulses_with`].
#[derive(Debug, Clone, Copy)]
pub struct PulseQualityConfig {
    /// A pulse is dropped when it holds more wide maxima than this.
    pub max_wide_maxima: usize,
    /// Prominence floor as a fraction of the pulse's value range.
    pub prominence_frac: f64,
    /// Width floor (at half prominence) in milliseconds.
    pub min_width_ms: f64,
}

impl Default for PulseQualityConfig {
    fn default() -> Self {
        Self {
            max_wide_maxima: 3,
            prominence_frac: 0.25,
            min_width_ms: 50.0,
        }
    }
}

/// Drops landmarks whose following interval contains more than
/// `max_wide_maxima` significantly wide local maxima (default prominence and
/// width rules).
pub fn reject_bad_pulses(
    x: &TimeSeries,
    lm: &LandmarkSequence,
    max_wide_maxima: usize,
) -> Result<LandmarkSequence> {
    reject_bad_pulses_with(
        x,
        lm,
        &PulseQualityConfig {
            max_wide_maxima,
            ..Default::default()
        },
    )
}

/// [`reject_bad_pulses`] with explicit prominence and width rules.
pub fn reject_bad_pulses_with(
    x: &TimeSeries,
    lm: &LandmarkSequence,
    cfg: &PulseQualityConfig,
) -> Result<LandmarkSequence> {
    let s = x.samples();
    let n = s.len();
    let w_min = (cfg.min_width_ms * x.fs() / 1000.0).round() as usize;
    let idx = lm.indices();
    let mut kept = Vec::new();
    for (i, &start) in idx.iter().enumerate() {
        let end = if i + 1 < idx.len() { idx[i + 1] } else { n };
        if start >= n {
            continue;
        }
        let seg = &s[start..end.min(n)];
        let count = wide_maxima_count(seg, cfg.prominence_frac, w_min);
        if count <= cfg.max_wide_maxima {
            kept.push(start);
        } else {
            log::warn!(
                "pulse at sample {start} rejected: {count} wide maxima (limit {})",
                cfg.max_wide_maxima
            );
        }
    }
    if kept.is_empty() {
        return Err(Error::AllPulsesRejected);
    }
    LandmarkSequence::new(kept, lm.fs())
}

fn wide_maxima_count(seg: &[f64], prominence_frac: f64, w_min: usize) -> usize {
    let m = seg.len();
    if m < 3 {
        return 0;
    }
    let lo = seg.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = seg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range <= 0.0 {
        return 0;
    }
    let q = prominence_frac * range;
    let mut count = 0;
    for j in 1..m - 1 {
        if !(seg[j] > seg[j - 1] && seg[j] >= seg[j + 1]) {
            continue;
        }
        // Prominence against the higher of the two side minima inside the
        // pulse.
        let left_min = seg[..j].iter().cloned().fold(f64::INFINITY, f64::min);
        let right_min = seg[j + 1..].iter().cloned().fold(f64::INFINITY, f64::min);
        let prom = seg[j] - left_min.max(right_min);
        if prom < q {
            continue;
        }
        // Width: contiguous run around j staying above half prominence.
        let half_level = seg[j] - 0.5 * prom;
        let mut a = j;
        while a > 0 && seg[a - 1] >= half_level {
            a -= 1;
        }
        let mut b = j;
        while b + 1 < m && seg[b + 1] >= half_level {
            b += 1;
        }
        if b - a + 1 >= w_min {
            count += 1;
        }
    }
    count
}

/// Fixed-window cycle matrix. Row `i` holds the samples around landmark `i`;
/// the landmark sits at column `landmark_col()`.
#[derive(Debug, Clone)]
pub struct CycleMatrix {
    pub rows: Array2<f64>,
    pub left_ms: f64,
    pub right_ms: f64,
    pub fs: f64,
    /// Landmarks whose windows fit in bounds, in row order.
    pub landmark_indices: Vec<usize>,
    pub normalized: bool,
    left_samples: usize,
}

impl CycleMatrix {
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn p(&self) -> usize {
        self.rows.ncols()
    }

    /// Column index of the landmark within each row.
    pub fn landmark_col(&self) -> usize {
        self.left_samples
    }

    /// Reassembles a matrix from exported parts, e.g. when reading back a
    /// CSV export.
    pub fn from_parts(
        rows: Array2<f64>,
        left_ms: f64,
        right_ms: f64,
        fs: f64,
        landmark_indices: Vec<usize>,
        normalized: bool,
        landmark_col: usize,
    ) -> Result<Self> {
        if landmark_indices.len() != rows.nrows() || landmark_col >= rows.ncols().max(1) {
            return Err(Error::Malformed {
                what: "cycle matrix".into(),
                detail: format!(
                    "{} rows, {} landmarks, landmark column {landmark_col}",
                    rows.nrows(),
                    landmark_indices.len()
                ),
            });
        }
        Ok(CycleMatrix {
            rows,
            left_ms,
            right_ms,
            fs,
            landmark_indices,
            normalized,
            left_samples: landmark_col,
        })
    }
}

/// Cuts one window per landmark: `left_ms` before to `right_ms` after, so
/// `p = floor(left_ms fs / 1000) + floor(right_ms fs / 1000) + 1` columns.
/// Landmarks whose window leaves the signal are dropped with a warning.
pub fn excise_cycles(
    x: &TimeSeries,
    lm: &LandmarkSequence,
    left_ms: f64,
    right_ms: f64,
) -> Result<CycleMatrix> {
    if !left_ms.is_finite() || !right_ms.is_finite() || left_ms < 0.0 || right_ms < 0.0 {
        return Err(Error::Malformed {
            what: "window".into(),
            detail: format!("left {left_ms} ms, right {right_ms} ms"),
        });
    }
    let fs = x.fs();
    let a = (left_ms * fs / 1000.0).floor() as usize;
    let b = (right_ms * fs / 1000.0).floor() as usize;
    excise_cycles_samples(x, lm, a, b, left_ms, right_ms)
}

/// Sample-domain excision: `a` samples before each landmark through `b`
/// after it. Used directly for pulse delineation where the window is the
/// minimum inter-landmark interval, `[a_i, a_i + L)`.
pub fn excise_cycles_samples(
    x: &TimeSeries,
    lm: &LandmarkSequence,
    a: usize,
    b: usize,
    left_ms: f64,
    right_ms: f64,
) -> Result<CycleMatrix> {
    let p = a + b + 1;
    if p <= 2 {
        return Err(Error::WindowTooNarrow(p));
    }
    let s = x.samples();
    let n = s.len();
    let mut kept_rows: Vec<&[f64]> = Vec::new();
    let mut kept_idx = Vec::new();
    for &t in lm.indices() {
        if t < a || t + b >= n {
            log::warn!(
                "landmark at sample {t} dropped: window [{a} left, {b} right] out of bounds"
            );
            continue;
        }
        kept_rows.push(&s[t - a..=t + b]);
        kept_idx.push(t);
    }
    if kept_rows.is_empty() {
        return Err(Error::NoCyclesInBounds);
    }
    let mut rows = Array2::zeros((kept_rows.len(), p));
    for (i, r) in kept_rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            rows[[i, j]] = v;
        }
    }
    Ok(CycleMatrix {
        rows,
        left_ms,
        right_ms,
        fs: x.fs(),
        landmark_indices: kept_idx,
        normalized: false,
        left_samples: a,
    })
}

/// Centers each row and divides by its population standard deviation.
pub fn normalize_cycles(x: &CycleMatrix) -> Result<CycleMatrix> {
    let mut rows = x.rows.clone();
    for (i, mut row) in rows.rows_mut().into_iter().enumerate() {
        let v = row.as_slice_mut().expect("contiguous row");
        let mu = stats::mean(v);
        let sigma = stats::population_std(v);
        if sigma == 0.0 {
            return Err(Error::DegenerateCycle(i));
        }
        for s in v.iter_mut() {
            *s = (*s - mu) / sigma;
        }
    }
    Ok(CycleMatrix {
        rows,
        left_ms: x.left_ms,
        right_ms: x.right_ms,
        fs: x.fs,
        landmark_indices: x.landmark_indices.clone(),
        normalized: true,
        left_samples: x.left_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_template, synth_waveshape_model, DynamicsProcess};

    fn bump_train(fs: f64, duration: f64, noise: f64, seed: u64) -> crate::synth::SyntheticDataset {
        let bank = vec![make_template("gauss_bump", 256).unwrap()];
        let process = DynamicsProcess::IidOnManifold {
            template: 0,
            a_range: (1.0, 1.0),
            f_range: (4.0, 4.0),
            period_s: 1.0,
        };
        synth_waveshape_model(&bank, &process, fs, duration, noise, seed).unwrap()
    }

    #[test]
    fn noiseless_train_detected_exactly() {
        let ds = bump_train(200.0, 12.0, 0.0, 5);
        let lm = detect_landmarks(&ds.signal, &Detector::default_peak()).unwrap();
        assert_eq!(lm.len(), ds.landmarks.len());
        for (&det, &truth) in lm.indices().iter().zip(ds.landmarks.indices()) {
            assert!(det.abs_diff(truth) <= 1, "detected {det}, true {truth}");
        }
    }

    #[test]
    fn noisy_train_keeps_high_recall_and_precision() {
        let ds = bump_train(200.0, 120.0, 0.05, 6);
        let lm = detect_landmarks(&ds.signal, &Detector::default_peak()).unwrap();
        let tol = (0.030 * 200.0) as usize;
        let truth = ds.landmarks.indices();
        let hits = truth
            .iter()
            .filter(|&&t| lm.indices().iter().any(|&d| d.abs_diff(t) <= tol))
            .count();
        let recall = hits as f64 / truth.len() as f64;
        let matched = lm
            .indices()
            .iter()
            .filter(|&&d| truth.iter().any(|&t| d.abs_diff(t) <= tol))
            .count();
        let precision = matched as f64 / lm.len() as f64;
        assert!(recall >= 0.99, "recall {recall}");
        assert!(precision >= 0.99, "precision {precision}");
    }

    #[test]
    fn flat_signal_has_no_cycles() {
        let x = TimeSeries::new(vec![0.0; 2000], 200.0, 0.0).unwrap();
        match detect_landmarks(&x, &Detector::default_peak()) {
            Err(Error::NoCyclesDetected) => {}
            other => panic!("expected no-cycle error, got {other:?}"),
        }
    }

    #[test]
    fn external_landmarks_are_bounds_checked() {
        let x = TimeSeries::new(vec![0.0; 100], 100.0, 0.0).unwrap();
        let lm = detect_landmarks(&x, &Detector::External(vec![10, 40, 80])).unwrap();
        assert_eq!(lm.indices(), &[10, 40, 80]);
        assert!(matches!(
            detect_landmarks(&x, &Detector::External(vec![10, 120])),
            Err(Error::LandmarkOutOfBounds { index: 120, .. })
        ));
    }

    #[test]
    fn upstroke_detector_fires_once_per_pulse() {
        let bank = vec![make_template("abp_like", 256).unwrap()];
        let process = DynamicsProcess::IidOnManifold {
            template: 0,
            a_range: (1.0, 1.0),
            f_range: (1.25, 1.25),
            period_s: 1.0,
        };
        let ds = synth_waveshape_model(&bank, &process, 125.0, 30.0, 0.0, 7).unwrap();
        let lm = detect_landmarks(&ds.signal, &Detector::default_upstroke()).unwrap();
        assert_eq!(lm.len(), ds.landmarks.len());
        // The upstroke sits at a fixed offset before each pulse peak, so the
        // detected-minus-true offsets should agree across pulses.
        let offsets: Vec<i64> = lm
            .indices()
            .iter()
            .zip(ds.landmarks.indices())
            .map(|(&d, &t)| d as i64 - t as i64)
            .collect();
        let spread = offsets.iter().max().unwrap() - offsets.iter().min().unwrap();
        assert!(spread <= 2, "offsets {offsets:?}");
    }

    fn pulse_train(noise: f64, seed: u64) -> crate::synth::SyntheticDataset {
        let bank = vec![make_template("abp_like", 256).unwrap()];
        let process = DynamicsProcess::IidOnManifold {
            template: 0,
            a_range: (1.0, 1.0),
            f_range: (1.25, 1.25),
            period_s: 1.0,
        };
        synth_waveshape_model(&bank, &process, 125.0, 12.0, noise, seed).unwrap()
    }

    #[test]
    fn corrupted_interval_is_rejected() {
        let mut ds = pulse_train(0.0, 8);
        // Landmarks as pulse onsets (50 samples before the nominal center)
        // so each interval holds one systolic peak.
        let onsets: Vec<usize> = ds.landmarks.indices().iter().map(|&i| i - 50).collect();
        let lm = LandmarkSequence::new(onsets, 125.0).unwrap();
        let clean = reject_bad_pulses(&ds.signal, &lm, 3).unwrap();
        assert_eq!(clean.len(), lm.len());

        // Corrupt the fourth interval with five wide bumps (~96 ms each).
        let t0 = lm.indices()[3];
        let mut samples = ds.signal.samples().to_vec();
        for b in 0..5 {
            let center = t0 + 15 + 18 * b;
            for j in 0..12 {
                let u = (j as f64 - 5.5) / 5.5;
                samples[center + j] += 0.9 * (1.0 - u * u);
            }
        }
        ds.signal = TimeSeries::new(samples, 125.0, 0.0).unwrap();
        let kept = reject_bad_pulses(&ds.signal, &lm, 3).unwrap();
        assert_eq!(kept.len(), lm.len() - 1);
        assert!(!kept.indices().contains(&t0));
    }

    #[test]
    fn zero_allowed_maxima_rejects_clean_train() {
        let ds = pulse_train(0.0, 9);
        let onsets: Vec<usize> = ds.landmarks.indices().iter().map(|&i| i - 50).collect();
        let lm = LandmarkSequence::new(onsets, 125.0).unwrap();
        match reject_bad_pulses(&ds.signal, &lm, 0) {
            Err(Error::AllPulsesRejected) => {}
            other => panic!("expected rejection error, got {other:?}"),
        }
    }

    #[test]
    fn excision_window_arithmetic() {
        let ds = bump_train(200.0, 12.0, 0.0, 10);
        let m = excise_cycles(&ds.signal, &ds.landmarks, 80.0, 400.0).unwrap();
        assert_eq!(m.p(), 97);
        assert_eq!(m.landmark_col(), 16);
        assert_eq!(m.n(), ds.landmarks.len());
        // Row content is the literal window slice.
        let x = ds.signal.samples();
        let t = ds.landmarks.indices()[2];
        for j in 0..97 {
            assert_eq!(m.rows[[2, j]], x[t - 16 + j]);
        }
    }

    #[test]
    fn out_of_bounds_windows_are_dropped() {
        let x = TimeSeries::new((0..1000).map(|i| i as f64).collect(), 200.0, 0.0).unwrap();
        let lm = LandmarkSequence::new(vec![5, 500, 990], 200.0).unwrap();
        let m = excise_cycles(&x, &lm, 80.0, 400.0).unwrap();
        // 5 < 16 and 990 + 80 >= 1000, so only the middle landmark stays.
        assert_eq!(m.n(), 1);
        assert_eq!(m.landmark_indices, vec![500]);

        let lm_bad = LandmarkSequence::new(vec![5], 200.0).unwrap();
        assert!(matches!(
            excise_cycles(&x, &lm_bad, 80.0, 400.0),
            Err(Error::NoCyclesInBounds)
        ));
        assert!(matches!(
            excise_cycles(&x, &lm, 0.0, 5.0),
            Err(Error::WindowTooNarrow(2))
        ));
    }

    #[test]
    fn excision_reproduces_stored_cycles() {
        // Disjoint supports and no noise: the excised window must equal the
        // stored rendering wherever they overlap, bit for bit.
        let bank = vec![make_template("gauss_bump", 256).unwrap()];
        let process = DynamicsProcess::IidOnManifold {
            template: 0,
            a_range: (0.9, 1.1),
            f_range: (2.0, 3.0),
            period_s: 1.0,
        };
        let ds = synth_waveshape_model(&bank, &process, 100.0, 15.0, 0.0, 11).unwrap();
        assert_eq!(ds.overlap_fraction, 0.0);
        let m = excise_cycles(&ds.signal, &ds.landmarks, 150.0, 150.0).unwrap();
        assert_eq!(m.n(), ds.landmarks.len());
        let stored = ds.stored_cycles.as_ref().unwrap();
        let a = m.landmark_col();
        for (row, (&t, sc)) in m
            .rows
            .rows()
            .into_iter()
            .zip(ds.landmarks.indices().iter().zip(stored))
        {
            for j in 0..m.p() {
                let sig_idx = t - a + j;
                if sig_idx >= sc.start && sig_idx < sc.start + sc.samples.len() {
                    assert_eq!(row[j], sc.samples[sig_idx - sc.start]);
                }
            }
        }
    }

    #[test]
    fn normalization_matches_hand_values_and_is_idempotent() {
        let x = TimeSeries::new(vec![0.0, 1.0, 2.0, 3.0, 0.0, 0.0], 1000.0, 0.0).unwrap();
        let lm = LandmarkSequence::new(vec![2], 1000.0).unwrap();
        let m = excise_cycles(&x, &lm, 1.0, 1.0).unwrap();
        assert_eq!(m.p(), 3);
        let z = normalize_cycles(&m).unwrap();
        // (1,2,3) with population std sqrt(2/3): (-1.2247, 0, 1.2247).
        let e = 1.5f64.sqrt();
        assert!((z.rows[[0, 0]] + e).abs() < 1e-12);
        assert!(z.rows[[0, 1]].abs() < 1e-12);
        assert!((z.rows[[0, 2]] - e).abs() < 1e-12);
        assert!((z.rows[[0, 0]] + 1.2247).abs() < 1e-4);

        let zz = normalize_cycles(&z).unwrap();
        for (u, v) in zz.rows.iter().zip(z.rows.iter()) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(z.normalized);
    }

    #[test]
    fn normalization_is_affine_invariant() {
        let ds = bump_train(200.0, 12.0, 0.01, 12);
        let m = excise_cycles(&ds.signal, &ds.landmarks, 80.0, 400.0).unwrap();
        let z1 = normalize_cycles(&m).unwrap();
        let mut shifted = m.clone();
        shifted.rows.mapv_inplace(|v| 3.5 * v - 2.0);
        let z2 = normalize_cycles(&shifted).unwrap();
        for (u, v) in z1.rows.iter().zip(z2.rows.iter()) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_row_is_degenerate() {
        let x = TimeSeries::new(vec![2.0; 100], 100.0, 0.0).unwrap();
        let lm = LandmarkSequence::new(vec![50], 100.0).unwrap();
        let m = excise_cycles(&x, &lm, 100.0, 100.0).unwrap();
        match normalize_cycles(&m) {
            Err(Error::DegenerateCycle(0)) => {}
            other => panic!("expected degenerate-cycle error, got {other:?}"),
        }
    }

    #[test]
    fn external_pipeline_is_deterministic() {
        let ds = bump_train(200.0, 20.0, 0.02, 13);
        let run = || {
            let lm = detect_landmarks(
                &ds.signal,
                &Detector::External(ds.landmarks.indices().to_vec()),
            )
            .unwrap();
            let m = excise_cycles(&ds.signal, &lm, 80.0, 400.0).unwrap();
            normalize_cycles(&m).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.landmark_indices, b.landmark_indices);
    }
}
