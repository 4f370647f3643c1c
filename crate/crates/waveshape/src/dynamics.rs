//! Pipeline orchestration and downstream analytics: SVD compression of the
//! embedding, sign clustering for ectopy, spline interpolation of traces
//! and sliding normalization.

use ndarray::Array2;

use crate::cycles::{
    detect_landmarks, excise_cycles, excise_cycles_samples, normalize_cycles,
    reject_bad_pulses_with, CycleMatrix, Detector, LandmarkSequence, PulseQualityConfig,
};
use crate::diffusion::{embed_points, BandwidthRule, DiffusionEmbedding, KernelConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::preprocess::{
    butterworth_lowpass_bidirectional, detrend_median, remove_baseline_two_step,
};
use crate::spline::CubicSpline;
use crate::timeseries::TimeSeries;

/// What a trace holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceSource {
    SvdU,
    EmbeddingCoord(usize),
    NormalizedV,
}

/// A scalar time series derived from the embedding, sampled either at the
/// landmark times or on a uniform grid after interpolation.
#[derive(Debug, Clone)]
pub struct DynamicsTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub source: TraceSource,
    /// Per-cycle labels when the trace is aligned with landmarks:
    /// 0 normal, 1 ectopic.
    pub cluster_labels: Option<Vec<u8>>,
}

impl DynamicsTrace {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        source: TraceSource,
        cluster_labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Malformed {
                what: "trace".into(),
                detail: format!("{} times vs {} values", times.len(), values.len()),
            });
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) {
                return Err(Error::Malformed {
                    what: "trace times".into(),
                    detail: format!("not increasing at position {i}"),
                });
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index: i });
        }
        Ok(DynamicsTrace {
            times,
            values,
            source,
            cluster_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Index partition by the sign of the compressed trace.
#[derive(Debug, Clone)]
pub struct ClusterResult {
    /// Indices with U(i) >= 0.
    pub c1: Vec<usize>,
    /// Indices with U(i) < 0.
    pub c2: Vec<usize>,
    ectopic_is_c1: bool,
    pub warnings: Vec<String>,
}

impl ClusterResult {
    /// The smaller set. On an exact tie C1 is declared ectopic.
    pub fn ectopic_set(&self) -> &[usize] {
        if self.ectopic_is_c1 {
            &self.c1
        } else {
            &self.c2
        }
    }

    /// The larger set, assumed to hold the dominant morphology.
    pub fn normal_set(&self) -> &[usize] {
        if self.ectopic_is_c1 {
            &self.c2
        } else {
            &self.c1
        }
    }

    /// Per-index labels, 0 normal and 1 ectopic, for `n` cycles.
    pub fn labels(&self, n: usize) -> Vec<u8> {
        let mut out = vec![0u8; n];
        for &i in self.ectopic_set() {
            if i < n {
                out[i] = 1;
            }
        }
        out
    }
}

/// Baseline handling before detection.
#[derive(Debug, Clone)]
pub enum BaselineRule {
    /// Cascaded 200 ms and 600 ms median filters, subtracted.
    TwoStepMedian,
    /// Single median detrend with the given window.
    MedianDetrend {
        window_s: f64,
    },
    None,
}

/// Filtering applied before landmark detection.
#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    /// Low-pass (order, cutoff in Hz), applied forward and backward.
    pub lowpass: Option<(usize, f64)>,
    pub baseline: BaselineRule,
}

/// How the excision window is chosen.
#[derive(Debug, Clone)]
pub enum WindowRule {
    FixedMs {
        left_ms: f64,
        right_ms: f64,
    },
    /// `[a_i, a_i + L)` with L the minimum landmark interval.
    MinInterval,
}

/// Everything `ddmap` needs, with presets for the two reference pipelines.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub preprocess: PreprocessConfig,
    pub detector: Detector,
    pub quality: Option<PulseQualityConfig>,
    pub window: WindowRule,
    pub normalize: bool,
    pub kernel: KernelConfig,
    /// 1-based embedding coordinate feeding the respiratory trace.
    pub edr_coord: usize,
}

impl PipelineConfig {
    /// ECG defaults: 40 Hz low-pass, two-step baseline removal, peak
    /// landmarks, an 80/400 ms window, no per-cycle normalization,
    /// alpha 1, t 10, d 32, all-pairs quartile bandwidth.
    pub fn ecg() -> Self {
        PipelineConfig {
            preprocess: PreprocessConfig {
                lowpass: Some((3, 40.0)),
                baseline: BaselineRule::TwoStepMedian,
            },
            detector: Detector::default_peak(),
            quality: None,
            window: WindowRule::FixedMs {
                left_ms: 80.0,
                right_ms: 400.0,
            },
            normalize: false,
            kernel: KernelConfig {
                bandwidth_rule: BandwidthRule::QuartileAllPairs,
                alpha: 1.0,
                zero_diagonal: false,
                t: 10.0,
                d: 32,
            },
            edr_coord: 1,
        }
    }

    /// Pulse-waveform defaults: 2 s median detrend, steepest-upstroke
    /// landmarks, quality rejection, minimum-interval window, per-pulse
    /// z-normalization, alpha 1, t 1, kth-neighbor bandwidth (k 40,
    /// 25th percentile).
    pub fn abp() -> Self {
        PipelineConfig {
            preprocess: PreprocessConfig {
                lowpass: None,
                baseline: BaselineRule::MedianDetrend { window_s: 2.0 },
            },
            detector: Detector::default_upstroke(),
            quality: Some(PulseQualityConfig::default()),
            window: WindowRule::MinInterval,
            normalize: true,
            kernel: KernelConfig {
                bandwidth_rule: BandwidthRule::KnnPercentile { k: 40, pct: 25.0 },
                alpha: 1.0,
                zero_diagonal: false,
                t: 1.0,
                d: 3,
            },
            edr_coord: 1,
        }
    }
}

/// Output of the full pipeline.
#[derive(Debug, Clone)]
pub struct DdmapResult {
    pub embedding: DiffusionEmbedding,
    pub landmarks: LandmarkSequence,
    pub cycles: CycleMatrix,
    pub preprocessed: TimeSeries,
    pub warnings: Vec<String>,
}

/// Runs detection, quality rejection, excision, optional normalization and
/// the diffusion embedding on one signal.
pub fn ddmap(x: &TimeSeries, config: &PipelineConfig) -> Result<DdmapResult> {
    let mut warnings = Vec::new();
    let mut y = x.clone();
    if let Some((order, cutoff)) = config.preprocess.lowpass {
        y = butterworth_lowpass_bidirectional(&y, order, cutoff)?;
    }
    y = match &config.preprocess.baseline {
        BaselineRule::TwoStepMedian => remove_baseline_two_step(&y)?,
        BaselineRule::MedianDetrend { window_s } => {
            let (out, w) = detrend_median(&y, *window_s, None)?;
            warnings.extend(w);
            out
        }
        BaselineRule::None => y,
    };

    let mut landmarks = detect_landmarks(&y, &config.detector)?;
    if let Some(q) = &config.quality {
        let before = landmarks.len();
        landmarks = reject_bad_pulses_with(&y, &landmarks, q)?;
        if landmarks.len() < before {
            warnings.push(format!(
                "{} of {before} pulses rejected by the quality rule",
                before - landmarks.len()
            ));
        }
    }

    let cycles = match config.window {
        WindowRule::FixedMs { left_ms, right_ms } => {
            excise_cycles(&y, &landmarks, left_ms, right_ms)?
        }
        WindowRule::MinInterval => {
            let l = landmarks
                .min_interval_samples()
                .ok_or(Error::TooFewCycles {
                    got: landmarks.len(),
                    min: 2,
                })?;
            let right_ms = (l - 1) as f64 * 1000.0 / y.fs();
            excise_cycles_samples(&y, &landmarks, 0, l - 1, 0.0, right_ms)?
        }
    };
    let cycles = if config.normalize {
        normalize_cycles(&cycles)?
    } else {
        cycles
    };

    config.kernel.validate(cycles.n())?;
    let embedding = embed_points(&cycles.rows, &config.kernel)?;
    warnings.extend(embedding.warnings.clone());
    let kept = LandmarkSequence::new(cycles.landmark_indices.clone(), y.fs())?;
    Ok(DdmapResult {
        embedding,
        landmarks: kept,
        cycles,
        preprocessed: y,
        warnings,
    })
}

/// Top left-singular vector of the embedding matrix, unit norm, canonical
/// sign, indexed by the landmark times.
pub fn compress_svd(e: &Array2<f64>, times: &[f64]) -> Result<DynamicsTrace> {
    let n = e.nrows();
    let d = e.ncols();
    if times.len() != n {
        return Err(Error::Malformed {
            what: "trace times".into(),
            detail: format!("{} times for {n} rows", times.len()),
        });
    }
    if n == 0 || d == 0 || e.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    // Work on the small Gram matrix E^T E, then map its top eigenvector
    // back through E.
    let mut gram = Array2::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            let v: f64 = (0..n).map(|r| e[[r, i]] * e[[r, j]]).sum();
            gram[[i, j]] = v;
            gram[[j, i]] = v;
        }
    }
    let (_, vecs) = linalg::sym_eigen_topk(&gram, 1)?;
    let mut u: Vec<f64> = (0..n)
        .map(|r| (0..d).map(|c| e[[r, c]] * vecs[[c, 0]]).sum())
        .collect();
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    for v in u.iter_mut() {
        *v /= norm;
    }
    linalg::canonical_sign(&mut u);
    DynamicsTrace::new(times.to_vec(), u, TraceSource::SvdU, None)
}

/// Splits indices by the sign of U and calls the smaller set ectopic.
pub fn sign_cluster(u: &DynamicsTrace) -> Result<ClusterResult> {
    if u.is_empty() {
        return Err(Error::Malformed {
            what: "trace".into(),
            detail: "empty".into(),
        });
    }
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for (i, &v) in u.values.iter().enumerate() {
        if v >= 0.0 {
            c1.push(i);
        } else {
            c2.push(i);
        }
    }
    let mut warnings = Vec::new();
    let ectopic_is_c1 = if c1.len() < c2.len() {
        true
    } else if c2.len() < c1.len() {
        false
    } else {
        warnings.push("equal cluster sizes; C1 declared ectopic".to_string());
        true
    };
    if c1.is_empty() || c2.is_empty() {
        warnings.push("single morphology class".to_string());
    }
    Ok(ClusterResult {
        c1,
        c2,
        ectopic_is_c1,
        warnings,
    })
}

/// Natural cubic spline through `(times, values)` evaluated on a uniform
/// grid at `target_fs`, starting at the first support point and clipped to
/// the support span.
pub fn interpolate_trace(
    times: &[f64],
    values: &[f64],
    target_fs: f64,
    source: TraceSource,
) -> Result<DynamicsTrace> {
    if times.len() < 4 {
        return Err(Error::TooFewSupportPoints {
            got: times.len(),
            min: 4,
        });
    }
    if !(target_fs.is_finite() && target_fs > 0.0) {
        return Err(Error::InvalidSamplingRate(target_fs));
    }
    let spline = CubicSpline::natural(times, values)?;
    let t0 = times[0];
    let t_end = *times.last().unwrap();
    let count = ((t_end - t0) * target_fs).floor() as usize + 1;
    let mut grid = Vec::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let t = t0 + k as f64 / target_fs;
        grid.push(t);
        out.push(spline.eval(t));
    }
    DynamicsTrace::new(grid, out, source, None)
}

/// Centered moving z-score: at each sample the local mean is removed and
/// the result divided by the local root mean squared deviation. Windows
/// shrink at the edges; a zero deviation maps the sample to 0.
pub fn sliding_normalize(v: &DynamicsTrace, halfwidth: usize) -> Result<DynamicsTrace> {
    let n = v.len();
    if n < 2 * halfwidth + 1 {
        return Err(Error::TraceTooShort { got: n, halfwidth });
    }
    let mut out = Vec::with_capacity(n);
    let mut flat = 0usize;
    for i in 0..n {
        let lo = i.saturating_sub(halfwidth);
        let hi = (i + halfwidth).min(n - 1);
        let w = &v.values[lo..=hi];
        let m = w.iter().sum::<f64>() / w.len() as f64;
        let s2 = w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / w.len() as f64;
        let s = s2.sqrt();
        if s == 0.0 {
            flat += 1;
            out.push(0.0);
        } else {
            out.push((v.values[i] - m) / s);
        }
    }
    if flat > 0 {
        log::warn!("sliding normalization hit {flat} flat windows; output set to 0 there");
    }
    DynamicsTrace::new(v.times.clone(), out, TraceSource::NormalizedV, None)
}

/// Full respiratory-trace derivation.
#[derive(Debug, Clone)]
pub struct EdrResult {
    pub ddmap: DdmapResult,
    pub u: DynamicsTrace,
    pub clusters: ClusterResult,
    /// The chosen embedding coordinate over normal cycles, on the 4 Hz grid.
    pub v: DynamicsTrace,
    /// `v` after sliding normalization.
    pub vhat: DynamicsTrace,
    pub warnings: Vec<String>,
}

pub const EDR_GRID_HZ: f64 = 4.0;
pub const EDR_NORMALIZE_HALFWIDTH: usize = 10;

/// Runs the pipeline, compresses and clusters the embedding, restricts the
/// chosen coordinate to normal cycles, and interpolates and normalizes it.
pub fn derive_edr(x: &TimeSeries, config: &PipelineConfig) -> Result<EdrResult> {
    let dd = ddmap(x, config)?;
    let times = dd.landmarks.times();
    let mut u = compress_svd(&dd.embedding.coords, &times)?;
    let clusters = sign_cluster(&u)?;
    u.cluster_labels = Some(clusters.labels(u.len()));

    let coord = config.edr_coord;
    if coord < 1 || coord > dd.embedding.coords.ncols() {
        return Err(Error::Malformed {
            what: "trace coordinate".into(),
            detail: format!(
                "coordinate {coord} of {} available",
                dd.embedding.coords.ncols()
            ),
        });
    }
    let normal = clusters.normal_set();
    let sup_times: Vec<f64> = normal.iter().map(|&i| times[i]).collect();
    let sup_values: Vec<f64> = normal
        .iter()
        .map(|&i| dd.embedding.coords[[i, coord - 1]])
        .collect();
    let v = interpolate_trace(
        &sup_times,
        &sup_values,
        EDR_GRID_HZ,
        TraceSource::EmbeddingCoord(coord),
    )?;
    let vhat = sliding_normalize(&v, EDR_NORMALIZE_HALFWIDTH)?;
    let mut warnings = dd.warnings.clone();
    warnings.extend(clusters.warnings.clone());
    Ok(EdrResult {
        ddmap: dd,
        u,
        clusters,
        v,
        vhat,
        warnings,
    })
}
