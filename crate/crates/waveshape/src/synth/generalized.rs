//! Generalized generator: adaptive harmonic sum
//! `x(t) = B(t) + sum_k A_k(t) cos(2 pi phi_k(t))`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cycles::LandmarkSequence;
use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

use super::phenom::grid_len;
use super::{CycleParams, Modulators, SyntheticDataset, TimeFn};

/// One harmonic: instantaneous amplitude and phase (in cycles).
#[derive(Clone)]
pub struct HarmonicComponent {
    pub amplitude: TimeFn,
    pub phase: TimeFn,
}

/// Inputs for the generalized generator. Component 0 is the fundamental.
#[derive(Clone)]
pub struct GeneralizedSpec {
    pub components: Vec<HarmonicComponent>,
    pub baseline: Option<TimeFn>,
    pub noise_std: f64,
    pub fs: f64,
    pub duration: f64,
    /// Slow-variation budget applied to every component.
    pub epsilon: f64,
    pub seed: u64,
}

/// Diagnostics from the generalized generator.
#[derive(Debug, Clone, Default)]
pub struct GeneralizedReport {
    /// For harmonic k >= 1 (index k-1 here is component index 1, ...): the
    /// largest relative deviation of its rate from `(k+1)` times the
    /// fundamental rate.
    pub harmonic_rate_deviation: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Renders the adaptive harmonic model. Fails if any component breaks the
/// slow-variation conditions or has a non-increasing phase; harmonics whose
/// rates drift off integer multiples of the fundamental only cause warnings.
pub fn synth_generalized(spec: &GeneralizedSpec) -> Result<(SyntheticDataset, GeneralizedReport)> {
    if spec.components.is_empty() {
        return Err(Error::NoHarmonics);
    }
    if spec.noise_std < 0.0 || !spec.noise_std.is_finite() {
        return Err(Error::Malformed {
            what: "noise_std".into(),
            detail: format!("{}", spec.noise_std),
        });
    }
    let n = grid_len(spec.fs, spec.duration)?;
    let dt = 1.0 / spec.fs;

    // Per-component grids, monotonicity, slow variation.
    let mut amp_grids = Vec::with_capacity(spec.components.len());
    let mut phase_grids = Vec::with_capacity(spec.components.len());
    for comp in spec.components.iter() {
        let a: Vec<f64> = (0..n).map(|i| (comp.amplitude)(i as f64 * dt)).collect();
        let p: Vec<f64> = (0..n).map(|i| (comp.phase)(i as f64 * dt)).collect();
        for i in 1..n {
            if p[i] <= p[i - 1] {
                return Err(Error::PhaseNotIncreasing { at: i as f64 * dt });
            }
        }
        let mut amp_ratio = 0.0f64;
        let mut accel_ratio = 0.0f64;
        for i in 1..n - 1 {
            let dphi = (p[i + 1] - p[i - 1]) / (2.0 * dt);
            if dphi <= 0.0 {
                return Err(Error::PhaseNotIncreasing { at: i as f64 * dt });
            }
            let da = (a[i + 1] - a[i - 1]) / (2.0 * dt);
            let d2phi = (p[i + 1] - 2.0 * p[i] + p[i - 1]) / (dt * dt);
            amp_ratio = amp_ratio.max(da.abs() / dphi);
            accel_ratio = accel_ratio.max(d2phi.abs() / dphi);
        }
        if amp_ratio > spec.epsilon || accel_ratio > spec.epsilon {
            return Err(Error::SlowVariationViolated {
                amp_ratio,
                accel_ratio,
                epsilon: spec.epsilon,
            });
        }
        amp_grids.push(a);
        phase_grids.push(p);
    }

    // Rate deviation of each overtone from the integer multiple of the
    // fundamental rate.
    let mut report = GeneralizedReport::default();
    for k in 1..spec.components.len() {
        let mult = (k + 1) as f64;
        let mut dev = 0.0f64;
        for i in 1..n - 1 {
            let d1 = phase_grids[0][i + 1] - phase_grids[0][i - 1];
            let dk = phase_grids[k][i + 1] - phase_grids[k][i - 1];
            dev = dev.max((dk - mult * d1).abs() / d1);
        }
        report.harmonic_rate_deviation.push(dev);
        if dev > spec.epsilon {
            report.warnings.push(format!(
                "harmonic {} rate deviates from {} x fundamental by up to {:.3} (relative)",
                k + 1,
                k + 1,
                dev
            ));
        }
    }

    let two_pi = 2.0 * std::f64::consts::PI;
    let mut samples = vec![0.0f64; n];
    for i in 0..n {
        let mut v = match &spec.baseline {
            Some(b) => b(i as f64 * dt),
            None => 0.0,
        };
        for k in 0..spec.components.len() {
            v += amp_grids[k][i] * (two_pi * phase_grids[k][i]).cos();
        }
        samples[i] = v;
    }
    if spec.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_std).expect("std validated above");
        for s in samples.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }

    // Landmarks at integer crossings of the fundamental phase.
    let fundamental = &spec.components[0];
    let p0 = &phase_grids[0];
    let k_lo = p0[0].ceil() as i64;
    let k_hi = p0[n - 1].floor() as i64;
    let mut landmark_idx = Vec::new();
    let mut cycle_params = Vec::new();
    let mut cursor = 0usize;
    for k in k_lo..=k_hi {
        let target = k as f64;
        while cursor + 1 < n && p0[cursor + 1] < target {
            cursor += 1;
        }
        let (mut lo, mut hi) = (cursor as f64 * dt, (cursor + 1) as f64 * dt);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if (fundamental.phase)(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t_k = 0.5 * (lo + hi);
        let idx = (t_k * spec.fs).round() as i64;
        if idx < 0 || idx >= n as i64 || landmark_idx.last() == Some(&(idx as usize)) {
            continue;
        }
        landmark_idx.push(idx as usize);
        let h = 1e-5;
        let rate = ((fundamental.phase)(t_k + h) - (fundamental.phase)(t_k - h)) / (2.0 * h);
        cycle_params.push(CycleParams {
            a: (fundamental.amplitude)(t_k),
            f: rate,
            class: 0,
        });
    }
    if landmark_idx.is_empty() {
        return Err(Error::NoCyclesDetected);
    }

    let mut inst = vec![0.0; n];
    for i in 1..n - 1 {
        inst[i] = (p0[i + 1] - p0[i - 1]) * spec.fs / 2.0;
    }
    inst[0] = (p0[1] - p0[0]) * spec.fs;
    inst[n - 1] = (p0[n - 1] - p0[n - 2]) * spec.fs;

    let origin = serde_json::json!({
        "model": "generalized_harmonic",
        "harmonics": spec.components.len(),
        "fs": spec.fs,
        "duration": spec.duration,
        "noise_std": spec.noise_std,
        "epsilon": spec.epsilon,
        "seed": spec.seed,
    });

    let dataset = SyntheticDataset {
        signal: TimeSeries::new(samples, spec.fs, 0.0)?,
        landmarks: LandmarkSequence::new(landmark_idx, spec.fs)?,
        cycle_params,
        modulators: Modulators {
            amp: Some(amp_grids.swap_remove(0)),
            inst_freq: Some(inst),
        },
        stored_cycles: None,
        overlap_fraction: 0.0,
        origin,
    };
    Ok((dataset, report))
}
