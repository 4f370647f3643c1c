//! Phenomenological generator: `x(t) = a(t) s(phi(t)) + trend + noise`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cycles::LandmarkSequence;
use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

use super::templates::WaveShapeTemplate;
use super::{CycleParams, Modulators, SyntheticDataset, TimeFn};

/// Inputs for the phenomenological generator.
#[derive(Clone)]
pub struct PhenomenologicalSpec {
    pub amplitude: TimeFn,
    pub phase: TimeFn,
    pub template: WaveShapeTemplate,
    pub trend: Option<TimeFn>,
    pub noise_std: f64,
    pub fs: f64,
    pub duration: f64,
    /// Slow-variation budget: `|a'| <= eps * phi'` and `|phi''| <= eps * phi'`
    /// must hold on the sampling grid.
    pub epsilon: f64,
    pub seed: u64,
}

/// Grid-level slow-variation diagnostics.
#[derive(Debug, Clone)]
pub struct SlowVariationReport {
    /// max over the grid of |a'(t)| / phi'(t)
    pub amp_ratio: f64,
    /// max over the grid of |phi''(t)| / phi'(t)
    pub accel_ratio: f64,
    pub phase_strictly_increasing: bool,
    pub pass: bool,
}

pub(super) fn grid_len(fs: f64, duration: f64) -> Result<usize> {
    if !fs.is_finite() || fs <= 0.0 {
        return Err(Error::InvalidSamplingRate(fs));
    }
    if !duration.is_finite() || duration <= 0.0 {
        return Err(Error::InvalidDuration(duration));
    }
    let n = (duration * fs).round() as usize;
    if n < 2 {
        return Err(Error::SeriesTooShort { got: n, min: 2 });
    }
    Ok(n)
}

/// Evaluates the slow-variation conditions with centered differences on the
/// sampling grid.
pub fn slow_variation_check(spec: &PhenomenologicalSpec) -> Result<SlowVariationReport> {
    let n = grid_len(spec.fs, spec.duration)?;
    let dt = 1.0 / spec.fs;
    let a: Vec<f64> = (0..n).map(|i| (spec.amplitude)(i as f64 * dt)).collect();
    let p: Vec<f64> = (0..n).map(|i| (spec.phase)(i as f64 * dt)).collect();
    let mut increasing = true;
    for i in 1..n {
        if p[i] <= p[i - 1] {
            increasing = false;
            break;
        }
    }
    let mut amp_ratio = 0.0f64;
    let mut accel_ratio = 0.0f64;
    for i in 1..n - 1 {
        let dphi = (p[i + 1] - p[i - 1]) / (2.0 * dt);
        if dphi <= 0.0 {
            increasing = false;
            continue;
        }
        let da = (a[i + 1] - a[i - 1]) / (2.0 * dt);
        let d2phi = (p[i + 1] - 2.0 * p[i] + p[i - 1]) / (dt * dt);
        amp_ratio = amp_ratio.max(da.abs() / dphi);
        accel_ratio = accel_ratio.max(d2phi.abs() / dphi);
    }
    let pass = increasing && amp_ratio <= spec.epsilon && accel_ratio <= spec.epsilon;
    Ok(SlowVariationReport {
        amp_ratio,
        accel_ratio,
        phase_strictly_increasing: increasing,
        pass,
    })
}

/// Renders the phenomenological model and returns the dataset with exact
/// landmark times (integer phase crossings located by bisection).
pub fn synth_phenomenological(spec: &PhenomenologicalSpec) -> Result<SyntheticDataset> {
    let n = grid_len(spec.fs, spec.duration)?;
    if spec.noise_std < 0.0 || !spec.noise_std.is_finite() {
        return Err(Error::Malformed {
            what: "noise_std".into(),
            detail: format!("{}", spec.noise_std),
        });
    }
    let dt = 1.0 / spec.fs;

    let phases: Vec<f64> = (0..n).map(|i| (spec.phase)(i as f64 * dt)).collect();
    for i in 1..n {
        if phases[i] <= phases[i - 1] {
            return Err(Error::PhaseNotIncreasing { at: i as f64 * dt });
        }
    }
    let report = slow_variation_check(spec)?;
    if !report.pass {
        return Err(Error::SlowVariationViolated {
            amp_ratio: report.amp_ratio,
            accel_ratio: report.accel_ratio,
            epsilon: spec.epsilon,
        });
    }

    let amps: Vec<f64> = (0..n).map(|i| (spec.amplitude)(i as f64 * dt)).collect();
    let mut samples: Vec<f64> = (0..n)
        .map(|i| {
            let mut v = amps[i] * spec.template.eval_periodic(phases[i]);
            if let Some(trend) = &spec.trend {
                v += trend(i as f64 * dt);
            }
            v
        })
        .collect();
    if spec.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_std).expect("std validated above");
        for s in samples.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }

    // Landmarks: one per integer phase value, located by bisection on the
    // continuous phase to 1e-9 s and snapped to the nearest sample.
    let k_lo = phases[0].ceil() as i64;
    let k_hi = phases[n - 1].floor() as i64;
    let mut landmark_idx = Vec::new();
    let mut cycle_params = Vec::new();
    let mut grid_cursor = 0usize;
    for k in k_lo..=k_hi {
        let target = k as f64;
        while grid_cursor + 1 < n && phases[grid_cursor + 1] < target {
            grid_cursor += 1;
        }
        let (mut lo, mut hi) = (grid_cursor as f64 * dt, (grid_cursor + 1) as f64 * dt);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if (spec.phase)(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t_k = 0.5 * (lo + hi);
        let idx = (t_k * spec.fs).round() as i64;
        if idx < 0 || idx >= n as i64 {
            continue;
        }
        if landmark_idx.last() == Some(&(idx as usize)) {
            continue;
        }
        landmark_idx.push(idx as usize);
        let h = 1e-5;
        let dphi = ((spec.phase)(t_k + h) - (spec.phase)(t_k - h)) / (2.0 * h);
        cycle_params.push(CycleParams {
            a: (spec.amplitude)(t_k),
            f: dphi,
            class: 0,
        });
    }
    if landmark_idx.is_empty() {
        return Err(Error::NoCyclesDetected);
    }

    // Instantaneous frequency on the grid from centered phase differences.
    let mut inst = vec![0.0; n];
    for i in 1..n - 1 {
        inst[i] = (phases[i + 1] - phases[i - 1]) * spec.fs / 2.0;
    }
    inst[0] = (phases[1] - phases[0]) * spec.fs;
    inst[n - 1] = (phases[n - 1] - phases[n - 2]) * spec.fs;

    let origin = serde_json::json!({
        "model": "phenomenological",
        "template": spec.template.name(),
        "fs": spec.fs,
        "duration": spec.duration,
        "noise_std": spec.noise_std,
        "epsilon": spec.epsilon,
        "seed": spec.seed,
    });

    Ok(SyntheticDataset {
        signal: TimeSeries::new(samples, spec.fs, 0.0)?,
        landmarks: LandmarkSequence::new(landmark_idx, spec.fs)?,
        cycle_params,
        modulators: Modulators {
            amp: Some(amps),
            inst_freq: Some(inst),
        },
        stored_cycles: None,
        overlap_fraction: 0.0,
        origin,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{make_template, time_fn};
    use super::*;

    fn base_spec() -> PhenomenologicalSpec {
        PhenomenologicalSpec {
            amplitude: time_fn(|_| 1.0),
            phase: time_fn(|t| 2.0 * t),
            template: make_template("gauss_bump", 256).unwrap(),
            trend: None,
            noise_std: 0.0,
            fs: 100.0,
            duration: 10.0,
            epsilon: 0.05,
            seed: 7,
        }
    }

    #[test]
    fn constant_rate_landmarks_sit_on_half_second_grid() {
        let ds = synth_phenomenological(&base_spec()).unwrap();
        // phi(t) = 2t crosses integers at t = 0, 0.5, 1.0, ...
        let idx = ds.landmarks.indices();
        assert_eq!(idx[0], 0);
        assert_eq!(idx[1], 50);
        assert_eq!(idx[2], 100);
        assert_eq!(ds.cycle_params.len(), idx.len());
        for p in &ds.cycle_params {
            assert!((p.f - 2.0).abs() < 1e-6);
            assert!((p.a - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_render_matches_direct_expression() {
        let spec = base_spec();
        let ds = synth_phenomenological(&spec).unwrap();
        let t = 3.21;
        let i = (t * spec.fs).round() as usize;
        let expected = spec.template.eval_periodic(2.0 * (i as f64 / spec.fs));
        assert!((ds.signal.samples()[i] - expected).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_phase_is_rejected() {
        let mut spec = base_spec();
        spec.phase = time_fn(|t| 2.0 * t + 0.6 * (2.0 * std::f64::consts::PI * t).sin());
        // phi' = 2 + 1.2 pi cos(...) dips negative, so phase decreases.
        match synth_phenomenological(&spec) {
            Err(Error::PhaseNotIncreasing { .. }) => {}
            other => panic!("expected phase error, got {other:?}"),
        }
    }

    #[test]
    fn fast_amplitude_violates_slow_variation() {
        let mut spec = base_spec();
        // |a'| peaks at 0.5 * 2 pi * 2 = 6.28 against phi' = 2, far over
        // eps = 0.05.
        spec.amplitude = time_fn(|t| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * 2.0 * t).sin());
        let report = slow_variation_check(&spec).unwrap();
        assert!(!report.pass);
        assert!(report.amp_ratio > 1.0);
        match synth_phenomenological(&spec) {
            Err(Error::SlowVariationViolated { .. }) => {}
            other => panic!("expected slow-variation error, got {other:?}"),
        }
    }

    #[test]
    fn slow_modulation_passes_and_reports_small_ratios() {
        let mut spec = base_spec();
        spec.amplitude = time_fn(|t| 1.0 + 0.01 * (2.0 * std::f64::consts::PI * 0.1 * t).sin());
        let report = slow_variation_check(&spec).unwrap();
        // |a'| <= 0.01 * 2 pi * 0.1 ~ 6.3e-3 against phi' = 2.
        assert!(report.pass, "{report:?}");
        assert!(report.amp_ratio < 0.004);
        assert!(report.accel_ratio < 1e-6);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let mut spec = base_spec();
        spec.noise_std = 0.1;
        let a = synth_phenomenological(&spec).unwrap();
        let b = synth_phenomenological(&spec).unwrap();
        assert_eq!(a.signal.samples(), b.signal.samples());
        spec.seed = 8;
        let c = synth_phenomenological(&spec).unwrap();
        assert_ne!(a.signal.samples(), c.signal.samples());
    }
}
