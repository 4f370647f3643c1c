//! Wave-shape model generator: a sum of time-shifted, rescaled cycles
//! `sum_j a_j s_j(f_j (t - t_j))` plus optional Gaussian noise.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::cycles::LandmarkSequence;
use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

use super::templates::WaveShapeTemplate;
use super::{CycleParams, Modulators, StoredCycle, SyntheticDataset};

/// Multiplicative amplitude modulation `1 + depth * sin(2 pi freq_hz t)`
/// applied across cycles.
#[derive(Debug, Clone, Copy)]
pub struct Modulation {
    pub depth: f64,
    pub freq_hz: f64,
}

/// Morphology class: which template to use and the chart coordinates it is
/// drawn around.
#[derive(Debug, Clone, Copy)]
pub struct ClassShape {
    /// Index into the template bank passed to the generator.
    pub template: usize,
    pub a: f64,
    pub f: f64,
    /// Relative i.i.d. Gaussian jitter on `a` per cycle.
    pub a_jitter: f64,
    /// Relative i.i.d. Gaussian jitter on `f` per cycle.
    pub f_jitter: f64,
}

/// Two-state Markov chain over cycle classes with premature timing for the
/// ectopic class.
#[derive(Debug, Clone)]
pub struct TwoClassSpec {
    pub normal: ClassShape,
    pub ectopic: ClassShape,
    /// P(next is ectopic | current is normal).
    pub p_normal_to_ectopic: f64,
    /// P(next is ectopic | current is ectopic).
    pub p_ectopic_to_ectopic: f64,
    /// Mean inter-cycle interval in seconds.
    pub base_period_s: f64,
    /// Factor applied to the interval preceding an ectopic cycle.
    pub premature_factor: f64,
    /// Relative Gaussian jitter on every interval.
    pub period_jitter: f64,
    /// Optional slow amplitude modulation shared by both classes.
    pub amplitude_modulation: Option<Modulation>,
}

/// One fully specified cycle for the scripted process.
#[derive(Debug, Clone, Copy)]
pub struct ScriptedCycle {
    pub t: f64,
    pub template: usize,
    pub a: f64,
    pub f: f64,
    pub class: u8,
}

/// Cycle-level stochastic process driving the generator.
#[derive(Debug, Clone)]
pub enum DynamicsProcess {
    /// Cycles at a fixed cadence with chart coordinates drawn i.i.d.
    /// uniformly from the given ranges.
    IidOnManifold {
        template: usize,
        a_range: (f64, f64),
        f_range: (f64, f64),
        period_s: f64,
    },
    /// Reflected Gaussian random walk on (a, f) at a fixed cadence.
    RandomWalk {
        template: usize,
        start: (f64, f64),
        step: (f64, f64),
        a_bounds: (f64, f64),
        f_bounds: (f64, f64),
        period_s: f64,
    },
    /// Normal/ectopic Markov chain with premature ectopic timing.
    TwoClassMarkov(TwoClassSpec),
    /// Explicit list of cycles, strictly increasing in time.
    Scripted(Vec<ScriptedCycle>),
}

struct Event {
    t: f64,
    template: usize,
    a: f64,
    f: f64,
    class: u8,
}

fn check_chart(a: f64, f: f64) -> Result<()> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::AmplitudeOutsideChart(a));
    }
    if !f.is_finite() || f <= 1.0 {
        return Err(Error::FrequencyOutsideChart(f));
    }
    Ok(())
}

fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let mut v = x;
    // One or two reflections suffice for the small steps used here; loop to
    // stay correct for pathological inputs.
    for _ in 0..64 {
        if v < lo {
            v = 2.0 * lo - v;
        } else if v > hi {
            v = 2.0 * hi - v;
        } else {
            return v;
        }
    }
    v.clamp(lo, hi)
}

fn build_events(
    process: &DynamicsProcess,
    duration: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    match process {
        DynamicsProcess::IidOnManifold {
            template,
            a_range,
            f_range,
            period_s,
        } => {
            if *period_s <= 0.0 {
                return Err(Error::Malformed {
                    what: "period_s".into(),
                    detail: format!("{period_s}"),
                });
            }
            let ua =
                Uniform::new_inclusive(a_range.0, a_range.1).map_err(|e| Error::Malformed {
                    what: "a_range".into(),
                    detail: e.to_string(),
                })?;
            let uf =
                Uniform::new_inclusive(f_range.0, f_range.1).map_err(|e| Error::Malformed {
                    what: "f_range".into(),
                    detail: e.to_string(),
                })?;
            let mut t = 0.75 * period_s;
            while t < duration - 0.25 * period_s {
                let a = ua.sample(rng);
                let f = uf.sample(rng);
                check_chart(a, f)?;
                events.push(Event {
                    t,
                    template: *template,
                    a,
                    f,
                    class: 0,
                });
                t += period_s;
            }
        }
        DynamicsProcess::RandomWalk {
            template,
            start,
            step,
            a_bounds,
            f_bounds,
            period_s,
        } => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let (mut a, mut f) = *start;
            check_chart(a, f)?;
            let mut t = 0.75 * period_s;
            while t < duration - 0.25 * period_s {
                events.push(Event {
                    t,
                    template: *template,
                    a,
                    f,
                    class: 0,
                });
                a = reflect(a + step.0 * normal.sample(rng), a_bounds.0, a_bounds.1);
                f = reflect(f + step.1 * normal.sample(rng), f_bounds.0, f_bounds.1);
                check_chart(a, f)?;
                t += period_s;
            }
        }
        DynamicsProcess::TwoClassMarkov(spec) => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let mut class = 0u8;
            let mut t = 0.75 * spec.base_period_s;
            loop {
                let shape = if class == 1 {
                    &spec.ectopic
                } else {
                    &spec.normal
                };
                if t >= duration - 0.25 * spec.base_period_s {
                    break;
                }
                let mut a = shape.a * (1.0 + shape.a_jitter * normal.sample(rng));
                if let Some(m) = &spec.amplitude_modulation {
                    a *= 1.0 + m.depth * (2.0 * std::f64::consts::PI * m.freq_hz * t).sin();
                }
                let f = shape.f * (1.0 + shape.f_jitter * normal.sample(rng));
                check_chart(a, f)?;
                events.push(Event {
                    t,
                    template: shape.template,
                    a,
                    f,
                    class,
                });
                let p_ect = if class == 1 {
                    spec.p_ectopic_to_ectopic
                } else {
                    spec.p_normal_to_ectopic
                };
                let next: u8 = if rng.random::<f64>() < p_ect { 1 } else { 0 };
                let mut interval =
                    spec.base_period_s * (1.0 + spec.period_jitter * normal.sample(rng));
                if next == 1 {
                    interval *= spec.premature_factor;
                }
                if interval <= 0.0 {
                    return Err(Error::Malformed {
                        what: "interval".into(),
                        detail: "non-positive inter-cycle interval".into(),
                    });
                }
                t += interval;
                class = next;
            }
        }
        DynamicsProcess::Scripted(cycles) => {
            for (i, c) in cycles.iter().enumerate() {
                if i > 0 && c.t <= cycles[i - 1].t {
                    return Err(Error::LandmarksNotIncreasing(i));
                }
                check_chart(c.a, c.f)?;
                events.push(Event {
                    t: c.t,
                    template: c.template,
                    a: c.a,
                    f: c.f,
                    class: c.class,
                });
            }
        }
    }
    if events.is_empty() {
        return Err(Error::NoCyclesDetected);
    }
    Ok(events)
}

/// Renders the wave-shape model on a uniform grid.
///
/// Cycle `j` contributes `a_j * s(f_j * (i / fs - t_j))` on the samples whose
/// times fall inside its support `[t_j - 1/(2 f_j), t_j + 1/(2 f_j)]`. The
/// noise-free contributions are also returned per cycle so reconstruction can
/// be checked sample for sample.
pub fn synth_waveshape_model(
    templates: &[WaveShapeTemplate],
    process: &DynamicsProcess,
    fs: f64,
    duration: f64,
    noise_std: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if !fs.is_finite() || fs <= 0.0 {
        return Err(Error::InvalidSamplingRate(fs));
    }
    if !duration.is_finite() || duration <= 0.0 {
        return Err(Error::InvalidDuration(duration));
    }
    if noise_std < 0.0 || !noise_std.is_finite() {
        return Err(Error::Malformed {
            what: "noise_std".into(),
            detail: format!("{noise_std}"),
        });
    }
    let n = (duration * fs).round() as usize;
    if n < 2 {
        return Err(Error::SeriesTooShort { got: n, min: 2 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let events = build_events(process, duration, &mut rng)?;
    for e in &events {
        if e.template >= templates.len() {
            return Err(Error::Malformed {
                what: "template index".into(),
                detail: format!("{} (bank has {})", e.template, templates.len()),
            });
        }
    }

    let mut samples = vec![0.0f64; n];
    let mut stored = Vec::with_capacity(events.len());
    let mut landmarks = Vec::with_capacity(events.len());
    let mut cycle_params = Vec::with_capacity(events.len());
    for e in &events {
        let idx = (e.t * fs).round() as i64;
        if idx < 0 || idx >= n as i64 {
            continue;
        }
        let half = 0.5 / e.f;
        let i_lo = ((e.t - half) * fs).ceil().max(0.0) as usize;
        let i_hi = (((e.t + half) * fs).floor() as i64).min(n as i64 - 1) as usize;
        if i_lo > i_hi {
            continue;
        }
        let tpl = &templates[e.template];
        let mut contrib = Vec::with_capacity(i_hi - i_lo + 1);
        for i in i_lo..=i_hi {
            let u = e.f * (i as f64 / fs - e.t);
            let v = e.a * tpl.eval(u);
            samples[i] += v;
            contrib.push(v);
        }
        if let Some(&last) = landmarks.last() {
            if idx as usize <= last {
                return Err(Error::LandmarksNotIncreasing(landmarks.len()));
            }
        }
        landmarks.push(idx as usize);
        cycle_params.push(CycleParams {
            a: e.a,
            f: e.f,
            class: e.class,
        });
        stored.push(StoredCycle {
            start: i_lo,
            samples: contrib,
        });
    }
    if landmarks.is_empty() {
        return Err(Error::NoCyclesDetected);
    }

    // Overlap bookkeeping on continuous supports.
    let kept: Vec<&Event> = events
        .iter()
        .filter(|e| {
            let idx = (e.t * fs).round() as i64;
            idx >= 0 && idx < n as i64
        })
        .collect();
    let mut overlaps = 0usize;
    for w in kept.windows(2) {
        let right_edge = w[0].t + 0.5 / w[0].f;
        let left_edge = w[1].t - 0.5 / w[1].f;
        if left_edge < right_edge {
            overlaps += 1;
        }
    }
    let overlap_fraction = if kept.len() > 1 {
        overlaps as f64 / (kept.len() - 1) as f64
    } else {
        0.0
    };

    if noise_std > 0.0 {
        let normal = Normal::new(0.0, noise_std).expect("std validated above");
        for s in samples.iter_mut() {
            *s += normal.sample(&mut rng);
        }
    }

    let amp_modulator = match process {
        DynamicsProcess::TwoClassMarkov(spec) => spec.amplitude_modulation.map(|m| {
            (0..n)
                .map(|i| {
                    1.0 + m.depth * (2.0 * std::f64::consts::PI * m.freq_hz * i as f64 / fs).sin()
                })
                .collect::<Vec<f64>>()
        }),
        _ => None,
    };

    let origin = serde_json::json!({
        "model": "waveshape_sum",
        "fs": fs,
        "duration": duration,
        "noise_std": noise_std,
        "seed": seed,
        "cycles": landmarks.len(),
        "overlap_fraction": overlap_fraction,
    });

    Ok(SyntheticDataset {
        signal: TimeSeries::new(samples, fs, 0.0)?,
        landmarks: LandmarkSequence::new(landmarks, fs)?,
        cycle_params,
        modulators: Modulators {
            amp: amp_modulator,
            inst_freq: None,
        },
        stored_cycles: Some(stored),
        overlap_fraction,
        origin,
    })
}

#[cfg(test)]
mod tests {
    use super::super::make_template;
    use super::*;

    fn bank() -> Vec<WaveShapeTemplate> {
        vec![
            make_template("gauss_bump", 256).unwrap(),
            make_template("db4_like", 256).unwrap(),
        ]
    }

    #[test]
    fn isolated_cycles_reconstruct_exactly() {
        let process = DynamicsProcess::IidOnManifold {
            template: 0,
            a_range: (0.8, 1.2),
            f_range: (2.0, 3.0),
            period_s: 1.0,
        };
        let ds = synth_waveshape_model(&bank(), &process, 100.0, 12.0, 0.0, 42).unwrap();
        assert_eq!(ds.overlap_fraction, 0.0);
        let stored = ds.stored_cycles.as_ref().unwrap();
        let x = ds.signal.samples();
        // With disjoint supports the signal restricted to a cycle's covered
        // range must equal the stored rendering bit for bit.
        for sc in stored {
            for (k, &v) in sc.samples.iter().enumerate() {
                assert_eq!(x[sc.start + k], v);
            }
        }
        // And the chart coordinates must reproduce each stored cycle through
        // the template. Event times land exactly on the grid here (period
        // 1.0 s at fs 100), so the landmark index recovers t_j exactly.
        let tpl = &bank()[0];
        for (j, sc) in stored.iter().enumerate() {
            let p = ds.cycle_params[j];
            let t_j = ds.landmarks.indices()[j] as f64 / 100.0;
            for (k, &v) in sc.samples.iter().enumerate() {
                let i = sc.start + k;
                let u = p.f * (i as f64 / 100.0 - t_j);
                assert!((v - p.a * tpl.eval(u)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_class_mix_lands_near_requested_rate() {
        let spec = TwoClassSpec {
            normal: ClassShape {
                template: 0,
                a: 1.0,
                f: 1.8,
                a_jitter: 0.02,
                f_jitter: 0.02,
            },
            ectopic: ClassShape {
                template: 1,
                a: 1.15,
                f: 1.35,
                a_jitter: 0.02,
                f_jitter: 0.02,
            },
            p_normal_to_ectopic: 0.1,
            p_ectopic_to_ectopic: 0.1,
            base_period_s: 0.6,
            premature_factor: 0.7,
            period_jitter: 0.02,
            amplitude_modulation: None,
        };
        let ds = synth_waveshape_model(
            &bank(),
            &DynamicsProcess::TwoClassMarkov(spec),
            200.0,
            300.0,
            0.0,
            1,
        )
        .unwrap();
        let n_ect = ds.cycle_params.iter().filter(|p| p.class == 1).count();
        let frac = n_ect as f64 / ds.cycle_params.len() as f64;
        assert!(
            (0.06..=0.14).contains(&frac),
            "ectopic fraction {frac} out of expected band"
        );
        assert!(ds.cycle_params.len() > 400);
    }

    #[test]
    fn scripted_cycles_must_increase() {
        let script = vec![
            ScriptedCycle {
                t: 1.0,
                template: 0,
                a: 1.0,
                f: 2.0,
                class: 0,
            },
            ScriptedCycle {
                t: 0.5,
                template: 0,
                a: 1.0,
                f: 2.0,
                class: 0,
            },
        ];
        match synth_waveshape_model(
            &bank(),
            &DynamicsProcess::Scripted(script),
            100.0,
            5.0,
            0.0,
            0,
        ) {
            Err(Error::LandmarksNotIncreasing(_)) => {}
            other => panic!("expected ordering error, got {other:?}"),
        }
    }

    #[test]
    fn chart_violations_surface_as_errors() {
        let process = DynamicsProcess::IidOnManifold {
            template: 0,
            a_range: (1.0, 1.0),
            f_range: (0.5, 0.9),
            period_s: 1.0,
        };
        match synth_waveshape_model(&bank(), &process, 100.0, 5.0, 0.0, 0) {
            Err(Error::FrequencyOutsideChart(_)) => {}
            other => panic!("expected chart error, got {other:?}"),
        }
    }

    #[test]
    fn overlap_fraction_counts_adjacent_support_intersections() {
        // f = 1.25 gives support width 0.8 s; cadence 0.5 s forces every
        // adjacent pair to overlap.
        let process = DynamicsProcess::IidOnManifold {
            template: 0,
            a_range: (1.0, 1.0),
            f_range: (1.25, 1.25),
            period_s: 0.5,
        };
        let ds = synth_waveshape_model(&bank(), &process, 100.0, 10.0, 0.0, 3).unwrap();
        assert!((ds.overlap_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_walk_respects_bounds() {
        let process = DynamicsProcess::RandomWalk {
            template: 0,
            start: (1.0, 2.0),
            step: (0.05, 0.08),
            a_bounds: (0.5, 1.5),
            f_bounds: (1.5, 2.5),
            period_s: 0.5,
        };
        let ds = synth_waveshape_model(&bank(), &process, 100.0, 120.0, 0.0, 9).unwrap();
        for p in &ds.cycle_params {
            assert!((0.5..=1.5).contains(&p.a));
            assert!((1.5..=2.5).contains(&p.f));
        }
        // The walk should actually move.
        let a_span = ds
            .cycle_params
            .iter()
            .map(|p| p.a)
            .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
        assert!(a_span.1 - a_span.0 > 0.2);
    }
}
