//! Named end-to-end scenarios shared by the CLI and the test suite.

use crate::error::{Error, Result};

use super::model::{synth_waveshape_model, ClassShape, DynamicsProcess, Modulation, TwoClassSpec};
use super::phenom::{synth_phenomenological, PhenomenologicalSpec};
use super::templates::make_template;
use super::{time_fn, SyntheticDataset};

const NAMES: [&str; 4] = ["pvc10", "am025", "phenom", "abp"];

/// Names accepted by [`scenario`].
pub fn scenario_names() -> &'static [&'static str] {
    &NAMES
}

/// Builds a named scenario at its default duration.
///
/// * `pvc10`: two-class ECG-like recording, ~10% premature ectopic cycles,
///   slow amplitude modulation at 0.25 Hz, 200 Hz, 612 s.
/// * `am025`: single-class ECG-like recording whose only hidden dynamic is a
///   0.25 Hz amplitude modulation, 200 Hz, 300 s.
/// * `phenom`: phenomenological render with drifting rate and amplitude,
///   200 Hz, 60 s.
/// * `abp`: pressure-like pulses with occasional premature weak pulses,
///   125 Hz, 240 s.
pub fn scenario(name: &str, seed: u64) -> Result<SyntheticDataset> {
    scenario_with_duration(name, seed, None)
}

/// Same as [`scenario`] with an optional duration override in seconds.
pub fn scenario_with_duration(
    name: &str,
    seed: u64,
    duration_s: Option<f64>,
) -> Result<SyntheticDataset> {
    match name {
        "pvc10" => pvc10(seed, duration_s.unwrap_or(612.0)),
        "am025" => am025(seed, duration_s.unwrap_or(300.0)),
        "phenom" => phenom(seed, duration_s.unwrap_or(60.0)),
        "abp" => abp(seed, duration_s.unwrap_or(240.0)),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn tag(mut ds: SyntheticDataset, name: &str, seed: u64) -> SyntheticDataset {
    if let serde_json::Value::Object(map) = &mut ds.origin {
        map.insert("scenario".into(), serde_json::json!(name));
        map.insert("seed".into(), serde_json::json!(seed));
    }
    ds
}

fn pvc10(seed: u64, duration: f64) -> Result<SyntheticDataset> {
    let bank = vec![
        make_template("ecg_like", 512)?,
        make_template("db4_like", 512)?,
    ];
    // The ectopic amplitude keeps the two classes at comparable energy in
    // the excision window, so the cycle graph stays weakly connected and
    // the class-contrast coordinate still varies with the slow amplitude
    // modulation inside the normal class.
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
            a: 0.45,
            f: 1.35,
            a_jitter: 0.03,
            f_jitter: 0.03,
        },
        p_normal_to_ectopic: 0.1,
        p_ectopic_to_ectopic: 0.1,
        base_period_s: 0.8,
        premature_factor: 0.7,
        period_jitter: 0.02,
        amplitude_modulation: Some(Modulation {
            depth: 0.2,
            freq_hz: 0.25,
        }),
    };
    let ds = synth_waveshape_model(
        &bank,
        &DynamicsProcess::TwoClassMarkov(spec),
        200.0,
        duration,
        0.05,
        seed,
    )?;
    Ok(tag(ds, "pvc10", seed))
}

fn am025(seed: u64, duration: f64) -> Result<SyntheticDataset> {
    let bank = vec![
        make_template("ecg_like", 512)?,
        make_template("db4_like", 512)?,
    ];
    let spec = TwoClassSpec {
        normal: ClassShape {
            template: 0,
            a: 1.0,
            f: 1.8,
            a_jitter: 0.01,
            f_jitter: 0.01,
        },
        ectopic: ClassShape {
            template: 1,
            a: 1.15,
            f: 1.35,
            a_jitter: 0.01,
            f_jitter: 0.01,
        },
        p_normal_to_ectopic: 0.0,
        p_ectopic_to_ectopic: 0.0,
        base_period_s: 0.75,
        premature_factor: 1.0,
        period_jitter: 0.01,
        amplitude_modulation: Some(Modulation {
            depth: 0.1,
            freq_hz: 0.25,
        }),
    };
    let ds = synth_waveshape_model(
        &bank,
        &DynamicsProcess::TwoClassMarkov(spec),
        200.0,
        duration,
        0.005,
        seed,
    )?;
    Ok(tag(ds, "am025", seed))
}

fn phenom(seed: u64, duration: f64) -> Result<SyntheticDataset> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let spec = PhenomenologicalSpec {
        amplitude: time_fn(move |t| 1.0 + 0.05 * (two_pi * 0.10 * t).sin()),
        // Rate 1.4 * (1 + 0.04 sin(2 pi 0.08 t)), integrated in closed form.
        phase: time_fn(move |t| {
            1.4 * (t + 0.04 / (two_pi * 0.08) * (1.0 - (two_pi * 0.08 * t).cos()))
        }),
        template: make_template("ecg_like", 512)?,
        trend: Some(time_fn(move |t| 0.05 * (two_pi * 0.02 * t).sin())),
        noise_std: 0.002,
        fs: 200.0,
        duration,
        epsilon: 0.05,
        seed,
    };
    let ds = synth_phenomenological(&spec)?;
    Ok(tag(ds, "phenom", seed))
}

fn abp(seed: u64, duration: f64) -> Result<SyntheticDataset> {
    let bank = vec![make_template("abp_like", 512)?];
    let spec = TwoClassSpec {
        normal: ClassShape {
            template: 0,
            a: 1.0,
            f: 1.25,
            a_jitter: 0.02,
            f_jitter: 0.015,
        },
        ectopic: ClassShape {
            template: 0,
            a: 0.8,
            f: 1.12,
            a_jitter: 0.02,
            f_jitter: 0.015,
        },
        p_normal_to_ectopic: 0.05,
        p_ectopic_to_ectopic: 0.05,
        base_period_s: 0.85,
        premature_factor: 0.75,
        period_jitter: 0.02,
        amplitude_modulation: Some(Modulation {
            depth: 0.05,
            freq_hz: 0.2,
        }),
    };
    let ds = synth_waveshape_model(
        &bank,
        &DynamicsProcess::TwoClassMarkov(spec),
        125.0,
        duration,
        0.004,
        seed,
    )?;
    Ok(tag(ds, "abp", seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_named_scenarios_build() {
        for name in scenario_names() {
            let ds = scenario_with_duration(name, 11, Some(30.0)).unwrap();
            assert!(ds.landmarks.len() > 10, "{name} produced too few cycles");
            assert_eq!(ds.origin["scenario"], serde_json::json!(*name));
        }
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(matches!(
            scenario("cardio", 0),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn pvc10_has_roughly_ten_percent_ectopy() {
        let ds = scenario("pvc10", 2024).unwrap();
        let n_ect = ds.cycle_params.iter().filter(|p| p.class == 1).count();
        let frac = n_ect as f64 / ds.cycle_params.len() as f64;
        assert!((0.07..=0.13).contains(&frac), "fraction {frac}");
        assert!(ds.cycle_params.len() >= 700);
    }
}
