//! Synthetic signal generation.
//!
//! Three generators share one dataset container:
//!
//! * [`synth_phenomenological`] renders `a(t) * s(phi(t))` for a slowly
//!   varying amplitude `a`, a strictly increasing phase `phi`, and a cycle
//!   template `s` extended 1-periodically.
//! * [`synth_waveshape_model`] renders a sum of isolated, time-shifted cycles
//!   `a_j * s(f_j * (t - t_j))` driven by a cycle-level stochastic process.
//! * [`synth_generalized`] renders an adaptive-harmonic sum
//!   `A_0(t) + sum_k A_k(t) cos(2 pi phi_k(t))`.
//!
//! Every generator is deterministic given its seed.

mod generalized;
mod model;
mod phenom;
mod scenarios;
mod templates;

pub use generalized::{synth_generalized, GeneralizedReport, GeneralizedSpec, HarmonicComponent};
pub use model::{
    synth_waveshape_model, ClassShape, DynamicsProcess, Modulation, ScriptedCycle, TwoClassSpec,
};
pub use phenom::{
    slow_variation_check, synth_phenomenological, PhenomenologicalSpec, SlowVariationReport,
};
pub use scenarios::{scenario, scenario_names, scenario_with_duration};
pub use templates::{make_template, manifold_point, WaveShapeTemplate, MIN_RESOLUTION};

use crate::cycles::LandmarkSequence;
use crate::timeseries::TimeSeries;

/// Shared function-of-time handle used for amplitudes, phases and trends.
pub type TimeFn = std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Wraps a closure into a [`TimeFn`].
pub fn time_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> TimeFn {
    std::sync::Arc::new(f)
}

/// Per-cycle ground truth: manifold coordinates and morphology class
/// (0 = normal, 1 = ectopic).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleParams {
    pub a: f64,
    pub f: f64,
    pub class: u8,
}

/// Hidden modulators sampled on the signal grid, when the generating process
/// defines them.
#[derive(Debug, Clone, Default)]
pub struct Modulators {
    pub amp: Option<Vec<f64>>,
    pub inst_freq: Option<Vec<f64>>,
}

/// One rendered cycle: its first covered sample index and the noise-free
/// contribution on the covered range.
#[derive(Debug, Clone)]
pub struct StoredCycle {
    pub start: usize,
    pub samples: Vec<f64>,
}

/// A generated signal with full ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub signal: TimeSeries,
    pub landmarks: LandmarkSequence,
    pub cycle_params: Vec<CycleParams>,
    pub modulators: Modulators,
    /// Noise-free per-cycle renderings (cycle-process generator only).
    pub stored_cycles: Option<Vec<StoredCycle>>,
    /// Fraction of adjacent cycle pairs with intersecting supports.
    pub overlap_fraction: f64,
    /// Generator parameters echoed for sidecar export.
    pub origin: serde_json::Value,
}
