//! Cycle-shape analysis for nonstationary periodic signals.
//!
//! The crate models a recording as a train of slowly varying oscillatory
//! cycles, excises one fixed window per detected cycle, and embeds the
//! resulting point cloud with an anisotropic diffusion map. The leading
//! embedding coordinates separate cycle morphologies (for example ectopic
//! beats from normal ones) and, re-indexed by cycle time, trace slow hidden
//! drivers such as respiration-like amplitude modulation.
//!
//! The main entry points are [`dynamics::ddmap`] for the full pipeline,
//! [`dynamics::derive_edr`] for the respiratory-style trace, and
//! [`synth`] for generating ground-truth datasets to validate against.

pub mod cycles;
pub mod diffusion;
pub mod dynamics;
mod error;
pub mod io;
pub mod preprocess;
pub mod spline;
pub mod stats;
pub mod synth;
pub mod timeseries;

pub(crate) mod linalg;

pub use error::{Error, Result};
pub use timeseries::TimeSeries;
