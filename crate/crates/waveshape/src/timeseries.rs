//! Uniformly sampled real-valued signal.

use crate::error::{Error, Result};

/// A finite, uniformly sampled signal. Construction validates that every
/// sample is finite, `fs > 0`, and the series holds at least two samples;
/// all downstream operations rely on those invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    fs: f64,
    t0: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, fs: f64, t0: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSamplingRate(fs));
        }
        if samples.len() < 2 {
            return Err(Error::SeriesTooShort {
                got: samples.len(),
                min: 2,
            });
        }
        if !t0.is_finite() {
            return Err(Error::NonFiniteSample { index: 0 });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { index: i });
        }
        Ok(Self { samples, fs, t0 })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `i` in seconds.
    pub fn time_at(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.fs
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len().saturating_sub(1)) as f64 / self.fs
    }

    /// Replaces the sample buffer, keeping `fs` and `t0`. The replacement is
    /// re-validated.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.fs, self.t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let err = TimeSeries::new(vec![0.0, f64::NAN, 1.0], 100.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::NonFiniteSample { index: 1 }));
    }

    #[test]
    fn rejects_bad_fs() {
        assert!(TimeSeries::new(vec![0.0, 1.0], 0.0, 0.0).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], -5.0, 0.0).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn rejects_short() {
        assert!(matches!(
            TimeSeries::new(vec![1.0], 10.0, 0.0),
            Err(Error::SeriesTooShort { got: 1, min: 2 })
        ));
    }

    #[test]
    fn time_axis() {
        let ts = TimeSeries::new(vec![0.0; 5], 10.0, 1.0).unwrap();
        assert_eq!(ts.time_at(0), 1.0);
        assert_eq!(ts.time_at(3), 1.3);
        assert_eq!(ts.duration(), 0.4);
    }
}
