//! Resolved run configuration: the single structure that is written to the
//! manifest, read back for reruns, and converted into the library pipeline
//! config. Every default is materialized here so a manifest alone
//! reproduces a run.

use serde::{Deserialize, Serialize};
use waveshape::cycles::{Detector, PulseQualityConfig};
use waveshape::diffusion::{BandwidthRule, KernelConfig};
use waveshape::dynamics::{BaselineRule, PipelineConfig, PreprocessConfig, WindowRule};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorCfg {
    Peak {
        k_mad: f64,
        window_s: f64,
        refractory_s: f64,
    },
    Upstroke {
        refractory_s: f64,
    },
    /// Landmarks come from a caller-supplied CSV.
    External,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineCfg {
    TwoStepMedian,
    Detrend { window_s: f64 },
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowCfg {
    Fixed { left_ms: f64, right_ms: f64 },
    MinInterval,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BandwidthCfg {
    Quartile,
    Knn { k: usize, pct: f64 },
    Explicit { h: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelCfg {
    pub bandwidth: BandwidthCfg,
    pub alpha: f64,
    pub zero_diagonal: bool,
    pub t: f64,
    pub d: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QualityCfg {
    pub max_wide_maxima: usize,
    pub prominence_frac: f64,
    pub min_width_ms: f64,
}

/// Fully explicit pipeline settings, as echoed in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub mode: String,
    pub lowpass: Option<(usize, f64)>,
    pub baseline: BaselineCfg,
    pub detector: DetectorCfg,
    pub quality: Option<QualityCfg>,
    pub window: WindowCfg,
    pub normalize: bool,
    pub kernel: KernelCfg,
    /// Whether the respiratory-trace stage runs (on for ecg mode).
    pub edr: bool,
    pub edr_coord: usize,
}

impl ResolvedConfig {
    pub fn ecg() -> Self {
        from_pipeline("ecg", &PipelineConfig::ecg(), true)
    }

    pub fn abp() -> Self {
        from_pipeline("abp", &PipelineConfig::abp(), false)
    }

    /// Custom mode starts from the ecg settings without the trace stage.
    pub fn custom() -> Self {
        from_pipeline("custom", &PipelineConfig::ecg(), false)
    }

    pub fn for_mode(mode: &str) -> Option<Self> {
        match mode {
            "ecg" => Some(Self::ecg()),
            "abp" => Some(Self::abp()),
            "custom" => Some(Self::custom()),
            _ => None,
        }
    }

    /// Converts to the library config. External landmarks are substituted
    /// by the caller when the detector kind is `external`.
    pub fn to_pipeline(
        &self,
        external_landmarks: Option<Vec<usize>>,
    ) -> Result<PipelineConfig, String> {
        let detector = match (&self.detector, external_landmarks) {
            (
                DetectorCfg::Peak {
                    k_mad,
                    window_s,
                    refractory_s,
                },
                _,
            ) => Detector::PeakThreshold {
                k_mad: *k_mad,
                window_s: *window_s,
                refractory_s: *refractory_s,
            },
            (DetectorCfg::Upstroke { refractory_s }, _) => Detector::DerivativeMax {
                refractory_s: *refractory_s,
            },
            (DetectorCfg::External, Some(idx)) => Detector::External(idx),
            (DetectorCfg::External, None) => {
                return Err("detector is `external` but no landmark file was given".into())
            }
        };
        Ok(PipelineConfig {
            preprocess: PreprocessConfig {
                lowpass: self.lowpass,
                baseline: match &self.baseline {
                    BaselineCfg::TwoStepMedian => BaselineRule::TwoStepMedian,
                    BaselineCfg::Detrend { window_s } => BaselineRule::MedianDetrend {
                        window_s: *window_s,
                    },
                    BaselineCfg::None => BaselineRule::None,
                },
            },
            detector,
            quality: self.quality.as_ref().map(|q| PulseQualityConfig {
                max_wide_maxima: q.max_wide_maxima,
                prominence_frac: q.prominence_frac,
                min_width_ms: q.min_width_ms,
            }),
            window: match &self.window {
                WindowCfg::Fixed { left_ms, right_ms } => WindowRule::FixedMs {
                    left_ms: *left_ms,
                    right_ms: *right_ms,
                },
                WindowCfg::MinInterval => WindowRule::MinInterval,
            },
            normalize: self.normalize,
            kernel: KernelConfig {
                bandwidth_rule: match &self.kernel.bandwidth {
                    BandwidthCfg::Quartile => BandwidthRule::QuartileAllPairs,
                    BandwidthCfg::Knn { k, pct } => {
                        BandwidthRule::KnnPercentile { k: *k, pct: *pct }
                    }
                    BandwidthCfg::Explicit { h } => BandwidthRule::Explicit(*h),
                },
                alpha: self.kernel.alpha,
                zero_diagonal: self.kernel.zero_diagonal,
                t: self.kernel.t,
                d: self.kernel.d,
            },
            edr_coord: self.edr_coord,
        })
    }
}

fn from_pipeline(mode: &str, p: &PipelineConfig, edr: bool) -> ResolvedConfig {
    ResolvedConfig {
        mode: mode.to_string(),
        lowpass: p.preprocess.lowpass,
        baseline: match &p.preprocess.baseline {
            BaselineRule::TwoStepMedian => BaselineCfg::TwoStepMedian,
            BaselineRule::MedianDetrend { window_s } => BaselineCfg::Detrend {
                window_s: *window_s,
            },
            BaselineRule::None => BaselineCfg::None,
        },
        detector: match &p.detector {
            Detector::PeakThreshold {
                k_mad,
                window_s,
                refractory_s,
            } => DetectorCfg::Peak {
                k_mad: *k_mad,
                window_s: *window_s,
                refractory_s: *refractory_s,
            },
            Detector::DerivativeMax { refractory_s } => DetectorCfg::Upstroke {
                refractory_s: *refractory_s,
            },
            Detector::External(_) => DetectorCfg::External,
        },
        quality: p.quality.as_ref().map(|q| QualityCfg {
            max_wide_maxima: q.max_wide_maxima,
            prominence_frac: q.prominence_frac,
            min_width_ms: q.min_width_ms,
        }),
        window: match &p.window {
            WindowRule::FixedMs { left_ms, right_ms } => WindowCfg::Fixed {
                left_ms: *left_ms,
                right_ms: *right_ms,
            },
            WindowRule::MinInterval => WindowCfg::MinInterval,
        },
        normalize: p.normalize,
        kernel: KernelCfg {
            bandwidth: match &p.kernel.bandwidth_rule {
                BandwidthRule::QuartileAllPairs => BandwidthCfg::Quartile,
                BandwidthRule::KnnPercentile { k, pct } => BandwidthCfg::Knn { k: *k, pct: *pct },
                BandwidthRule::Explicit(h) => BandwidthCfg::Explicit { h: *h },
            },
            alpha: p.kernel.alpha,
            zero_diagonal: p.kernel.zero_diagonal,
            t: p.kernel.t,
            d: p.kernel.d,
        },
        edr,
        edr_coord: p.edr_coord,
    }
}

/// Optional overrides loaded from a TOML file; unset keys keep the mode
/// defaults. The tree mirrors [`ResolvedConfig`].
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileOverrides {
    pub lowpass: Option<LowpassOverride>,
    pub baseline: Option<BaselineCfg>,
    pub detector: Option<DetectorCfg>,
    pub quality: Option<QualityOverride>,
    pub window: Option<WindowCfg>,
    pub normalize: Option<bool>,
    pub kernel: Option<KernelOverrides>,
    pub edr: Option<bool>,
    pub edr_coord: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowpassOverride {
    Butterworth { order: usize, cutoff_hz: f64 },
    None,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QualityOverride {
    Enabled {
        max_wide_maxima: usize,
        prominence_frac: f64,
        min_width_ms: f64,
    },
    Disabled,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelOverrides {
    pub bandwidth: Option<BandwidthCfg>,
    pub alpha: Option<f64>,
    pub zero_diagonal: Option<bool>,
    pub t: Option<f64>,
    pub d: Option<usize>,
}

impl FileOverrides {
    pub fn apply(self, base: &mut ResolvedConfig) {
        if let Some(lp) = self.lowpass {
            base.lowpass = match lp {
                LowpassOverride::Butterworth { order, cutoff_hz } => Some((order, cutoff_hz)),
                LowpassOverride::None => None,
            };
        }
        if let Some(b) = self.baseline {
            base.baseline = b;
        }
        if let Some(d) = self.detector {
            base.detector = d;
        }
        if let Some(q) = self.quality {
            base.quality = match q {
                QualityOverride::Enabled {
                    max_wide_maxima,
                    prominence_frac,
                    min_width_ms,
                } => Some(QualityCfg {
                    max_wide_maxima,
                    prominence_frac,
                    min_width_ms,
                }),
                QualityOverride::Disabled => None,
            };
        }
        if let Some(w) = self.window {
            base.window = w;
        }
        if let Some(n) = self.normalize {
            base.normalize = n;
        }
        if let Some(k) = self.kernel {
            if let Some(bw) = k.bandwidth {
                base.kernel.bandwidth = bw;
            }
            if let Some(a) = k.alpha {
                base.kernel.alpha = a;
            }
            if let Some(z) = k.zero_diagonal {
                base.kernel.zero_diagonal = z;
            }
            if let Some(t) = k.t {
                base.kernel.t = t;
            }
            if let Some(d) = k.d {
                base.kernel.d = d;
            }
        }
        if let Some(e) = self.edr {
            base.edr = e;
        }
        if let Some(c) = self.edr_coord {
            base.edr_coord = c;
        }
    }
}

/// Parses a bandwidth flag: `quartile`, `knn:K:PCT`, or `explicit:H`.
pub fn parse_bandwidth_flag(s: &str) -> Result<BandwidthCfg, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["quartile"] => Ok(BandwidthCfg::Quartile),
        ["knn", k, pct] => Ok(BandwidthCfg::Knn {
            k: k.parse().map_err(|e| format!("bad k in `{s}`: {e}"))?,
            pct: pct.parse().map_err(|e| format!("bad pct in `{s}`: {e}"))?,
        }),
        ["explicit", h] => Ok(BandwidthCfg::Explicit {
            h: h.parse().map_err(|e| format!("bad h in `{s}`: {e}"))?,
        }),
        _ => Err(format!(
            "bandwidth `{s}` not recognized (quartile | knn:K:PCT | explicit:H)"
        )),
    }
}
