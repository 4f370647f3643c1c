//! Cycle templates: smooth bumps supported on [-1/2, 1/2].

use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// Smallest accepted template resolution.
pub const MIN_RESOLUTION: usize = 32;

fn gauss(t: f64, center: f64, width: f64) -> f64 {
    let z = (t - center) / width;
    (-0.5 * z * z).exp()
}

/// Raised-cosine-to-the-fourth bump centered at `center` with half width
/// `width`; identically zero outside `|t - center| <= width` and three times
/// continuously differentiable at the edges.
fn rc4(t: f64, center: f64, width: f64) -> f64 {
    let u = (t - center) / width;
    if u.abs() >= 1.0 {
        return 0.0;
    }
    let c = (std::f64::consts::FRAC_PI_2 * u).cos();
    c * c * c * c
}

fn closed_form(name: &str) -> Option<fn(f64) -> f64> {
    match name {
        "gauss_bump" => Some(|t| gauss(t, 0.0, 0.06)),
        "ecg_like" => Some(|t| {
            -0.15 * gauss(t, -0.05, 0.015) + gauss(t, 0.0, 0.012) - 0.25 * gauss(t, 0.05, 0.018)
        }),
        "abp_like" => Some(|t| rc4(t, -0.10, 0.22) + 0.35 * rc4(t, 0.12, 0.14)),
        "db4_like" => Some(|t| {
            -0.3 * gauss(t, -0.20, 0.04) + gauss(t, -0.06, 0.05) - 0.7 * gauss(t, 0.08, 0.05)
                + 0.25 * gauss(t, 0.22, 0.037)
        }),
        _ => None,
    }
}

/// A sampled cycle shape with a cubic-spline interpolant over [-1/2, 1/2].
#[derive(Debug, Clone)]
pub struct WaveShapeTemplate {
    name: String,
    grid: Vec<f64>,
    values: Vec<f64>,
    spline: CubicSpline,
}

impl WaveShapeTemplate {
    /// Builds a template from explicit samples on a strictly increasing grid
    /// spanning [-1/2, 1/2].
    pub fn from_samples(name: &str, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < MIN_RESOLUTION {
            return Err(Error::ResolutionTooSmall {
                got: grid.len(),
                min: MIN_RESOLUTION,
            });
        }
        if grid.len() != values.len() {
            return Err(Error::Malformed {
                what: "template".into(),
                detail: format!("{} grid points but {} values", grid.len(), values.len()),
            });
        }
        if (grid[0] - -0.5).abs() > 1e-12 || (grid[grid.len() - 1] - 0.5).abs() > 1e-12 {
            return Err(Error::Malformed {
                what: "template".into(),
                detail: "grid must span [-1/2, 1/2]".into(),
            });
        }
        let spline = CubicSpline::natural(&grid, &values)?;
        Ok(Self {
            name: name.to_string(),
            grid,
            values,
            spline,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn resolution(&self) -> usize {
        self.grid.len()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated value; zero outside the support.
    pub fn eval(&self, u: f64) -> f64 {
        if !(-0.5..=0.5).contains(&u) {
            0.0
        } else {
            self.spline.eval(u)
        }
    }

    /// 1-periodic extension of the template.
    pub fn eval_periodic(&self, u: f64) -> f64 {
        let w = u - u.round();
        self.spline.eval(w.clamp(-0.5, 0.5))
    }

    /// Largest sampled value.
    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds one of the named templates sampled at `resolution` uniform points.
///
/// Available names: `gauss_bump`, `ecg_like`, `abp_like`, `db4_like`.
pub fn make_template(name: &str, resolution: usize) -> Result<WaveShapeTemplate> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::ResolutionTooSmall {
            got: resolution,
            min: MIN_RESOLUTION,
        });
    }
    let f = closed_form(name).ok_or_else(|| Error::UnknownTemplate(name.to_string()))?;
    let grid: Vec<f64> = (0..resolution)
        .map(|i| -0.5 + i as f64 / (resolution - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&t| f(t)).collect();
    WaveShapeTemplate::from_samples(name, grid, values)
}

/// Samples the chart point `(a, f)`: the vector `a * s(f * t_i)` over the
/// template grid. Requires `a > 0` and `f > 1`.
pub fn manifold_point(template: &WaveShapeTemplate, a: f64, f: f64) -> Result<Vec<f64>> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::AmplitudeOutsideChart(a));
    }
    if !f.is_finite() || f <= 1.0 {
        return Err(Error::FrequencyOutsideChart(f));
    }
    Ok(template
        .grid
        .iter()
        .map(|&t| a * template.eval(f * t))
        .collect())
}
