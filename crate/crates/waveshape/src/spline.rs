//! Natural cubic spline interpolation on strictly increasing knots.
//!
//! Second derivatives at the knots solve the standard tridiagonal system
//! with natural boundary conditions (zero curvature at both ends). With two
//! knots the spline degenerates to the secant line.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivative of the spline at each knot.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(xs: &[f64], ys: &[f64]) -> Result<Self> {
        assert_eq!(xs.len(), ys.len(), "knot/value length mismatch");
        let n = xs.len();
        if n < 2 {
            return Err(Error::TooFewSupportPoints { got: n, min: 2 });
        }
        for i in 1..n {
            if !(xs[i] > xs[i - 1]) {
                return Err(Error::KnotsNotIncreasing(i));
            }
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the n-2 interior equations.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut lower = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..=k {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                lower[i - 1] = h0 / 6.0;
                diag[i - 1] = (h0 + h1) / 3.0;
                upper[i - 1] = h1 / 6.0;
                rhs[i - 1] = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
            }
            for i in 1..k {
                let w = lower[i] / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for i in (1..k).rev() {
                m[i] = (rhs[i - 1] - upper[i - 1] * m[i + 1]) / diag[i - 1];
            }
        }
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            m,
        })
    }

    /// Evaluates the spline. Outside the knot span the boundary segment's
    /// cubic is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_knot_values() {
        let xs = [0.0, 0.7, 1.1, 2.4, 3.0];
        let ys = [1.0, -0.3, 0.8, 2.2, -1.0];
        let sp = CubicSpline::natural(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(ys.iter()) {
            assert!((sp.eval(*x) - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn exact_on_lines() {
        // Natural end conditions are exact for affine data.
        let xs: Vec<f64> = (0..9).map(|i| 0.3 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 0.5).collect();
        let sp = CubicSpline::natural(&xs, &ys).unwrap();
        for k in 0..50 {
            let x = 0.048 * k as f64;
            assert!((sp.eval(x) - (2.0 * x - 0.5)).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_knots_is_secant() {
        let sp = CubicSpline::natural(&[0.0, 2.0], &[1.0, 5.0]).unwrap();
        assert!((sp.eval(0.5) - 2.0).abs() <= 1e-12);
        assert!((sp.eval(1.5) - 4.0).abs() <= 1e-12);
    }

    #[test]
    fn rejects_non_increasing() {
        let err = CubicSpline::natural(&[0.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::KnotsNotIncreasing(2)));
    }

    #[test]
    fn cubic_in_deep_interior() {
        // End-condition error decays geometrically away from the boundary;
        // 200 knots leave the middle 80% exact to well below 1e-8.
        let g = |x: f64| 2.0 * x * x * x - x * x + 0.5 * x - 0.25;
        let xs: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let sp = CubicSpline::natural(&xs, &ys).unwrap();
        for k in 0..400 {
            let x = 0.1 + 0.8 * k as f64 / 399.0;
            assert!(
                (sp.eval(x) - g(x)).abs() <= 1e-8,
                "x={x}, err={}",
                (sp.eval(x) - g(x)).abs()
            );
        }
    }
}
