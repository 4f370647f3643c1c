//! Small numeric helpers shared across modules: order statistics with
//! linearly interpolated percentiles, permutation-stable summation, and
//! moment utilities.

/// Sums `values` in ascending order (total order over f64). The result is
/// independent of the input ordering, which keeps degree computations
/// bit-identical under row permutations.
pub fn stable_sum(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.iter().sum()
}

/// Percentile via linear interpolation between order statistics of a sorted
/// slice: rank `pct/100 * (m-1)` with fractional part interpolated.
///
/// `sorted` must be nonempty and ascending; `pct` in [0, 100].
pub fn percentile_sorted(sorted: &[f64], pct: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=100.0).contains(&pct));
    let m = sorted.len();
    if m == 1 {
        return sorted[0];
    }
    let pos = pct / 100.0 * (m - 1) as f64;
    let lo = pos.floor() as usize;
    if lo + 1 >= m {
        return sorted[m - 1];
    }
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
}

/// Sorts a copy of `values` and applies [`percentile_sorted`].
pub fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    percentile_sorted(&v, pct)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divide by n).
pub fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

pub fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_worked_cases() {
        // Hand-derived: rank = pct/100*(m-1), linear between neighbors.
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert_eq!(percentile(&v, 50.0), 2.5);
        assert_eq!(percentile(&v, 25.0), 1.75);

        let w = [0.0, 0.0, 0.0, 4.0, 4.0, 4.0, 4.0, 4.0, 4.0];
        assert_eq!(percentile(&w, 25.0), 0.0);
        assert_eq!(percentile(&w, 50.0), 4.0);
    }

    #[test]
    fn percentile_single() {
        assert_eq!(percentile(&[7.5], 30.0), 7.5);
    }

    #[test]
    fn percentile_unsorted_input() {
        let v = [3.0, 1.0, 4.0, 2.0];
        assert_eq!(percentile(&v, 50.0), 2.5);
    }

    #[test]
    fn stable_sum_is_order_free() {
        let a = [1e16, 1.0, -1e16, 2.5, 3.75, -2.0];
        let mut b = a;
        b.reverse();
        assert_eq!(stable_sum(&a).to_bits(), stable_sum(&b).to_bits());
    }

    #[test]
    fn std_is_population() {
        // Var([1,2,3]) with divide-by-n is 2/3.
        let s = population_std(&[1.0, 2.0, 3.0]);
        assert!((s - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
